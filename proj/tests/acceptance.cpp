// Acceptance gate: one line per criterion, nonzero exit on any failure.
// Each check states its tolerance inline; oracles are independent
// re-derivations, not calls back into the code under test.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "crpa/attention.hpp"
#include "crpa/boundary.hpp"
#include "crpa/grid.hpp"
#include "crpa/phase_kernel.hpp"
#include "crpa/position_maps.hpp"
#include "crpa/probe.hpp"
#include "crpa/rope.hpp"
#include "crpa/sim.hpp"
#include "crpa/tensor_io.hpp"
#include "oracles.hpp"

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n";
  if (!ok) ++failures;
}

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string cli_path() {
  const char* env = std::getenv("CRPA_CLI_PATH");
  if (env) return env;
#ifdef CRPA_CLI_PATH
  return CRPA_CLI_PATH;
#else
  return "";
#endif
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CmdResult {
  int code = -1;
  std::string out;
};

CmdResult run_cmd(const std::string& args) {
  const std::string out_path = "acc_stdout.tmp";
  const std::string cmd = cli_path() + " " + args + " > " + out_path + " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  std::remove(out_path.c_str());
  return r;
}

// ---- absolute/relative score agreement --------------------

void check_relative_property() {
  const double start = now_s();
  oracle::Lcg rng(1001);
  double worst = 0.0;
  int samples = 0;
  for (int d : {2, 4, 64, 128}) {
    const crpa::FrequencySchedule fs(d);
    for (int rep = 0; rep < 2500; ++rep) {
      const Eigen::VectorXd q = rng.vector(d);
      const Eigen::VectorXd k = rng.vector(d);
      const double p_q = 200.0 * (rng.uniform() - 0.5);
      const double p_k = 200.0 * (rng.uniform() - 0.5);
      const double via_abs = crpa::score_absolute(q, k, p_q, p_k, fs);
      const double via_rel = crpa::score_relative(q, k, p_k - p_q, fs);
      worst = std::max(worst, std::abs(via_abs - via_rel));
      ++samples;
    }
  }
  const double elapsed = now_s() - start;
  report("relative-shift invariance, 1e-12 over 10k samples",
         worst <= 1e-12 && elapsed < 5.0,
         "max err " + fmt(worst) + ", " + fmt(elapsed) + "s, n=" + std::to_string(samples));
}

// ---- kernel decomposition equivalence ----------------------

void check_kernel_equivalence() {
  const double start = now_s();
  oracle::Lcg rng(2002);
  double worst = 0.0;
  for (int d : {2, 4, 64, 128}) {
    const crpa::FrequencySchedule fs(d);
    for (int rep = 0; rep < 2500; ++rep) {
      const Eigen::VectorXd q = rng.vector(d);
      const Eigen::VectorXd k = rng.vector(d);
      const double delta = 256.0 * (rng.uniform() - 0.5);
      const crpa::PhaseKernel kernel = crpa::decompose(q, k, fs);
      worst = std::max(worst,
                       std::abs(kernel.eval(delta) - crpa::score_relative(q, k, delta, fs)));
    }
  }
  const double elapsed = now_s() - start;
  report("phase-kernel decomposition equivalence, 1e-12 over 10k samples",
         worst <= 1e-12 && elapsed < 5.0, "max err " + fmt(worst) + ", " + fmt(elapsed) + "s");
}

// ---- canonical index sequences, byte-exact ------------------

void check_toy_sequences() {
  const auto regions = crpa::make_block_upsampled_regions(9, 3, 5, 2);
  auto join = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += crpa::format_double(v[i]);
    }
    return s;
  };
  const std::string frac = join(crpa::map_tokens(crpa::build_fractional_map(regions), regions));
  const std::string fine = join(crpa::map_tokens(crpa::build_integerized_map(regions), regions));
  bool ok = frac == "0,1,2,3,3.5,4,4.5,5,6,7,8" && fine == "0,2,4,6,7,8,9,10,12,14,16";

  const CmdResult demo = run_cmd("aliasing-demo");
  ok = ok && demo.code == 0 &&
       demo.out.find("\nfractional,0,1,2,3,3.5,4,4.5,5,6,7,8\n") != std::string::npos &&
       demo.out.find("\nintegerized,0,2,4,6,7,8,9,10,12,14,16\n") != std::string::npos;
  report("canonical 11-token sequences byte-exact, library and CLI", ok,
         "fractional=" + frac + "; integerized=" + fine);
}

// ---- zero aliasing vs both interpolation maps ---------------

struct AliasOracle {
  double all_pairs = 0.0;    // max error over every (query, key) pair
  double cross_pairs = 0.0;  // max error over pairs with distinct strides
};

// Brute-force per-pair phase error for a shared position map.
AliasOracle alias_oracle_map(const crpa::MixedGrid& g, bool fine_units) {
  AliasOracle out;
  const int n = g.num_tokens();
  for (int q = 0; q < n; ++q) {
    for (int k = 0; k < n; ++k) {
      for (int a = 0; a < g.num_axes(); ++a) {
        const double scale = fine_units ? g.axes()[a].ratio : 1.0;
        const double mq = g.physical_pos(q)[a] * scale;
        const double mk = g.physical_pos(k)[a] * scale;
        const double dp = (g.physical_pos(k)[a] - g.physical_pos(q)[a]) / g.stride(q, a);
        const double err = std::abs((mk - mq) - dp);
        out.all_pairs = std::max(out.all_pairs, err);
        if (g.is_hr(q) != g.is_hr(k)) out.cross_pairs = std::max(out.cross_pairs, err);
      }
    }
  }
  return out;
}

// Brute-force per-pair phase error for the stride-class re-indexing:
// same-stride keys stay native, coarser keys stretch by the ratio,
// finer keys collapse onto their base cell.
double alias_oracle_crpa(const crpa::MixedGrid& g) {
  double worst = 0.0;
  auto pair_err = [&](double key_pos, double key_phys, double q_pos, double q_phys,
                      double q_stride) {
    return std::abs((key_pos - q_pos) - (key_phys - q_phys) / q_stride);
  };
  for (int q : g.lr_tokens()) {
    for (int k : g.lr_tokens()) {
      for (int a = 0; a < g.num_axes(); ++a) {
        worst = std::max(worst, pair_err(g.native_pos(k)[a], g.physical_pos(k)[a],
                                         g.native_pos(q)[a], g.physical_pos(q)[a], 1.0));
      }
    }
    for (const auto& grp : g.hr_groups()) {
      for (int a = 0; a < g.num_axes(); ++a) {
        const double cell = grp.cell_idx[a];
        worst = std::max(worst, pair_err(cell, cell, g.native_pos(q)[a], g.physical_pos(q)[a],
                                         1.0));
      }
    }
  }
  for (int q : g.hr_tokens()) {
    for (int k = 0; k < g.num_tokens(); ++k) {
      for (int a = 0; a < g.num_axes(); ++a) {
        const double r = g.axes()[a].ratio;
        const double kp = g.is_hr(k) ? g.native_pos(k)[a] : g.native_pos(k)[a] * r;
        worst = std::max(worst, pair_err(kp, g.physical_pos(k)[a], g.native_pos(q)[a],
                                         g.physical_pos(q)[a], g.stride(q, a)));
      }
    }
  }
  return worst;
}

crpa::MixedGrid random_mixed_grid(oracle::Lcg& rng, int rep) {
  const int d = 1 + rep % 2;
  std::vector<crpa::MixedGrid::AxisDef> axes;
  long long cells = 1;
  for (int a = 0; a < d; ++a) {
    const int len = 3 + static_cast<int>(rng.uniform() * 4.0);
    const int ratio = 2 + static_cast<int>(rng.uniform() * 2.0);
    axes.push_back({len, ratio});
    cells *= len;
  }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(cells));
  for (auto& v : mask) v = rng.uniform() < 0.4 ? 1 : 0;
  mask[static_cast<std::size_t>(rng.uniform() * cells) % mask.size()] = 1;  // ensure one HR
  bool any_lr = false;
  for (auto w : mask) any_lr = any_lr || !w;
  if (!any_lr) mask[0] = 0;  // ensure one LR so both stride classes exist
  return crpa::MixedGrid(std::move(axes), std::move(mask));
}

void check_zero_aliasing() {
  oracle::Lcg rng(4004);
  double worst_crpa = 0.0;
  double worst_gap = 0.0;  // library vs oracle disagreement
  double min_frac_cross = std::numeric_limits<double>::infinity();
  double min_fine_cross = std::numeric_limits<double>::infinity();
  bool ok = true;

  std::vector<crpa::MixedGrid> grids;
  {
    std::vector<std::uint8_t> mask(9, 0);
    mask[3] = mask[4] = 1;
    grids.emplace_back(std::vector<crpa::MixedGrid::AxisDef>{{9, 2}}, std::move(mask));
  }
  for (int rep = 0; rep < 20; ++rep) grids.push_back(random_mixed_grid(rng, rep));

  for (const crpa::MixedGrid& g : grids) {
    crpa::SchemeParams p;
    p.scheme = crpa::Scheme::crpa;
    const double lib_crpa = crpa::phase_consistency_error(g, p);
    const double orc_crpa = alias_oracle_crpa(g);
    worst_crpa = std::max({worst_crpa, lib_crpa, orc_crpa});
    worst_gap = std::max(worst_gap, std::abs(lib_crpa - orc_crpa));

    p.scheme = crpa::Scheme::pi_lr;
    const double lib_frac = crpa::phase_consistency_error(g, p);
    const AliasOracle orc_frac = alias_oracle_map(g, false);
    worst_gap = std::max(worst_gap, std::abs(lib_frac - orc_frac.all_pairs));
    min_frac_cross = std::min(min_frac_cross, orc_frac.cross_pairs);

    p.scheme = crpa::Scheme::pi_hr;
    const double lib_fine = crpa::phase_consistency_error(g, p);
    const AliasOracle orc_fine = alias_oracle_map(g, true);
    worst_gap = std::max(worst_gap, std::abs(lib_fine - orc_fine.all_pairs));
    min_fine_cross = std::min(min_fine_cross, orc_fine.cross_pairs);
  }
  ok = worst_crpa <= 1e-12 && worst_gap <= 1e-12 && min_frac_cross >= 0.5 &&
       min_fine_cross >= 0.5;
  report("stride-class re-indexing alias-free on 21 layouts, maps off by >= 0.5", ok,
         "crpa max " + fmt(worst_crpa) + ", oracle gap " + fmt(worst_gap) +
             ", fractional cross min " + fmt(min_frac_cross) + ", fine cross min " +
             fmt(min_fine_cross));
}

// ---- single-stride degeneracy -------------------------------

void check_degenerate_attention() {
  oracle::Lcg rng(5005);
  auto rand_mat = [&](int r, int c) {
    crpa::Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = rng.symmetric();
    return m;
  };
  const crpa::ChannelLayout layout({crpa::FrequencySchedule(8), crpa::FrequencySchedule(8)});
  crpa::SchemeParams p;
  p.scheme = crpa::Scheme::crpa;
  double worst = 0.0;

  {  // all tokens at base resolution
    const crpa::MixedGrid g({{4, 2}, {3, 2}}, std::vector<std::uint8_t>(12, 0));
    const crpa::TokenGrid ref({{4, 1.0}, {3, 1.0}});
    const crpa::Matrix Q = rand_mat(12, 16), K = rand_mat(12, 16), V = rand_mat(12, 3);
    const crpa::Matrix got = crpa::attend_mixed(g, Q, K, V, layout, p).values;
    const crpa::Matrix want = crpa::attend_reference(ref, Q, K, V, layout).values;
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
  }
  {  // every cell upsampled
    const crpa::MixedGrid g({{2, 2}, {3, 2}}, std::vector<std::uint8_t>(6, 1));
    const crpa::TokenGrid ref({{4, 0.5}, {6, 0.5}});
    const crpa::Matrix Q = rand_mat(24, 16), K = rand_mat(24, 16), V = rand_mat(24, 2);
    const crpa::Matrix got = crpa::attend_mixed(g, Q, K, V, layout, p).values;
    const crpa::Matrix want = crpa::attend_reference(ref, Q, K, V, layout).values;
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
  }
  report("single-stride layouts collapse to reference attention, 1e-12", worst <= 1e-12,
         "max elementwise gap " + fmt(worst));
}

// ---- offset-response sanity ---------------------------------

void check_kappa_sanity() {
  bool argmax_ok = true;
  double hwhm = 0.0;
  {
    const crpa::SyntheticModel bank = crpa::build_synthetic_model(8, 64, 1, 0.3, 0);
    const crpa::FrequencySchedule& fs = bank.layout.group(0).freqs;
    const crpa::DeltaCurve curve =
        crpa::kappa_curve(bank.q_patterns(), bank.k_patterns(), fs, crpa::integer_deltas(-64, 64));
    int zero = -1;
    for (int i = 0; i < curve.deltas.size(); ++i) {
      if (curve.deltas[i] == 0.0) zero = i;
    }
    for (int i = 0; i < curve.means.size(); ++i) {
      if (i != zero && curve.means[i] >= curve.means[zero]) argmax_ok = false;
    }
    hwhm = crpa::half_width_at_half_max(curve);
  }

  double period_err = 0.0;
  {
    oracle::Lcg rng(6006);
    const double omega = 0.05;
    const double period = 2.0 * std::numbers::pi / omega;
    const crpa::FrequencySchedule fs(2, Eigen::VectorXd::Constant(1, omega));
    const crpa::Matrix Q = [&] {
      crpa::Matrix m(3, 2);
      for (int i = 0; i < 6; ++i) m(i / 2, i % 2) = rng.symmetric();
      return m;
    }();
    const crpa::Matrix K = [&] {
      crpa::Matrix m(3, 2);
      for (int i = 0; i < 6; ++i) m(i / 2, i % 2) = rng.symmetric();
      return m;
    }();
    const std::vector<double> probes = {-7.3, 0.0, 5.25, 18.0};
    crpa::Vector deltas(8);
    for (int i = 0; i < 4; ++i) {
      deltas[2 * i] = probes[static_cast<std::size_t>(i)];
      deltas[2 * i + 1] = probes[static_cast<std::size_t>(i)] + period;
    }
    const crpa::DeltaCurve curve = crpa::kappa_curve(Q, K, fs, deltas);
    for (int i = 0; i < 4; ++i) {
      period_err = std::max(period_err, std::abs(curve.means[2 * i + 1] - curve.means[2 * i]));
    }
  }
  report("offset response peaks at zero, 2 pi/omega periodic, half-width <= 3",
         argmax_ok && period_err <= 1e-9 && hwhm <= 3.0,
         "period err " + fmt(period_err) + ", half-width " + fmt(hwhm));
}

// ---- rotary dominance frozen values --------------------------

void check_rds_values() {
  crpa::Matrix parallel(4, 3);  // norms 1,2,5,10: cosines exact in binary
  parallel << 1, 0, 0, 2, 0, 0, 0, 3, 4, 0, 6, 8;
  crpa::Matrix ortho(4, 2);
  ortho << 1, 0, 0, 1, 2, 0, 0, -3;
  crpa::Matrix mixed(4, 2);  // one 60-degree pair, one 90-degree pair
  mixed << 1, 0, 0.5, std::sqrt(3.0) / 2.0, 1, 0, 0, 1;

  const auto p = crpa::rds_score(parallel);
  const auto o = crpa::rds_score(ortho);
  const auto m = crpa::rds_score(mixed);
  const bool ok = p.rds == 1.0 && o.rds == 0.0 && std::abs(m.rds - 0.25) <= 1e-12 &&
                  p.rope_dominant && !o.rope_dominant && m.rope_dominant &&
                  m.threshold == 0.085;
  report("dominance score: parallel 1.0, orthogonal 0.0, 60/90 mix 0.25, threshold 0.085", ok,
         "got " + fmt(p.rds) + " / " + fmt(o.rds) + " / " + fmt(m.rds));
}

// ---- frequency rescaling closed forms -------------------------

void check_rescaling_forms() {
  bool ok = true;
  std::string detail;

  const auto p42 = crpa::NtkParams::for_dim(2.0, 4);
  ok = ok && p42.lambda == 4.0;
  detail += "lambda(d=4,s=2)=" + fmt(p42.lambda);

  double omega0_worst = 0.0;
  for (double s : {1.25, 2.0, 3.0, 5.5, 8.0}) {
    for (int d : {4, 8, 64}) {
      const crpa::FrequencySchedule fs(d);
      const crpa::FrequencySchedule out = crpa::ntk_rescale(fs, crpa::NtkParams::for_dim(s, d));
      omega0_worst = std::max(omega0_worst, std::abs(out.freq(0) - 1.0));
    }
  }
  ok = ok && omega0_worst == 0.0;
  detail += ", omega0 drift " + fmt(omega0_worst);

  crpa::YarnParams yp;
  yp.train_length = 64.0;
  yp.extension_factor = 2.0;
  const double two_pi = 2.0 * std::numbers::pi;
  // Below the ramp: full interpolation. Above: untouched. Midpoint: half blend.
  const double om_low = 0.5 * two_pi / yp.train_length;
  const double om_high = 40.0 * two_pi / yp.train_length;
  const double om_mid = 0.5 * (yp.alpha + yp.beta) * two_pi / yp.train_length;
  const auto one = [&](double om) {
    return crpa::yarn_rescale(crpa::FrequencySchedule(2, Eigen::VectorXd::Constant(1, om)), yp)
        .freq(0);
  };
  const double low_err = std::abs(one(om_low) - om_low / 2.0);
  const double high_err = std::abs(one(om_high) - om_high);
  const double mid_err = std::abs(one(om_mid) - (0.5 * om_mid + 0.5 * om_mid / 2.0));
  ok = ok && low_err == 0.0 && high_err == 0.0 && mid_err <= 1e-12;
  detail += ", blend errs " + fmt(low_err) + "/" + fmt(high_err) + "/" + fmt(mid_err);

  report("closed-form rescaling: exponent, fastest-pair invariance, ramp blend", ok, detail);
}

// ---- scheme ranking and monotone deviation --------------------

void check_ranking() {
  const double start = now_s();
  crpa::ScheduleConfig cfg;  // defaults: 32x32, ratio 2, hr 0.3, 10+20 steps
  const crpa::SyntheticModel model =
      crpa::build_synthetic_model(cfg.heads, cfg.head_dim, 2, cfg.sharpness, cfg.seed);
  const crpa::Matrix ref = crpa::reference_final(model, cfg);

  auto rms_for = [&](crpa::Scheme s, double hr_frac) {
    crpa::SchemeParams sp;
    sp.scheme = s;
    crpa::ScheduleConfig c = cfg;
    c.hr_token_ratio = hr_frac;
    return crpa::run_schedule(model, c, sp, &ref).report.rms_global;
  };

  const double r_crpa = rms_for(crpa::Scheme::crpa, cfg.hr_token_ratio);
  const double r_frac = rms_for(crpa::Scheme::pi_lr, cfg.hr_token_ratio);
  const double r_fine = rms_for(crpa::Scheme::pi_hr, cfg.hr_token_ratio);
  const double compare_elapsed = now_s() - start;

  std::vector<double> sweep;
  for (double f : {0.1, 0.3, 0.6, 1.0}) sweep.push_back(rms_for(crpa::Scheme::crpa, f));
  bool monotone = true;
  for (std::size_t i = 1; i < sweep.size(); ++i) monotone = monotone && sweep[i] <= sweep[i - 1];

  const bool ok =
      r_crpa < r_frac && r_crpa < r_fine && monotone && compare_elapsed < 60.0;
  std::string detail = "crpa " + fmt(r_crpa) + " < pi-lr " + fmt(r_frac) + ", pi-hr " +
                       fmt(r_fine) + "; sweep";
  for (double v : sweep) detail += " " + fmt(v);
  detail += "; " + fmt(compare_elapsed) + "s";
  report("scheme ranking and monotone deviation over upsampled fraction", ok, detail);
}

// ---- boundary module -----------------------------------------

void check_boundary() {
  oracle::Lcg rng(1010);
  bool ok = true;
  std::string detail;

  // Default pad width is 2 on both sides.
  std::vector<std::uint8_t> mask(49, 0);
  for (int r = 2; r <= 4; ++r)
    for (int c = 2; c <= 4; ++c) mask[static_cast<std::size_t>(7 * r + c)] = 1;
  const crpa::MixedGrid grid({{7, 2}, {7, 2}}, std::move(mask));
  const crpa::BoundaryBand dflt = crpa::make_boundary_band(grid);
  const crpa::BoundaryBand two = crpa::make_boundary_band(grid, 2, 2);
  ok = ok && dflt.n_pad_lr == 2 && dflt.n_pad_hr == 2 && dflt.lr_band == two.lr_band &&
       dflt.hr_band == two.hr_band;

  // Locality: cells outside both bands come back bit-identical.
  const crpa::NoiseSchedule lin = crpa::NoiseSchedule::linear(6);
  auto rand_field = [&](long long n, int c) {
    crpa::Matrix m(n, c);
    for (long long i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = rng.symmetric();
    return m;
  };
  crpa::LatentState lr{rand_field(49, 2), rand_field(49, 2), 4, lin.at(4)};
  crpa::LatentState hr{rand_field(196, 2), rand_field(196, 2), 4, lin.at(4)};
  const auto [lr2, hr2] = crpa::expand_and_replace(lr, hr, dflt, lin, 77);
  double outside_delta = 0.0;
  for (int i = 0; i < 49; ++i) {
    if (!dflt.lr_band[static_cast<std::size_t>(i)]) {
      outside_delta =
          std::max(outside_delta, (lr2.x_t.row(i) - lr.x_t.row(i)).cwiseAbs().maxCoeff());
    }
  }
  for (int i = 0; i < 196; ++i) {
    if (!dflt.hr_band[static_cast<std::size_t>(i)]) {
      outside_delta =
          std::max(outside_delta, (hr2.x_t.row(i) - hr.x_t.row(i)).cwiseAbs().maxCoeff());
    }
  }
  ok = ok && outside_delta == 0.0;
  detail += "outside-band delta " + fmt(outside_delta);

  // Downsampling inverts nearest upsampling.
  double inv_err = 0.0;
  const crpa::GridShape shape{{6, 5}};
  const crpa::Matrix field = rand_field(30, 3);
  for (int factor : {2, 3}) {
    const crpa::Matrix up = crpa::resize_latent_up(field, shape, factor);
    crpa::GridShape fine = shape;
    for (int& d : fine.dims) d *= factor;
    inv_err = std::max(
        inv_err, (crpa::resize_latent_down(up, fine, factor) - field).cwiseAbs().maxCoeff());
  }
  ok = ok && inv_err <= 1e-12;
  detail += ", down(up(x)) err " + fmt(inv_err);

  // Monte Carlo: renoised mean stays within 3 sigma / sqrt(N) of the blend.
  const long long N = 100000;
  const double sigma = 0.5;
  const crpa::Matrix x0 = crpa::Matrix::Constant(N / 100, 100, 0.7);
  const crpa::Matrix noisy = crpa::renoise(x0, 1, crpa::NoiseSchedule::linear(2), 31);
  const double mean = noisy.mean();
  const double want = (1.0 - sigma) * 0.7;
  const double tol = 3.0 * sigma / std::sqrt(static_cast<double>(N));
  ok = ok && std::abs(mean - want) <= tol;
  detail += ", mc mean gap " + fmt(std::abs(mean - want)) + " tol " + fmt(tol);

  report("boundary bands: default pad 2, locality, resize inverse, renoise stats", ok, detail);
}

// ---- CLI determinism ------------------------------------------

void check_cli_determinism() {
  const std::vector<std::string> invocations = {
      "freqs --dim 64 --ntk-s 2 --yarn-s 2 --yarn-train 32",
      "probe --synthetic --dim 32 --heads 4 --seed 3 --delta-min -32 --delta-max 32",
      "aliasing-demo --lr-len 7 --hr-begin 2 --hr-end 4 --ratio 3",
      "simulate --scheme yarn --lr 8,8 --coarse 2 --mixed 3 --heads 2 --head-dim 16 "
      "--channels 1 --seed 9",
      "compare --schemes pi-lr,crpa --lr 8,8 --coarse 1 --mixed 2 --heads 2 --head-dim 16 "
      "--channels 1",
  };
  bool ok = !cli_path().empty();
  int mismatches = 0;
  for (const std::string& args : invocations) {
    const CmdResult a = run_cmd(args);
    const CmdResult b = run_cmd(args);
    if (a.code != 0 || b.code != 0 || a.out != b.out || a.out.empty()) {
      ok = false;
      ++mismatches;
    }
  }
  // File output path: identical bytes across reruns.
  const std::string f1 = "acc_out1.csv", f2 = "acc_out2.csv";
  run_cmd("freqs --dim 16 -o " + f1);
  run_cmd("freqs --dim 16 -o " + f2);
  const std::string c1 = slurp(f1), c2 = slurp(f2);
  ok = ok && !c1.empty() && c1 == c2;
  std::remove(f1.c_str());
  std::remove(f2.c_str());
  report("CLI reruns byte-identical across all subcommands", ok,
         mismatches == 0 ? "5 invocations + file output" :
                           std::to_string(mismatches) + " mismatched invocations");
}

}  // namespace

int main() {
  check_relative_property();
  check_kernel_equivalence();
  check_toy_sequences();
  check_zero_aliasing();
  check_degenerate_attention();
  check_kappa_sanity();
  check_rds_values();
  check_rescaling_forms();
  check_ranking();
  check_boundary();
  check_cli_determinism();
  return failures == 0 ? 0 : 1;
}
