#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crpa/attention.hpp"
#include "crpa/noise.hpp"
#include "crpa/phase_kernel.hpp"
#include "crpa/position_maps.hpp"
#include "crpa/probe.hpp"
#include "crpa/sim.hpp"
#include "crpa/tensor_io.hpp"
#include "crpa/version.hpp"

namespace {

using crpa::format_double;

// Writes to the path when set, otherwise to stdout.
void emit(const std::optional<std::string>& path, const std::string& content) {
  if (path) {
    std::ofstream out(*path);
    if (!out) throw crpa::IngestError("cannot open " + *path + " for writing");
    out << content;
  } else {
    std::cout << content;
  }
}

std::string provenance_line(const std::string& detail) {
  return "# crpa " + std::string(crpa::kVersion) + " | " + detail + "\n";
}

struct FreqsArgs {
  int dim = 0;
  double base = 10000.0;
  std::optional<double> ntk_s;
  std::optional<double> yarn_s;
  double yarn_train = 0.0;
  double yarn_alpha = 1.0;
  double yarn_beta = 32.0;
  std::optional<std::string> out;
};

int run_freqs(const FreqsArgs& a) {
  const crpa::FrequencySchedule fs(a.dim, a.base);
  std::optional<crpa::FrequencySchedule> ntk;
  std::optional<crpa::NtkParams> ntk_params;
  if (a.ntk_s) {
    ntk_params = crpa::NtkParams::for_dim(*a.ntk_s, a.dim);
    ntk = crpa::ntk_rescale(fs, *ntk_params);
  }
  std::optional<crpa::FrequencySchedule> yarn;
  if (a.yarn_s) {
    if (!(a.yarn_train > 0.0)) {
      throw CLI::ValidationError("--yarn-s needs --yarn-train above 0");
    }
    crpa::YarnParams yp;
    yp.train_length = a.yarn_train;
    yp.extension_factor = *a.yarn_s;
    yp.alpha = a.yarn_alpha;
    yp.beta = a.yarn_beta;
    yarn = crpa::yarn_rescale(fs, yp);
  }

  std::ostringstream os;
  std::ostringstream det;
  det << "freqs dim=" << a.dim << " base=" << format_double(a.base);
  if (a.ntk_s) det << " ntk_s=" << format_double(*a.ntk_s);
  if (a.yarn_s) {
    det << " yarn_s=" << format_double(*a.yarn_s) << " yarn_train=" << format_double(a.yarn_train);
  }
  os << provenance_line(det.str());
  os << "i,omega";
  if (ntk) os << ",omega_ntk,lambda";
  if (yarn) os << ",omega_yarn";
  os << "\n";
  for (int i = 0; i < fs.num_pairs(); ++i) {
    os << i << ',' << format_double(fs.freq(i));
    if (ntk) os << ',' << format_double(ntk->freq(i)) << ',' << format_double(ntk_params->lambda);
    if (yarn) os << ',' << format_double(yarn->freq(i));
    os << "\n";
  }
  emit(a.out, os.str());
  return 0;
}

struct ProbeArgs {
  bool synthetic = false;
  std::optional<std::string> q_path;
  std::optional<std::string> k_path;
  int dim = 64;
  int heads = 8;
  double sharpness = 0.3;
  std::uint64_t seed = 0;
  double base = 10000.0;
  int delta_min = -64;
  int delta_max = 64;
  std::optional<int> timestep;
  std::optional<std::string> out;
};

int run_probe(const ProbeArgs& a) {
  crpa::Matrix Q, K;
  int dim = a.dim;
  if (a.synthetic) {
    const crpa::SyntheticModel model =
        crpa::build_synthetic_model(a.heads, a.dim, 1, a.sharpness, a.seed);
    Q = model.q_patterns();
    K = model.k_patterns();
  } else {
    if (!a.q_path || !a.k_path) {
      throw CLI::ValidationError("probe needs --synthetic or both --q and --k");
    }
    Q = crpa::read_tensor_dump(*a.q_path).data;
    K = crpa::read_tensor_dump(*a.k_path).data;
    dim = static_cast<int>(Q.cols());
  }
  const crpa::FrequencySchedule fs(dim, a.base);
  const crpa::Vector deltas = crpa::integer_deltas(a.delta_min, a.delta_max);
  const crpa::DeltaCurve curve = crpa::kappa_curve(Q, K, fs, deltas, 'h', a.timestep);

  std::ostringstream det;
  det << "probe " << (a.synthetic ? "synthetic" : "dump") << " dim=" << dim
      << " base=" << format_double(a.base) << " deltas=[" << a.delta_min << ".." << a.delta_max
      << "]";
  if (a.synthetic) {
    det << " heads=" << a.heads << " sharpness=" << format_double(a.sharpness)
        << " seed=" << a.seed;
  }
  std::ostringstream os;
  crpa::export_curves({curve}, os, det.str());
  emit(a.out, os.str());
  return 0;
}

struct RdsArgs {
  std::string dump;
  double threshold = crpa::kRdsThreshold;
  std::optional<std::string> out;
};

int run_rds(const RdsArgs& a) {
  const crpa::Matrix W = crpa::read_tensor_dump(a.dump).data;
  const crpa::HeadStats stats = crpa::rds_score(W, a.threshold);
  std::ostringstream os;
  os << provenance_line("rds threshold=" + format_double(a.threshold));
  os << "rds,threshold,rope_dominant\n";
  os << format_double(stats.rds) << ',' << format_double(stats.threshold) << ','
     << (stats.rope_dominant ? 1 : 0) << "\n";
  emit(a.out, os.str());
  return 0;
}

struct DemoArgs {
  int lr_len = 9;
  int hr_begin = 3;
  int hr_end = 5;
  int ratio = 2;
  std::optional<std::string> out;
};

int run_aliasing_demo(const DemoArgs& a) {
  const std::vector<crpa::RegionSpec> regions =
      crpa::make_block_upsampled_regions(a.lr_len, a.hr_begin, a.hr_end, a.ratio);
  const std::vector<double> fractional =
      crpa::map_tokens(crpa::build_fractional_map(regions), regions);
  const std::vector<double> integerized =
      crpa::map_tokens(crpa::build_integerized_map(regions), regions);

  // Matching two-resolution layout for the per-pair table.
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(a.lr_len), 0);
  for (int c = a.hr_begin; c < a.hr_end; ++c) mask[static_cast<std::size_t>(c)] = 1;
  const crpa::MixedGrid grid({crpa::MixedGrid::AxisDef{a.lr_len, a.ratio}}, std::move(mask));

  // Tokens in spatial order.
  std::vector<int> order(static_cast<std::size_t>(grid.num_tokens()));
  for (int t = 0; t < grid.num_tokens(); ++t) order[static_cast<std::size_t>(t)] = t;
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return grid.physical_pos(x)[0] < grid.physical_pos(y)[0];
  });

  auto mapped_err = [&](double mq, double mk, int q, int k) {
    const double dp = (grid.physical_pos(k)[0] - grid.physical_pos(q)[0]) / grid.stride(q, 0);
    return std::abs((mk - mq) - dp);
  };
  auto crpa_err = [&](int q, int k) {
    const double sq = grid.stride(q, 0);
    const double sk = grid.stride(k, 0);
    double kpos, kphys;
    const double qpos = grid.native_pos(q)[0];
    if (sk == sq) {
      kpos = grid.native_pos(k)[0];
      kphys = grid.physical_pos(k)[0];
    } else if (sk > sq) {
      kpos = grid.native_pos(k)[0] * a.ratio;  // coarser key lifted to fine units
      kphys = grid.physical_pos(k)[0];
    } else {
      const double cell = std::floor(grid.native_pos(k)[0] / a.ratio);  // pooled onto base cell
      kpos = cell;
      kphys = cell;
    }
    return std::abs((kpos - qpos) - (kphys - grid.physical_pos(q)[0]) / sq);
  };

  std::ostringstream os;
  std::ostringstream det;
  det << "aliasing-demo lr_len=" << a.lr_len << " hr_begin=" << a.hr_begin
      << " hr_end=" << a.hr_end << " ratio=" << a.ratio;
  os << provenance_line(det.str());
  os << "fractional";
  for (double v : fractional) os << ',' << format_double(v);
  os << "\nintegerized";
  for (double v : integerized) os << ',' << format_double(v);
  os << "\nquery,key,pi_lr,pi_hr,crpa\n";
  for (int qi : order) {
    for (int ki : order) {
      // Mapped positions follow the spatial token order of the sequences.
      const auto spatial_index = [&](int tok) {
        return static_cast<std::size_t>(
            std::find(order.begin(), order.end(), tok) - order.begin());
      };
      const std::size_t qs = spatial_index(qi);
      const std::size_t ks = spatial_index(ki);
      os << qs << ',' << ks << ','
         << format_double(mapped_err(fractional[qs], fractional[ks], qi, ki)) << ','
         << format_double(mapped_err(integerized[qs], integerized[ks], qi, ki)) << ','
         << format_double(crpa_err(qi, ki)) << "\n";
    }
  }
  emit(a.out, os.str());
  return 0;
}

struct SimArgs {
  std::optional<std::string> config_path;
  std::string scheme = "crpa";
  std::vector<std::string> schemes;
  std::optional<int> coarse, mixed, fine;
  std::vector<int> lr_size;
  std::optional<int> ratio;
  std::optional<double> hr_frac;
  std::optional<int> heads, head_dim, channels;
  std::optional<double> sharpness;
  std::optional<std::uint64_t> seed;
  std::optional<bool> boundary;
  std::optional<int> n_pad;
  std::string pool = "mean";
  double pi_ntk_linear = 1.5;
  std::optional<double> ntk_s, yarn_s, yarn_train;
  double yarn_alpha = 1.0, yarn_beta = 32.0, yarn_tau = 1.0;
  bool timings = false;
  std::optional<std::string> out;
};

crpa::ScheduleConfig sim_config(const SimArgs& a) {
  crpa::ScheduleConfig cfg;
  if (a.config_path) {
    std::ifstream in(*a.config_path);
    if (!in) throw crpa::IngestError("cannot open config " + *a.config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw crpa::IngestError("malformed config " + *a.config_path + ": " + e.what());
    }
    cfg = crpa::config_from_json(j);
  }
  if (a.coarse) cfg.coarse_steps = *a.coarse;
  if (a.mixed) cfg.mixed_steps = *a.mixed;
  if (a.fine) cfg.fine_steps = *a.fine;
  if (!a.lr_size.empty()) cfg.lr_size = a.lr_size;
  if (a.ratio) cfg.upsample_ratio = *a.ratio;
  if (a.hr_frac) cfg.hr_token_ratio = *a.hr_frac;
  if (a.heads) cfg.heads = *a.heads;
  if (a.head_dim) cfg.head_dim = *a.head_dim;
  if (a.channels) cfg.channels = *a.channels;
  if (a.sharpness) cfg.sharpness = *a.sharpness;
  if (a.seed) cfg.seed = *a.seed;
  if (a.boundary) cfg.boundary.enabled = *a.boundary;
  if (a.n_pad) cfg.boundary.n_pad = *a.n_pad;
  return cfg;
}

crpa::SchemeParams scheme_params(const SimArgs& a, const std::string& name) {
  crpa::SchemeParams sp;
  sp.scheme = crpa::scheme_from_string(name);
  if (a.pool == "mean") {
    sp.pool = crpa::PoolMode::mean;
  } else if (a.pool == "stride0") {
    sp.pool = crpa::PoolMode::stride0;
  } else {
    throw CLI::ValidationError("--pool must be mean or stride0");
  }
  sp.pi_ntk_linear = a.pi_ntk_linear;
  sp.ntk_extension = a.ntk_s;
  sp.yarn_extension = a.yarn_s;
  sp.yarn_train_length = a.yarn_train;
  sp.yarn_alpha = a.yarn_alpha;
  sp.yarn_beta = a.yarn_beta;
  sp.yarn_temperature = a.yarn_tau;
  return sp;
}

std::string config_detail(const crpa::ScheduleConfig& cfg) {
  std::ostringstream det;
  det << "steps=" << cfg.coarse_steps << '+' << cfg.mixed_steps << '+' << cfg.fine_steps
      << " lr=";
  for (std::size_t i = 0; i < cfg.lr_size.size(); ++i) {
    if (i) det << 'x';
    det << cfg.lr_size[i];
  }
  det << " ratio=" << cfg.upsample_ratio << " hr_frac=" << format_double(cfg.hr_token_ratio)
      << " heads=" << cfg.heads << " head_dim=" << cfg.head_dim
      << " sharpness=" << format_double(cfg.sharpness) << " seed=" << cfg.seed
      << " boundary=" << (cfg.boundary.enabled ? 1 : 0) << " n_pad=" << cfg.boundary.n_pad;
  return det.str();
}

int run_simulate(const SimArgs& a) {
  const crpa::ScheduleConfig cfg = sim_config(a);
  const crpa::SchemeParams sp = scheme_params(a, a.scheme);
  const crpa::SyntheticModel model = crpa::build_synthetic_model(
      cfg.heads, cfg.head_dim, static_cast<int>(cfg.lr_size.size()), cfg.sharpness, cfg.seed);
  const crpa::Matrix ref = crpa::reference_final(model, cfg);
  const crpa::RunResult result = crpa::run_schedule(model, cfg, sp, &ref);
  std::ostringstream os;
  crpa::write_report_csv({result.report}, os,
                         "simulate scheme=" + a.scheme + " " + config_detail(cfg), a.timings);
  emit(a.out, os.str());
  return 0;
}

int run_compare(const SimArgs& a) {
  const crpa::ScheduleConfig cfg = sim_config(a);
  std::vector<std::string> names = a.schemes;
  if (names.empty()) {
    for (crpa::Scheme s : crpa::all_schemes()) names.emplace_back(crpa::to_string(s));
  }
  std::vector<crpa::SchemeParams> params;
  params.reserve(names.size());
  for (const std::string& n : names) params.push_back(scheme_params(a, n));
  const std::vector<crpa::RunReport> reports = crpa::compare_schemes(cfg, params);
  std::ostringstream det;
  det << "compare schemes=";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) det << '+';
    det << names[i];
  }
  det << ' ' << config_detail(cfg);
  std::ostringstream os;
  crpa::write_report_csv(reports, os, det.str(), a.timings);
  emit(a.out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotary phase analysis and cross-resolution attention toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("-V,--version", std::string("crpa ") + crpa::kVersion);

  FreqsArgs fa;
  CLI::App* freqs = app.add_subcommand("freqs", "Print per-pair rotary frequency schedules");
  freqs->add_option("--dim", fa.dim, "Head dimension (even)")->required();
  freqs->add_option("--base", fa.base, "Geometric base");
  freqs->add_option("--ntk-s", fa.ntk_s, "NTK extension factor; adds rescaled columns");
  freqs->add_option("--yarn-s", fa.yarn_s, "YaRN extension factor; adds a rescaled column");
  freqs->add_option("--yarn-train", fa.yarn_train, "YaRN training window length");
  freqs->add_option("--yarn-alpha", fa.yarn_alpha, "YaRN lower rotation count");
  freqs->add_option("--yarn-beta", fa.yarn_beta, "YaRN upper rotation count");
  freqs->add_option("-o,--out", fa.out, "Output file (default stdout)");

  ProbeArgs pa;
  CLI::App* probe = app.add_subcommand("probe", "Offset response curve of a query/key bank");
  probe->add_flag("--synthetic", pa.synthetic, "Use a generated synthetic bank");
  probe->add_option("--q", pa.q_path, "Query dump path");
  probe->add_option("--k", pa.k_path, "Key dump path");
  probe->add_option("--dim", pa.dim, "Synthetic bank head dimension");
  probe->add_option("--heads", pa.heads, "Synthetic bank size");
  probe->add_option("--sharpness", pa.sharpness, "Synthetic bank sharpness in [0,1]");
  probe->add_option("--seed", pa.seed, "Synthetic bank seed");
  probe->add_option("--base", pa.base, "Geometric frequency base");
  probe->add_option("--delta-min", pa.delta_min, "Smallest integer offset");
  probe->add_option("--delta-max", pa.delta_max, "Largest integer offset");
  probe->add_option("--timestep", pa.timestep, "Timestep tag for the curve rows");
  probe->add_option("-o,--out", pa.out, "Output file (default stdout)");

  RdsArgs ra;
  CLI::App* rds = app.add_subcommand("rds", "Rotary dominance score of projection weights");
  rds->add_option("dump", ra.dump, "Weight dump path (rows paired interleaved)")->required();
  rds->add_option("--threshold", ra.threshold, "Dominance threshold");
  rds->add_option("-o,--out", ra.out, "Output file (default stdout)");

  DemoArgs da;
  CLI::App* demo = app.add_subcommand(
      "aliasing-demo", "Unified index sequences and per-pair phase errors on a 1D layout");
  demo->add_option("--lr-len", da.lr_len, "Base cell count");
  demo->add_option("--hr-begin", da.hr_begin, "First upsampled cell");
  demo->add_option("--hr-end", da.hr_end, "One past the last upsampled cell");
  demo->add_option("--ratio", da.ratio, "Upsampling ratio");
  demo->add_option("-o,--out", da.out, "Output file (default stdout)");

  auto add_sim_options = [](CLI::App* cmd, SimArgs& sa, bool single_scheme) {
    if (single_scheme) {
      cmd->add_option("--scheme", sa.scheme,
                      "Position scheme: pi-lr|pi-hr|ntk|pi-ntk|yarn|crpa");
    } else {
      cmd->add_option("--schemes", sa.schemes, "Schemes to compare (default: all)")
          ->delimiter(',');
    }
    cmd->add_option("--config", sa.config_path, "JSON config file");
    cmd->add_option("--coarse", sa.coarse, "Coarse-stage steps");
    cmd->add_option("--mixed", sa.mixed, "Mixed-stage steps");
    cmd->add_option("--fine", sa.fine, "Fine-stage steps");
    cmd->add_option("--lr", sa.lr_size, "Base grid lengths, comma separated")->delimiter(',');
    cmd->add_option("--ratio", sa.ratio, "Upsampling ratio");
    cmd->add_option("--hr-frac", sa.hr_frac, "Upsampled base-area fraction");
    cmd->add_option("--heads", sa.heads, "Synthetic heads");
    cmd->add_option("--head-dim", sa.head_dim, "Head dimension");
    cmd->add_option("--sharpness", sa.sharpness, "Head sharpness in [0,1]");
    cmd->add_option("--channels", sa.channels, "Latent channels");
    cmd->add_option("--seed", sa.seed, "Run seed");
    cmd->add_option("--boundary", sa.boundary, "Enable boundary band exchange (0/1)");
    cmd->add_option("--n-pad", sa.n_pad, "Boundary band width in cells");
    cmd->add_option("--pool", sa.pool, "Finer-key pooling: mean|stride0");
    cmd->add_option("--pi-ntk-linear", sa.pi_ntk_linear, "pi-ntk linear stretch");
    cmd->add_option("--ntk-s", sa.ntk_s, "Override NTK extension factor");
    cmd->add_option("--yarn-s", sa.yarn_s, "Override YaRN extension factor");
    cmd->add_option("--yarn-train", sa.yarn_train, "Override YaRN training window");
    cmd->add_option("--yarn-alpha", sa.yarn_alpha, "YaRN lower rotation count");
    cmd->add_option("--yarn-beta", sa.yarn_beta, "YaRN upper rotation count");
    cmd->add_option("--yarn-tau", sa.yarn_tau, "YaRN logit temperature");
    cmd->add_flag("--timings", sa.timings, "Include wall-clock seconds in the report");
    cmd->add_option("-o,--out", sa.out, "Output file (default stdout)");
  };

  SimArgs sa;
  CLI::App* simulate = app.add_subcommand("simulate", "One schedule run against the reference");
  add_sim_options(simulate, sa, true);

  SimArgs ca;
  CLI::App* compare = app.add_subcommand("compare", "Scheme comparison report");
  add_sim_options(compare, ca, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(freqs)) return run_freqs(fa);
    if (app.got_subcommand(probe)) return run_probe(pa);
    if (app.got_subcommand(rds)) return run_rds(ra);
    if (app.got_subcommand(demo)) return run_aliasing_demo(da);
    if (app.got_subcommand(simulate)) return run_simulate(sa);
    if (app.got_subcommand(compare)) return run_compare(ca);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const crpa::IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
