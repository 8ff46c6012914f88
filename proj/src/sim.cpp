#include "crpa/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "crpa/noise.hpp"
#include "crpa/tensor_io.hpp"
#include "crpa/version.hpp"

namespace crpa {

namespace {

constexpr double kEta = 0.2;  // per-step pull strength

enum StreamTag : std::uint64_t {
  kInitLr = 0x51301,
  kInitHr = 0x51302,
  kInitMixed = 0x51303,
  kPromote = 0x51304,
  kTargetTag = 0x51305,
  kAmpTag = 0x51306,
  kPhaseTag = 0x51307,
};

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

long long flat_index(const Eigen::Ref<const Vector>& idx, const std::vector<int>& dims) {
  long long f = 0;
  for (std::size_t a = 0; a < dims.size(); ++a) {
    f = f * dims[a] + static_cast<long long>(idx[static_cast<Eigen::Index>(a)]);
  }
  return f;
}

// Token field -> dense base-grid field. Upsampled cells take the mean of
// their member tokens.
Matrix base_view(const MixedGrid& grid, const Matrix& x) {
  const GridShape shape{grid.lr_dims()};
  Matrix out = Matrix::Zero(shape.size(), x.cols());
  for (int t : grid.lr_tokens()) out.row(grid.base_cell(t)) = x.row(t);
  for (const MixedGrid::PoolGroup& g : grid.hr_groups()) {
    for (int t : g.members) out.row(g.cell) += x.row(t);
    out.row(g.cell) /= static_cast<double>(g.members.size());
  }
  return out;
}

// Token field -> dense fine-grid field. Base cells replicate.
Matrix fine_view(const MixedGrid& grid, const Matrix& x) {
  const GridShape hr_shape{grid.hr_dims()};
  Matrix out(hr_shape.size(), x.cols());
  const int d = grid.num_axes();
  std::vector<int> idx(d);
  const long long n = hr_shape.size();
  // Fill base-cell replication first, then overwrite native fine tokens.
  Matrix base = base_view(grid, x);
  for (long long i = 0; i < n; ++i) {
    long long rem = i;
    long long cell = 0;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % grid.hr_dims()[a]);
      rem /= grid.hr_dims()[a];
    }
    for (int a = 0; a < d; ++a) cell = cell * grid.lr_dims()[a] + idx[a] / grid.axes()[a].ratio;
    out.row(i) = base.row(cell);
  }
  for (int t : grid.hr_tokens()) {
    out.row(flat_index(grid.native_pos(t), grid.hr_dims())) = x.row(t);
  }
  return out;
}

// Target values gathered onto a grid's tokens.
Matrix target_tokens(const MixedGrid& grid, const Matrix& target_lr, const Matrix& target_hr) {
  Matrix out(grid.num_tokens(), target_lr.cols());
  for (int t : grid.lr_tokens()) out.row(t) = target_lr.row(grid.base_cell(t));
  for (int t : grid.hr_tokens()) {
    out.row(t) = target_hr.row(flat_index(grid.native_pos(t), grid.hr_dims()));
  }
  return out;
}

// Base-grid field promoted onto a grid's tokens at timestep t: base
// tokens copy their cell, upsampled tokens renoise the replicated value
// at the current sigma. Noise is keyed by the fine-grid flat index so the
// draw for a token does not depend on the layout around it.
Matrix promote(const MixedGrid& grid, const Matrix& lr_field, int t,
               const NoiseSchedule& schedule, std::uint64_t seed) {
  const double s = schedule.at(t);
  const std::uint64_t stream = stream_id(kPromote, static_cast<std::uint64_t>(t));
  const Eigen::Index ch = lr_field.cols();
  Matrix out(grid.num_tokens(), ch);
  for (int tok : grid.lr_tokens()) out.row(tok) = lr_field.row(grid.base_cell(tok));
  for (int tok : grid.hr_tokens()) {
    const long long fine = flat_index(grid.native_pos(tok), grid.hr_dims());
    for (Eigen::Index c = 0; c < ch; ++c) {
      const double eps = gaussian_at(seed, stream, static_cast<std::uint64_t>(fine * ch + c));
      out(tok, c) = (1.0 - s) * lr_field(grid.base_cell(tok), c) + s * eps;
    }
  }
  return out;
}

MixedGrid uniform_grid(const ScheduleConfig& cfg, bool fine) {
  std::vector<MixedGrid::AxisDef> axes;
  long long cells = 1;
  for (int len : cfg.lr_size) {
    axes.push_back(MixedGrid::AxisDef{len, cfg.upsample_ratio});
    cells *= len;
  }
  return MixedGrid(std::move(axes),
                   std::vector<std::uint8_t>(static_cast<std::size_t>(cells), fine ? 1 : 0));
}

struct StageTimer {
  double start = now_seconds();
  double stop() const { return now_seconds() - start; }
};

}  // namespace

Matrix SyntheticModel::q_patterns() const {
  Matrix m(static_cast<Eigen::Index>(heads.size()), head_dim);
  for (std::size_t h = 0; h < heads.size(); ++h) m.row(static_cast<Eigen::Index>(h)) = heads[h].q_dir;
  return m;
}

Matrix SyntheticModel::k_patterns() const {
  Matrix m(static_cast<Eigen::Index>(heads.size()), head_dim);
  for (std::size_t h = 0; h < heads.size(); ++h) m.row(static_cast<Eigen::Index>(h)) = heads[h].k_dir;
  return m;
}

SyntheticModel build_synthetic_model(int num_heads, int head_dim, int num_axes, double sharpness,
                                     std::uint64_t seed, double score_scale) {
  if (num_heads < 1) throw std::invalid_argument("need at least one head");
  if (num_axes < 1) throw std::invalid_argument("need at least one axis");
  if (head_dim % (2 * num_axes) != 0) {
    throw std::invalid_argument("head dimension must split into even per-axis groups");
  }
  if (sharpness < 0.0 || sharpness > 1.0) {
    throw std::invalid_argument("sharpness must be in [0, 1]");
  }
  if (score_scale < 0.0) score_scale = head_dim;

  const int group_dim = head_dim / num_axes;
  std::vector<FrequencySchedule> per_axis;
  for (int a = 0; a < num_axes; ++a) per_axis.emplace_back(group_dim);

  SyntheticModel model{head_dim, ChannelLayout(std::move(per_axis)), {}, sharpness, seed};

  const int pairs = group_dim / 2;
  const int m = std::max(1, static_cast<int>(std::lround(sharpness * pairs)));
  for (int h = 0; h < num_heads; ++h) {
    // Uniform weight on the m fastest pairs per axis, with mild seeded
    // jitter; normalization makes a single-pair head exactly flat.
    std::vector<double> w(static_cast<std::size_t>(num_axes * pairs), 0.0);
    double total = 0.0;
    for (int a = 0; a < num_axes; ++a) {
      for (int i = 0; i < m; ++i) {
        const double u = uniform_at(seed, stream_id(kAmpTag, static_cast<std::uint64_t>(h)),
                                    static_cast<std::uint64_t>(a * pairs + i));
        const double v = 1.0 + 0.2 * (2.0 * u - 1.0);
        w[static_cast<std::size_t>(a * pairs + i)] = v;
        total += v;
      }
    }
    SyntheticHead head;
    head.q_dir = Vector::Zero(head_dim);
    head.k_dir = Vector::Zero(head_dim);
    for (int a = 0; a < num_axes; ++a) {
      const int offset = model.layout.group(a).offset;
      for (int i = 0; i < pairs; ++i) {
        const double amp = score_scale * w[static_cast<std::size_t>(a * pairs + i)] / total;
        if (amp == 0.0) continue;
        const double psi =
            2.0 * std::numbers::pi *
            uniform_at(seed, stream_id(kPhaseTag, static_cast<std::uint64_t>(h)),
                       static_cast<std::uint64_t>(a * pairs + i));
        const double r = std::sqrt(amp);
        head.q_dir[offset + 2 * i] = r * std::cos(psi);
        head.q_dir[offset + 2 * i + 1] = r * std::sin(psi);
      }
    }
    head.k_dir = head.q_dir;  // zero relative phase: kernel peaks at offset 0
    model.heads.push_back(std::move(head));
  }
  return model;
}

ScheduleConfig config_from_json(const nlohmann::json& j) {
  ScheduleConfig cfg;
  if (j.contains("coarse_steps")) cfg.coarse_steps = j.at("coarse_steps").get<int>();
  if (j.contains("mixed_steps")) cfg.mixed_steps = j.at("mixed_steps").get<int>();
  if (j.contains("fine_steps")) cfg.fine_steps = j.at("fine_steps").get<int>();
  if (j.contains("lr_size")) cfg.lr_size = j.at("lr_size").get<std::vector<int>>();
  if (j.contains("upsample_ratio")) cfg.upsample_ratio = j.at("upsample_ratio").get<int>();
  if (j.contains("hr_token_ratio")) cfg.hr_token_ratio = j.at("hr_token_ratio").get<double>();
  if (j.contains("heads")) cfg.heads = j.at("heads").get<int>();
  if (j.contains("head_dim")) cfg.head_dim = j.at("head_dim").get<int>();
  if (j.contains("sharpness")) cfg.sharpness = j.at("sharpness").get<double>();
  if (j.contains("channels")) cfg.channels = j.at("channels").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("boundary")) {
    const auto& b = j.at("boundary");
    if (b.contains("enabled")) cfg.boundary.enabled = b.at("enabled").get<bool>();
    if (b.contains("n_pad")) cfg.boundary.n_pad = b.at("n_pad").get<int>();
  }
  return cfg;
}

nlohmann::json config_to_json(const ScheduleConfig& cfg) {
  return nlohmann::json{{"coarse_steps", cfg.coarse_steps},
                        {"mixed_steps", cfg.mixed_steps},
                        {"fine_steps", cfg.fine_steps},
                        {"lr_size", cfg.lr_size},
                        {"upsample_ratio", cfg.upsample_ratio},
                        {"hr_token_ratio", cfg.hr_token_ratio},
                        {"heads", cfg.heads},
                        {"head_dim", cfg.head_dim},
                        {"sharpness", cfg.sharpness},
                        {"channels", cfg.channels},
                        {"seed", cfg.seed},
                        {"boundary",
                         {{"enabled", cfg.boundary.enabled}, {"n_pad", cfg.boundary.n_pad}}}};
}

Matrix target_latent(const std::vector<int>& hr_dims, int channels, std::uint64_t seed) {
  if (channels < 1) throw std::invalid_argument("need at least one channel");
  const GridShape shape{hr_dims};
  const long long n = shape.size();
  const int d = static_cast<int>(hr_dims.size());
  constexpr int kModes = 4;
  Matrix out(n, channels);
  std::vector<int> idx(d);
  for (int c = 0; c < channels; ++c) {
    const std::uint64_t stream = stream_id(kTargetTag, static_cast<std::uint64_t>(c));
    std::vector<double> amp(kModes), phase(kModes);
    std::vector<std::vector<int>> waves(kModes, std::vector<int>(d));
    for (int m = 0; m < kModes; ++m) {
      std::uint64_t cursor = static_cast<std::uint64_t>(m) * (d + 2);
      amp[m] = 0.7 * gaussian_at(seed, stream, cursor++);
      phase[m] = 2.0 * std::numbers::pi * uniform_at(seed, stream, cursor++);
      for (int a = 0; a < d; ++a) {
        waves[m][a] = static_cast<int>(uniform_at(seed, stream, cursor++) * 5.0);
      }
    }
    for (long long i = 0; i < n; ++i) {
      long long rem = i;
      for (int a = d - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(rem % hr_dims[a]);
        rem /= hr_dims[a];
      }
      double v = 0.0;
      for (int m = 0; m < kModes; ++m) {
        double arg = phase[m];
        for (int a = 0; a < d; ++a) {
          arg += 2.0 * std::numbers::pi * waves[m][a] * idx[a] / hr_dims[a];
        }
        v += amp[m] * std::sin(arg);
      }
      bool in_bump = true;
      for (int a = 0; a < d; ++a) {
        in_bump = in_bump && idx[a] >= hr_dims[a] / 4 && idx[a] < hr_dims[a] / 2;
      }
      if (in_bump) v += 1.2;
      out(i, c) = v;
    }
  }
  return out;
}

Matrix reference_final(const SyntheticModel& model, const ScheduleConfig& cfg) {
  ScheduleConfig ref_cfg = cfg;
  ref_cfg.coarse_steps = 0;
  ref_cfg.mixed_steps = 0;
  ref_cfg.fine_steps = cfg.total_steps();
  SchemeParams native;
  native.scheme = Scheme::crpa;
  return run_schedule(model, ref_cfg, native).final_hr;
}

RunResult run_schedule(const SyntheticModel& model, const ScheduleConfig& cfg,
                       const SchemeParams& scheme, const Matrix* reference) {
  if (cfg.total_steps() < 1) throw std::invalid_argument("need at least one step");
  if (cfg.coarse_steps < 0 || cfg.mixed_steps < 0 || cfg.fine_steps < 0) {
    throw std::invalid_argument("step counts must be non-negative");
  }
  if (cfg.upsample_ratio < 1) throw std::invalid_argument("ratio must be a positive integer");
  if (static_cast<int>(cfg.lr_size.size()) != model.layout.num_axes()) {
    throw std::invalid_argument("model axes must match grid axes");
  }

  const int T = cfg.total_steps();
  const NoiseSchedule schedule = NoiseSchedule::linear(T);
  const MixedGrid lr_grid = uniform_grid(cfg, false);
  const MixedGrid hr_grid = uniform_grid(cfg, true);
  const MixedGrid mixed_grid =
      MixedGrid::center_box(cfg.lr_size, cfg.upsample_ratio, cfg.hr_token_ratio);

  const Matrix target_hr = target_latent(hr_grid.hr_dims(), cfg.channels, cfg.seed);
  const Matrix target_lr =
      resize_latent_down(target_hr, GridShape{hr_grid.hr_dims()}, cfg.upsample_ratio);

  const Matrix qp = model.q_patterns();
  const Matrix kp = model.k_patterns();
  SchemeParams native;
  native.scheme = Scheme::crpa;
  native.pool = scheme.pool;

  RunResult result;
  result.report.scheme = std::string(to_string(scheme.scheme));
  result.report.coarse_steps = cfg.coarse_steps;
  result.report.mixed_steps = cfg.mixed_steps;
  result.report.fine_steps = cfg.fine_steps;

  int t = T;
  Matrix x;                 // token field on the current grid
  const MixedGrid* cur = nullptr;

  auto run_stage = [&](const MixedGrid& grid, const SchemeParams& params, int steps,
                       bool boundary_active) {
    if (steps == 0) return;
    const MixedAttentionOperator op(grid, qp, kp, model.layout, params);
    const Matrix target = target_tokens(grid, target_lr, target_hr);
    BoundaryBand band;
    const bool exchange =
        boundary_active && cfg.boundary.enabled && grid.num_lr_tokens() > 0 &&
        grid.num_hr_tokens() > 0;
    if (exchange) band = make_boundary_band(grid, cfg.boundary.n_pad, cfg.boundary.n_pad);
    for (int s = 0; s < steps; ++s) {
      const Matrix pulled = 0.5 * op.apply(x) + 0.5 * target;
      x = (1.0 - kEta) * x + kEta * pulled;
      if (exchange && t >= 1) {
        LatentState lr_state{base_view(grid, x), base_view(grid, x), t, schedule.at(t)};
        LatentState hr_state{fine_view(grid, x), fine_view(grid, x), t, schedule.at(t)};
        auto [lr_next, hr_next] = expand_and_replace(lr_state, hr_state, band, schedule, cfg.seed);
        for (int tok : grid.lr_tokens()) {
          const int cell = grid.base_cell(tok);
          if (band.lr_band[static_cast<std::size_t>(cell)]) {
            x.row(tok) = lr_next.x_t.row(cell);
          }
        }
        for (int tok : grid.hr_tokens()) {
          const long long fine = flat_index(grid.native_pos(tok), grid.hr_dims());
          if (band.hr_band[static_cast<std::size_t>(fine)]) {
            x.row(tok) = hr_next.x_t.row(fine);
          }
        }
      }
      --t;
    }
  };

  // Coarse stage: base grid, native positions.
  {
    StageTimer timer;
    if (cfg.coarse_steps > 0) {
      x = gaussian_matrix(lr_grid.num_tokens(), cfg.channels, cfg.seed, stream_id(kInitLr));
      cur = &lr_grid;
      run_stage(lr_grid, native, cfg.coarse_steps, false);
    }
    result.report.coarse_seconds = timer.stop();
  }

  // Mixed stage under the scheme.
  {
    StageTimer timer;
    if (cfg.mixed_steps > 0) {
      if (cur == nullptr) {
        x = gaussian_matrix(mixed_grid.num_tokens(), cfg.channels, cfg.seed,
                            stream_id(kInitMixed));
      } else {
        x = promote(mixed_grid, base_view(*cur, x), t, schedule, cfg.seed);
      }
      cur = &mixed_grid;
      run_stage(mixed_grid, scheme, cfg.mixed_steps, true);
    }
    result.report.mixed_seconds = timer.stop();
  }

  // Fine stage: full resolution, native positions.
  {
    StageTimer timer;
    if (cfg.fine_steps > 0) {
      if (cur == nullptr) {
        x = gaussian_matrix(hr_grid.num_tokens(), cfg.channels, cfg.seed, stream_id(kInitHr));
      } else {
        x = promote(hr_grid, base_view(*cur, x), t, schedule, cfg.seed);
      }
      cur = &hr_grid;
      run_stage(hr_grid, native, cfg.fine_steps, false);
    }
    result.report.fine_seconds = timer.stop();
  }

  result.report.total_seconds =
      result.report.coarse_seconds + result.report.mixed_seconds + result.report.fine_seconds;
  result.final_hr = fine_view(*cur, x);

  const Matrix& ref = reference ? *reference : result.final_hr;
  const Matrix diff = result.final_hr - ref;
  result.report.rms_global = std::sqrt(diff.array().square().mean());

  // Deviation over the evaluation region: fine cells whose base cell is
  // upsampled during the mixed stage.
  {
    double acc = 0.0;
    long long count = 0;
    const int d = mixed_grid.num_axes();
    std::vector<int> idx(d);
    for (long long i = 0; i < diff.rows(); ++i) {
      long long rem = i;
      long long cell = 0;
      for (int a = d - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(rem % mixed_grid.hr_dims()[a]);
        rem /= mixed_grid.hr_dims()[a];
      }
      for (int a = 0; a < d; ++a) {
        cell = cell * mixed_grid.lr_dims()[a] + idx[a] / mixed_grid.axes()[a].ratio;
      }
      if (mixed_grid.hr_cell_mask()[static_cast<std::size_t>(cell)]) {
        acc += diff.row(i).array().square().sum();
        count += diff.cols();
      }
    }
    result.report.rms_hr = count > 0 ? std::sqrt(acc / static_cast<double>(count)) : 0.0;
  }

  result.report.phase_err =
      cfg.mixed_steps > 0 ? phase_consistency_error(mixed_grid, scheme) : 0.0;
  return result;
}

std::vector<RunReport> compare_schemes(const ScheduleConfig& cfg,
                                       const std::vector<SchemeParams>& schemes) {
  const SyntheticModel model =
      build_synthetic_model(cfg.heads, cfg.head_dim, static_cast<int>(cfg.lr_size.size()),
                            cfg.sharpness, cfg.seed);
  const Matrix ref = reference_final(model, cfg);
  std::vector<RunReport> reports;
  reports.reserve(schemes.size());
  for (const SchemeParams& sp : schemes) {
    reports.push_back(run_schedule(model, cfg, sp, &ref).report);
  }
  return reports;
}

void write_report_csv(const std::vector<RunReport>& reports, std::ostream& os,
                      const std::string& provenance, bool include_timings) {
  os << "# crpa " << kVersion;
  if (!provenance.empty()) os << " | " << provenance;
  os << "\n";
  os << "scheme,rms_global,rms_hr,phase_err,coarse_steps,mixed_steps,fine_steps,seconds\n";
  for (const RunReport& r : reports) {
    os << r.scheme << ',' << format_double(r.rms_global) << ',' << format_double(r.rms_hr) << ','
       << format_double(r.phase_err) << ',' << r.coarse_steps << ',' << r.mixed_steps << ','
       << r.fine_steps << ',' << (include_timings ? format_double(r.total_seconds) : "0") << "\n";
  }
}

}  // namespace crpa
