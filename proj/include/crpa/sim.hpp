#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crpa/attention.hpp"
#include "crpa/boundary.hpp"

namespace crpa {

// Position-only synthetic attention heads: every token shares the same
// query/key pattern, so attention weights depend on positions alone.
// Patterns are built from prescribed per-pair amplitudes with zero
// relative phase, which places each head's kernel peak at offset zero.
struct SyntheticHead {
  Vector q_dir;
  Vector k_dir;
};

struct SyntheticModel {
  int head_dim = 0;
  ChannelLayout layout;
  std::vector<SyntheticHead> heads;
  double sharpness = 0.0;
  std::uint64_t seed = 0;

  Matrix q_patterns() const;
  Matrix k_patterns() const;
};

// sharpness in [0, 1] sets the fraction of the fastest rotary pairs
// carrying weight: m = max(1, round(sharpness * pairs_per_axis)).
// sharpness 0 gives flat single-frequency heads. score_scale sets the
// summed squared pattern magnitude; < 0 means head_dim.
SyntheticModel build_synthetic_model(int num_heads, int head_dim, int num_axes, double sharpness,
                                     std::uint64_t seed, double score_scale = -1.0);

struct BoundaryConfig {
  bool enabled = true;
  int n_pad = 2;
};

struct ScheduleConfig {
  int coarse_steps = 10;
  int mixed_steps = 20;
  int fine_steps = 0;
  std::vector<int> lr_size = {32, 32};
  int upsample_ratio = 2;
  // Fraction of base-grid area upsampled during the mixed stage.
  double hr_token_ratio = 0.3;
  int heads = 4;
  int head_dim = 64;
  double sharpness = 0.3;
  int channels = 2;
  std::uint64_t seed = 0;
  BoundaryConfig boundary;

  int total_steps() const { return coarse_steps + mixed_steps + fine_steps; }
};

ScheduleConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScheduleConfig& cfg);

// Deterministic band-limited target field on the fine grid: a few seeded
// sinusoidal modes per channel plus one square bump.
Matrix target_latent(const std::vector<int>& hr_dims, int channels, std::uint64_t seed);

struct RunReport {
  std::string scheme;
  double rms_global = 0.0;
  double rms_hr = 0.0;
  double phase_err = 0.0;
  int coarse_steps = 0;
  int mixed_steps = 0;
  int fine_steps = 0;
  double coarse_seconds = 0.0;
  double mixed_seconds = 0.0;
  double fine_seconds = 0.0;
  double total_seconds = 0.0;
};

struct RunResult {
  RunReport report;
  Matrix final_hr;  // final state on the fine grid
};

// All steps at full resolution; the deviation baseline.
Matrix reference_final(const SyntheticModel& model, const ScheduleConfig& cfg);

// Coarse stage on the base grid, mixed stage on the two-resolution
// layout under the given scheme, fine stage at full resolution. With a
// null reference the run reports deviation against its own final state.
RunResult run_schedule(const SyntheticModel& model, const ScheduleConfig& cfg,
                       const SchemeParams& scheme, const Matrix* reference = nullptr);

std::vector<RunReport> compare_schemes(const ScheduleConfig& cfg,
                                       const std::vector<SchemeParams>& schemes);

// Report CSV. Timing columns print as 0 unless include_timings is set,
// keeping byte-identical output across repeated runs.
void write_report_csv(const std::vector<RunReport>& reports, std::ostream& os,
                      const std::string& provenance, bool include_timings);

}  // namespace crpa
