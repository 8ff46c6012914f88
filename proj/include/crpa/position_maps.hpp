#pragma once

#include <vector>

#include "crpa/frequency_schedule.hpp"
#include "crpa/rope.hpp"

namespace crpa {

// One affine segment of a piecewise position map. A region covers the
// half-open interval [start, end) of original (physical) index space
// and maps p to offset + scale * (p - start). Tokens inside the region
// sit at start, start + native_stride, ... while below end.
struct RegionSpec {
  double start = 0.0;
  double end = 0.0;
  double scale = 1.0;
  double offset = 0.0;
  double native_stride = 1.0;
};

// Continuous piecewise-affine map over contiguous regions.
class PiecewiseMap {
 public:
  // Regions must be ordered, non-overlapping, contiguous, and continuous:
  // each region's mapped end must equal the next region's offset to 1e-9.
  explicit PiecewiseMap(std::vector<RegionSpec> regions);

  double operator()(double p) const;
  const std::vector<RegionSpec>& regions() const { return regions_; }

 private:
  std::vector<RegionSpec> regions_;
};

// Keeps every region at scale 1 anchored at its own start, so mapped
// positions are the original fractional indices.
PiecewiseMap build_fractional_map(const std::vector<RegionSpec>& regions);

// Applies one uniform scale sigma = 1 / min(native_stride) to all regions,
// so the finest region lands on consecutive integers.
PiecewiseMap build_integerized_map(const std::vector<RegionSpec>& regions);

// 1D mixed layout: original cells [0, lr_len), with cells [hr_begin, hr_end)
// replaced by an upsampled block of `ratio` tokens per cell.
std::vector<RegionSpec> make_block_upsampled_regions(int lr_len, int hr_begin, int hr_end,
                                                     int ratio);

// Token positions of every region in order: start + j * native_stride < end.
std::vector<double> region_token_positions(const std::vector<RegionSpec>& regions);

// Mapped positions of those tokens under the given map.
std::vector<double> map_tokens(const PiecewiseMap& map, const std::vector<RegionSpec>& regions);

// Frequency rescaling that stretches the wavelength of every pair by
// lambda^(2i/dim), keeping pair 0 untouched: new base = lambda * base.
struct NtkParams {
  double extension_factor = 1.0;  // s
  double lambda = 1.0;            // s^(dim / (dim - 2))

  // Throws for dim == 2, where the exponent is undefined.
  static NtkParams for_dim(double s, int dim);
};

FrequencySchedule ntk_rescale(const FrequencySchedule& fs, const NtkParams& params);

// Per-pair interpolation between untouched and fully rescaled frequencies
// keyed by the number of full rotations r_i = L * omega_i / (2 pi) inside
// the training window.
struct YarnParams {
  double train_length = 0.0;      // L
  double extension_factor = 1.0;  // s
  double alpha = 1.0;
  double beta = 32.0;
  double temperature = 1.0;  // tau, divides attention logits
};

// Blend weight toward the untouched frequency: 1 above beta rotations,
// 0 below alpha, linear in between.
double yarn_gamma(double rotations, const YarnParams& params);

FrequencySchedule yarn_rescale(const FrequencySchedule& fs, const YarnParams& params);

// Physical spacing between adjacent tokens on the query and key grids.
struct StrideRatio {
  double query_stride = 1.0;
  double key_stride = 1.0;
  double ratio() const { return key_stride / query_stride; }
};

// Re-expresses a key's native index in query-grid units:
// p_k * (key_stride / query_stride).
double crpa_remap(double key_native_index, const StrideRatio& sr);

}  // namespace crpa
