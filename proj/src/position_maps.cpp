#include "crpa/position_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace crpa {

namespace {

constexpr double kContinuityTol = 1e-9;

double mapped_end(const RegionSpec& r) { return r.offset + r.scale * (r.end - r.start); }

}  // namespace

PiecewiseMap::PiecewiseMap(std::vector<RegionSpec> regions) : regions_(std::move(regions)) {
  if (regions_.empty()) throw std::invalid_argument("map needs at least one region");
  for (const RegionSpec& r : regions_) {
    if (!(r.end > r.start)) throw std::invalid_argument("region must have positive extent");
    if (!(r.native_stride > 0.0)) throw std::invalid_argument("native stride must be positive");
    if (!(r.scale > 0.0)) throw std::invalid_argument("region scale must be positive");
  }
  for (std::size_t i = 1; i < regions_.size(); ++i) {
    const RegionSpec& prev = regions_[i - 1];
    const RegionSpec& cur = regions_[i];
    if (cur.start < prev.end) throw std::invalid_argument("regions overlap");
    if (cur.start > prev.end) throw std::invalid_argument("regions must be contiguous");
    if (std::abs(cur.offset - mapped_end(prev)) > kContinuityTol) {
      throw std::invalid_argument("map not continuous");
    }
  }
}

double PiecewiseMap::operator()(double p) const {
  // Outside the covered interval the nearest region's affine extends.
  const RegionSpec* r = &regions_.back();
  if (p < regions_.back().start) {
    r = &regions_.front();
    for (const RegionSpec& cand : regions_) {
      if (p < cand.end) {
        r = &cand;
        break;
      }
    }
  }
  return r->offset + r->scale * (p - r->start);
}

PiecewiseMap build_fractional_map(const std::vector<RegionSpec>& regions) {
  std::vector<RegionSpec> out = regions;
  for (RegionSpec& r : out) {
    r.scale = 1.0;
    r.offset = r.start;
  }
  return PiecewiseMap(std::move(out));
}

PiecewiseMap build_integerized_map(const std::vector<RegionSpec>& regions) {
  if (regions.empty()) throw std::invalid_argument("map needs at least one region");
  double min_stride = std::numeric_limits<double>::infinity();
  for (const RegionSpec& r : regions) min_stride = std::min(min_stride, r.native_stride);
  if (!(min_stride > 0.0)) throw std::invalid_argument("native stride must be positive");
  const double sigma = 1.0 / min_stride;
  std::vector<RegionSpec> out = regions;
  for (RegionSpec& r : out) {
    r.scale = sigma;
    r.offset = sigma * r.start;
  }
  return PiecewiseMap(std::move(out));
}

std::vector<RegionSpec> make_block_upsampled_regions(int lr_len, int hr_begin, int hr_end,
                                                     int ratio) {
  if (lr_len <= 0) throw std::invalid_argument("layout length must be positive");
  if (ratio < 1) throw std::invalid_argument("ratio must be a positive integer");
  if (hr_begin < 0 || hr_end > lr_len || hr_begin >= hr_end) {
    throw std::invalid_argument("upsampled block must lie inside the layout");
  }
  std::vector<RegionSpec> regions;
  if (hr_begin > 0) {
    regions.push_back(RegionSpec{0.0, static_cast<double>(hr_begin), 1.0, 0.0, 1.0});
  }
  regions.push_back(RegionSpec{static_cast<double>(hr_begin), static_cast<double>(hr_end), 1.0,
                               static_cast<double>(hr_begin), 1.0 / ratio});
  if (hr_end < lr_len) {
    regions.push_back(RegionSpec{static_cast<double>(hr_end), static_cast<double>(lr_len), 1.0,
                                 static_cast<double>(hr_end), 1.0});
  }
  return regions;
}

std::vector<double> region_token_positions(const std::vector<RegionSpec>& regions) {
  std::vector<double> positions;
  for (const RegionSpec& r : regions) {
    const long count = std::lround((r.end - r.start) / r.native_stride);
    for (long j = 0; j < count; ++j) {
      positions.push_back(r.start + j * r.native_stride);
    }
  }
  return positions;
}

std::vector<double> map_tokens(const PiecewiseMap& map, const std::vector<RegionSpec>& regions) {
  std::vector<double> mapped;
  for (double p : region_token_positions(regions)) mapped.push_back(map(p));
  return mapped;
}

NtkParams NtkParams::for_dim(double s, int dim) {
  if (dim == 2) throw std::domain_error("frequency rescaling exponent undefined at dimension 2");
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("dimension must be even and >= 2");
  if (!(s > 0.0)) throw std::invalid_argument("extension factor must be positive");
  return NtkParams{s, std::pow(s, static_cast<double>(dim) / (dim - 2))};
}

FrequencySchedule ntk_rescale(const FrequencySchedule& fs, const NtkParams& params) {
  if (!fs.base()) {
    throw std::invalid_argument("rescaling needs a geometric schedule with a known base");
  }
  if (!(params.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  return FrequencySchedule(fs.dim(), params.lambda * *fs.base());
}

double yarn_gamma(double rotations, const YarnParams& params) {
  if (!(params.alpha < params.beta)) throw std::invalid_argument("alpha must be below beta");
  if (rotations <= params.alpha) return 0.0;
  if (rotations >= params.beta) return 1.0;
  return (rotations - params.alpha) / (params.beta - params.alpha);
}

FrequencySchedule yarn_rescale(const FrequencySchedule& fs, const YarnParams& params) {
  if (!(params.train_length > 0.0)) throw std::invalid_argument("train length must be positive");
  if (!(params.extension_factor > 0.0)) {
    throw std::invalid_argument("extension factor must be positive");
  }
  if (!(params.temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  Eigen::VectorXd freqs(fs.num_pairs());
  for (int i = 0; i < fs.num_pairs(); ++i) {
    const double omega = fs.freq(i);
    const double rotations = params.train_length * omega / (2.0 * std::numbers::pi);
    const double g = yarn_gamma(rotations, params);
    freqs[i] = g * omega + (1.0 - g) * omega / params.extension_factor;
  }
  return FrequencySchedule(fs.dim(), std::move(freqs));
}

double crpa_remap(double key_native_index, const StrideRatio& sr) {
  if (!(sr.query_stride > 0.0) || !(sr.key_stride > 0.0)) {
    throw std::invalid_argument("strides must be positive");
  }
  return key_native_index * sr.ratio();
}

}  // namespace crpa
