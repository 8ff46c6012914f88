#pragma once

#include <cstdint>
#include <vector>

#include "crpa/grid.hpp"
#include "crpa/rope.hpp"

namespace crpa {

// Row-major dense grid shape for latent fields stored as
// [num_cells x channels] matrices.
struct GridShape {
  std::vector<int> dims;

  long long size() const;
  int rank() const { return static_cast<int>(dims.size()); }
};

using CellMask = std::vector<std::uint8_t>;

// Chebyshev dilation: a cell is set if any cell within distance n_pad
// (per-axis max metric) is set in the input.
CellMask dilate_mask(const CellMask& mask, const GridShape& shape, int n_pad);

// Nearest-neighbor upsampling by an integer factor on every axis.
Matrix resize_latent_up(const Matrix& x, const GridShape& shape, int factor);

// Block-mean downsampling; every axis length must be divisible.
Matrix resize_latent_down(const Matrix& x, const GridShape& shape, int factor);

// sigma[t] for timesteps t = 0..total; sigma[0] = 0, sigma[total] = 1.
struct NoiseSchedule {
  Vector sigma;

  explicit NoiseSchedule(Vector s);
  static NoiseSchedule linear(int total_steps);
  double at(int t) const;
  int max_timestep() const { return static_cast<int>(sigma.size()) - 1; }
};

// x_t = (1 - sigma_t) * x0 + sigma_t * noise, noise keyed by (seed, t,
// element index) so the draw for a cell never depends on which other
// cells get renoised.
Matrix renoise(const Matrix& x0, int t, const NoiseSchedule& schedule, std::uint64_t seed);

// Band cells around the shared border of the two resolutions. lr_band
// marks base cells just outside the upsampled region; hr_band marks
// fine cells just inside it.
struct BoundaryBand {
  GridShape lr_shape;
  GridShape hr_shape;
  int ratio = 1;
  int n_pad_lr = 2;
  int n_pad_hr = 2;
  CellMask lr_band;
  CellMask hr_band;
};

BoundaryBand make_boundary_band(const MixedGrid& grid, int n_pad_lr = 2, int n_pad_hr = 2);

struct LatentState {
  Matrix x_t;
  Matrix x0_hat;
  int t = 0;
  double sigma = 0.0;
};

// Bidirectional band exchange: each side's band is replaced by the other
// side's resampled denoised estimate, renoised at the next timestep's
// sigma. Cells outside the bands are returned bit-identical.
std::pair<LatentState, LatentState> expand_and_replace(const LatentState& lr,
                                                       const LatentState& hr,
                                                       const BoundaryBand& band,
                                                       const NoiseSchedule& schedule,
                                                       std::uint64_t seed);

}  // namespace crpa
