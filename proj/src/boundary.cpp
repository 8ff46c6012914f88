#include "crpa/boundary.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "crpa/noise.hpp"

namespace crpa {

namespace {

void check_field(const Matrix& x, const GridShape& shape) {
  if (x.rows() != shape.size()) {
    throw std::invalid_argument("field rows must match grid size");
  }
}

std::vector<long long> row_major_strides(const std::vector<int>& dims) {
  std::vector<long long> strides(dims.size(), 1);
  for (int a = static_cast<int>(dims.size()) - 2; a >= 0; --a) {
    strides[a] = strides[a + 1] * dims[a + 1];
  }
  return strides;
}

}  // namespace

long long GridShape::size() const {
  long long p = 1;
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("axis length must be positive");
    p *= d;
  }
  return p;
}

CellMask dilate_mask(const CellMask& mask, const GridShape& shape, int n_pad) {
  if (static_cast<long long>(mask.size()) != shape.size()) {
    throw std::invalid_argument("mask size must match grid size");
  }
  if (n_pad < 0) throw std::invalid_argument("pad width must be non-negative");
  if (n_pad == 0) return mask;
  // Chebyshev dilation separates into a 1D max filter per axis.
  CellMask cur = mask;
  const auto strides = row_major_strides(shape.dims);
  const long long n = shape.size();
  for (int a = 0; a < shape.rank(); ++a) {
    CellMask next(cur.size(), 0);
    const long long stride = strides[a];
    const int len = shape.dims[a];
    for (long long i = 0; i < n; ++i) {
      if (!cur[static_cast<std::size_t>(i)]) continue;
      const int coord = static_cast<int>((i / stride) % len);
      const int lo = std::max(0, coord - n_pad);
      const int hi = std::min(len - 1, coord + n_pad);
      for (int c = lo; c <= hi; ++c) {
        next[static_cast<std::size_t>(i + static_cast<long long>(c - coord) * stride)] = 1;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

Matrix resize_latent_up(const Matrix& x, const GridShape& shape, int factor) {
  check_field(x, shape);
  if (factor < 1) throw std::invalid_argument("resize factor must be a positive integer");
  std::vector<int> out_dims = shape.dims;
  for (int& d : out_dims) d *= factor;
  const GridShape out_shape{out_dims};
  const auto in_strides = row_major_strides(shape.dims);
  Matrix out(out_shape.size(), x.cols());
  std::vector<int> idx(shape.rank());
  for (long long o = 0; o < out_shape.size(); ++o) {
    long long rem = o;
    long long src = 0;
    for (int a = shape.rank() - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % out_dims[a]);
      rem /= out_dims[a];
    }
    for (int a = 0; a < shape.rank(); ++a) src += (idx[a] / factor) * in_strides[a];
    out.row(o) = x.row(src);
  }
  return out;
}

Matrix resize_latent_down(const Matrix& x, const GridShape& shape, int factor) {
  check_field(x, shape);
  if (factor < 1) throw std::invalid_argument("resize factor must be a positive integer");
  std::vector<int> out_dims(shape.rank());
  for (int a = 0; a < shape.rank(); ++a) {
    if (shape.dims[a] % factor != 0) {
      throw std::invalid_argument("axis length not divisible by resize factor");
    }
    out_dims[a] = shape.dims[a] / factor;
  }
  const GridShape out_shape{out_dims};
  const auto in_strides = row_major_strides(shape.dims);
  Matrix out = Matrix::Zero(out_shape.size(), x.cols());
  std::vector<int> idx(shape.rank());
  long long block = 1;
  for (int a = 0; a < shape.rank(); ++a) block *= factor;
  for (long long i = 0; i < shape.size(); ++i) {
    long long rem = i;
    long long dst = 0;
    for (int a = shape.rank() - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % shape.dims[a]);
      rem /= shape.dims[a];
    }
    for (int a = 0; a < shape.rank(); ++a) {
      dst = dst * out_dims[a] + idx[a] / factor;
    }
    out.row(dst) += x.row(i);
  }
  return out / static_cast<double>(block);
}

NoiseSchedule::NoiseSchedule(Vector s) : sigma(std::move(s)) {
  if (sigma.size() < 1) throw std::invalid_argument("schedule needs at least one level");
  if (sigma[0] != 0.0) throw std::invalid_argument("schedule must end noise-free at t = 0");
  for (Eigen::Index i = 1; i < sigma.size(); ++i) {
    if (sigma[i] < sigma[i - 1]) throw std::invalid_argument("sigma must not decrease with t");
  }
}

NoiseSchedule NoiseSchedule::linear(int total_steps) {
  if (total_steps < 1) throw std::invalid_argument("need at least one step");
  Vector s(total_steps + 1);
  for (int t = 0; t <= total_steps; ++t) s[t] = static_cast<double>(t) / total_steps;
  return NoiseSchedule(std::move(s));
}

double NoiseSchedule::at(int t) const {
  if (t < 0 || t > max_timestep()) throw std::invalid_argument("timestep outside schedule");
  return sigma[t];
}

Matrix renoise(const Matrix& x0, int t, const NoiseSchedule& schedule, std::uint64_t seed) {
  const double s = schedule.at(t);
  const std::uint64_t stream = stream_id(0x7e6001, static_cast<std::uint64_t>(t));
  Matrix out(x0.rows(), x0.cols());
  for (Eigen::Index r = 0; r < x0.rows(); ++r) {
    for (Eigen::Index c = 0; c < x0.cols(); ++c) {
      const double eps = gaussian_at(seed, stream, static_cast<std::uint64_t>(r * x0.cols() + c));
      out(r, c) = (1.0 - s) * x0(r, c) + s * eps;
    }
  }
  return out;
}

BoundaryBand make_boundary_band(const MixedGrid& grid, int n_pad_lr, int n_pad_hr) {
  if (n_pad_lr < 0 || n_pad_hr < 0) throw std::invalid_argument("pad width must be non-negative");
  int ratio = grid.axes().front().ratio;
  for (const auto& a : grid.axes()) {
    if (a.ratio != ratio) {
      throw std::invalid_argument("boundary bands need one shared axis ratio");
    }
  }
  BoundaryBand band;
  band.lr_shape = GridShape{grid.lr_dims()};
  band.hr_shape = GridShape{grid.hr_dims()};
  band.ratio = ratio;
  band.n_pad_lr = n_pad_lr;
  band.n_pad_hr = n_pad_hr;

  const CellMask& hr_cells = grid.hr_cell_mask();
  const CellMask lr_dilated = dilate_mask(hr_cells, band.lr_shape, n_pad_lr);
  band.lr_band.resize(hr_cells.size());
  for (std::size_t i = 0; i < hr_cells.size(); ++i) {
    band.lr_band[i] = lr_dilated[i] && !hr_cells[i] ? 1 : 0;
  }

  // Fine-grid mask of the upsampled region and of its complement.
  const long long hr_n = band.hr_shape.size();
  CellMask hr_region(static_cast<std::size_t>(hr_n), 0);
  {
    const auto lr_strides = row_major_strides(grid.lr_dims());
    std::vector<int> idx(grid.num_axes());
    for (long long i = 0; i < hr_n; ++i) {
      long long rem = i;
      long long cell = 0;
      for (int a = grid.num_axes() - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(rem % grid.hr_dims()[a]);
        rem /= grid.hr_dims()[a];
      }
      for (int a = 0; a < grid.num_axes(); ++a) cell += (idx[a] / ratio) * lr_strides[a];
      hr_region[static_cast<std::size_t>(i)] = hr_cells[static_cast<std::size_t>(cell)];
    }
  }
  CellMask complement(hr_region.size());
  for (std::size_t i = 0; i < hr_region.size(); ++i) complement[i] = hr_region[i] ? 0 : 1;
  const CellMask hr_dilated = dilate_mask(complement, band.hr_shape, n_pad_hr);
  band.hr_band.resize(hr_region.size());
  for (std::size_t i = 0; i < hr_region.size(); ++i) {
    band.hr_band[i] = hr_dilated[i] && hr_region[i] ? 1 : 0;
  }
  return band;
}

std::pair<LatentState, LatentState> expand_and_replace(const LatentState& lr,
                                                       const LatentState& hr,
                                                       const BoundaryBand& band,
                                                       const NoiseSchedule& schedule,
                                                       std::uint64_t seed) {
  if (lr.t != hr.t) throw std::invalid_argument("branches must share a timestep");
  if (lr.t < 1) throw std::invalid_argument("exchange needs a next timestep below the current one");
  check_field(lr.x_t, band.lr_shape);
  check_field(hr.x_t, band.hr_shape);
  if (lr.x_t.cols() != hr.x_t.cols()) throw std::invalid_argument("channel counts must match");

  const int next_t = lr.t - 1;
  const double s = schedule.at(next_t);
  const Eigen::Index ch = lr.x_t.cols();

  LatentState lr_out = lr;
  LatentState hr_out = hr;

  const Matrix up = resize_latent_up(lr.x0_hat, band.lr_shape, band.ratio);
  const std::uint64_t hr_stream = stream_id(0xb42d01, static_cast<std::uint64_t>(next_t));
  for (long long i = 0; i < band.hr_shape.size(); ++i) {
    if (!band.hr_band[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index c = 0; c < ch; ++c) {
      const double eps = gaussian_at(seed, hr_stream, static_cast<std::uint64_t>(i * ch + c));
      hr_out.x_t(i, c) = (1.0 - s) * up(i, c) + s * eps;
    }
  }

  const Matrix down = resize_latent_down(hr.x0_hat, band.hr_shape, band.ratio);
  const std::uint64_t lr_stream = stream_id(0xb42d02, static_cast<std::uint64_t>(next_t));
  for (long long i = 0; i < band.lr_shape.size(); ++i) {
    if (!band.lr_band[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index c = 0; c < ch; ++c) {
      const double eps = gaussian_at(seed, lr_stream, static_cast<std::uint64_t>(i * ch + c));
      lr_out.x_t(i, c) = (1.0 - s) * down(i, c) + s * eps;
    }
  }
  return {std::move(lr_out), std::move(hr_out)};
}

}  // namespace crpa
