#include "crpa/grid.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace crpa {

namespace {

long long checked_product(const std::vector<int>& dims) {
  long long p = 1;
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("axis length must be positive");
    p *= d;
  }
  return p;
}

// Decodes a flat row-major index into per-axis coordinates.
void unflatten(long long flat, const std::vector<int>& dims, std::vector<int>& out) {
  out.resize(dims.size());
  for (int a = static_cast<int>(dims.size()) - 1; a >= 0; --a) {
    out[a] = static_cast<int>(flat % dims[a]);
    flat /= dims[a];
  }
}

}  // namespace

TokenGrid::TokenGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw std::invalid_argument("grid needs at least one axis");
  std::vector<int> dims;
  for (const Axis& a : axes_) {
    if (!(a.stride > 0.0)) throw std::invalid_argument("axis stride must be positive");
    dims.push_back(a.length);
  }
  const long long n = checked_product(dims);
  num_tokens_ = static_cast<int>(n);
  native_.resize(num_tokens_, num_axes());
  std::vector<int> idx;
  for (long long t = 0; t < n; ++t) {
    unflatten(t, dims, idx);
    for (int a = 0; a < num_axes(); ++a) native_(t, a) = idx[a];
  }
}

Vector TokenGrid::native_pos(int token) const { return native_.row(token); }

Vector TokenGrid::physical_pos(int token) const {
  Vector p = native_.row(token);
  for (int a = 0; a < num_axes(); ++a) p[a] *= axes_[a].stride;
  return p;
}

MixedGrid::MixedGrid(std::vector<AxisDef> axes, std::vector<std::uint8_t> hr_cells)
    : axes_(std::move(axes)), hr_cells_(std::move(hr_cells)) {
  if (axes_.empty()) throw std::invalid_argument("grid needs at least one axis");
  for (const AxisDef& a : axes_) {
    if (a.lr_length <= 0) throw std::invalid_argument("axis length must be positive");
    if (a.ratio < 1) throw std::invalid_argument("axis ratio must be a positive integer");
    lr_dims_.push_back(a.lr_length);
    hr_dims_.push_back(a.lr_length * a.ratio);
  }
  if (static_cast<long long>(hr_cells_.size()) != checked_product(lr_dims_)) {
    throw std::invalid_argument("cell mask size must match the base grid");
  }
  build_tokens();
}

namespace {

std::vector<std::uint8_t> rasterize_token_boxes(const std::vector<MixedGrid::AxisDef>& axes,
                                                const std::vector<MixedGrid::Box>& boxes) {
  const int d = static_cast<int>(axes.size());
  std::vector<int> lr_dims;
  for (const auto& a : axes) lr_dims.push_back(a.lr_length);
  const long long cells = checked_product(lr_dims);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(cells), 0);
  std::vector<int> idx;
  for (const MixedGrid::Box& b : boxes) {
    if (static_cast<int>(b.lo.size()) != d || static_cast<int>(b.hi.size()) != d) {
      throw std::invalid_argument("box rank must match axis count");
    }
    std::vector<long> lo = b.lo, hi = b.hi;
    for (int a = 0; a < d; ++a) {
      const int r = axes[a].ratio;
      if (lo[a] % r != 0 || hi[a] % r != 0) {
        throw std::invalid_argument("HR region not alignable to LR grid");
      }
      lo[a] /= r;
      hi[a] /= r;
    }
    for (long long c = 0; c < cells; ++c) {
      unflatten(c, lr_dims, idx);
      bool inside = true;
      for (int a = 0; a < d; ++a) inside = inside && idx[a] >= lo[a] && idx[a] < hi[a];
      if (inside) mask[static_cast<std::size_t>(c)] = 1;
    }
  }
  return mask;
}

}  // namespace

MixedGrid::MixedGrid(std::vector<AxisDef> axes, const std::vector<Box>& hr_token_boxes)
    : MixedGrid(std::vector<AxisDef>(axes), rasterize_token_boxes(axes, hr_token_boxes)) {}

MixedGrid MixedGrid::center_box(const std::vector<int>& lr_lengths, int ratio,
                                double area_fraction) {
  if (area_fraction < 0.0 || area_fraction > 1.0) {
    throw std::invalid_argument("area fraction must be in [0, 1]");
  }
  std::vector<AxisDef> axes;
  for (int len : lr_lengths) axes.push_back(AxisDef{len, ratio});
  const long long cells = checked_product(lr_lengths);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(cells), 0);
  if (area_fraction > 0.0) {
    const int d = static_cast<int>(lr_lengths.size());
    const double side_frac = std::pow(area_fraction, 1.0 / d);
    std::vector<int> lo(d), hi(d);
    for (int a = 0; a < d; ++a) {
      int side = static_cast<int>(std::lround(lr_lengths[a] * side_frac));
      side = std::max(1, std::min(side, lr_lengths[a]));
      lo[a] = (lr_lengths[a] - side) / 2;
      hi[a] = lo[a] + side;
    }
    std::vector<int> idx;
    for (long long c = 0; c < cells; ++c) {
      unflatten(c, lr_lengths, idx);
      bool inside = true;
      for (int a = 0; a < d; ++a) inside = inside && idx[a] >= lo[a] && idx[a] < hi[a];
      mask[static_cast<std::size_t>(c)] = inside ? 1 : 0;
    }
  }
  return MixedGrid(std::move(axes), std::move(mask));
}

MixedGrid MixedGrid::from_json(const nlohmann::json& j) {
  std::vector<AxisDef> axes;
  for (const auto& a : j.at("axes")) {
    axes.push_back(AxisDef{a.at("lr_length").get<int>(), a.at("ratio").get<int>()});
  }
  std::vector<int> lr_dims;
  for (const AxisDef& a : axes) lr_dims.push_back(a.lr_length);
  const long long cells = checked_product(lr_dims);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(cells), 0);
  const int d = static_cast<int>(axes.size());

  auto mark_cell_box = [&](const std::vector<long>& lo, const std::vector<long>& hi) {
    if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d) {
      throw std::invalid_argument("box rank must match axis count");
    }
    std::vector<int> idx;
    for (long long c = 0; c < cells; ++c) {
      unflatten(c, lr_dims, idx);
      bool inside = true;
      for (int a = 0; a < d; ++a) inside = inside && idx[a] >= lo[a] && idx[a] < hi[a];
      if (inside) mask[static_cast<std::size_t>(c)] = 1;
    }
  };

  if (j.contains("hr_boxes")) {
    for (const auto& b : j.at("hr_boxes")) {
      mark_cell_box(b.at("lo").get<std::vector<long>>(), b.at("hi").get<std::vector<long>>());
    }
  }
  if (j.contains("hr_token_boxes")) {
    for (const auto& b : j.at("hr_token_boxes")) {
      auto lo = b.at("lo").get<std::vector<long>>();
      auto hi = b.at("hi").get<std::vector<long>>();
      if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d) {
        throw std::invalid_argument("box rank must match axis count");
      }
      for (int a = 0; a < d; ++a) {
        const int r = axes[a].ratio;
        if (lo[a] % r != 0 || hi[a] % r != 0) {
          throw std::invalid_argument("HR region not alignable to LR grid");
        }
        lo[a] /= r;
        hi[a] /= r;
      }
      mark_cell_box(lo, hi);
    }
  }
  return MixedGrid(std::move(axes), std::move(mask));
}

Vector MixedGrid::physical_pos(int token) const {
  Vector p = native_.row(token);
  for (int a = 0; a < num_axes(); ++a) p[a] *= stride(token, a);
  return p;
}

void MixedGrid::build_tokens() {
  const long long lr_cells = checked_product(lr_dims_);
  const long long hr_cells_total = checked_product(hr_dims_);
  const int d = num_axes();

  std::vector<int> idx;
  std::vector<std::vector<int>> lr_idx;
  std::vector<std::vector<int>> hr_idx;
  std::vector<int> hr_parent;

  for (long long c = 0; c < lr_cells; ++c) {
    if (!hr_cells_[static_cast<std::size_t>(c)]) {
      unflatten(c, lr_dims_, idx);
      lr_idx.push_back(idx);
    }
  }
  for (long long f = 0; f < hr_cells_total; ++f) {
    unflatten(f, hr_dims_, idx);
    long long parent = 0;
    for (int a = 0; a < d; ++a) parent = parent * lr_dims_[a] + idx[a] / axes_[a].ratio;
    if (hr_cells_[static_cast<std::size_t>(parent)]) {
      hr_idx.push_back(idx);
      hr_parent.push_back(static_cast<int>(parent));
    }
  }

  const int n = static_cast<int>(lr_idx.size() + hr_idx.size());
  is_hr_.assign(n, 0);
  base_cell_.assign(n, 0);
  native_.resize(n, d);
  int t = 0;
  for (const auto& ix : lr_idx) {
    long long cell = 0;
    for (int a = 0; a < d; ++a) {
      native_(t, a) = ix[a];
      cell = cell * lr_dims_[a] + ix[a];
    }
    base_cell_[t] = static_cast<int>(cell);
    lr_tokens_.push_back(t);
    ++t;
  }
  for (std::size_t i = 0; i < hr_idx.size(); ++i) {
    is_hr_[t] = 1;
    base_cell_[t] = hr_parent[i];
    for (int a = 0; a < d; ++a) native_(t, a) = hr_idx[i][a];
    hr_tokens_.push_back(t);
    ++t;
  }
  // Build groups in base row-major cell order.
  std::vector<std::vector<int>> members_by_cell(static_cast<std::size_t>(lr_cells));
  for (std::size_t i = 0; i < hr_idx.size(); ++i) {
    members_by_cell[static_cast<std::size_t>(hr_parent[i])].push_back(
        static_cast<int>(lr_idx.size() + i));
  }
  for (long long c = 0; c < lr_cells; ++c) {
    if (!hr_cells_[static_cast<std::size_t>(c)]) continue;
    PoolGroup g;
    g.cell = static_cast<int>(c);
    unflatten(c, lr_dims_, g.cell_idx);
    g.members = std::move(members_by_cell[static_cast<std::size_t>(c)]);
    groups_.push_back(std::move(g));
  }
}

}  // namespace crpa
