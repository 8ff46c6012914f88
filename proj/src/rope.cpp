#include "crpa/rope.hpp"

namespace crpa {

namespace {

std::vector<AxisGroup> contiguous_groups(std::vector<FrequencySchedule> per_axis) {
  if (per_axis.empty()) throw std::invalid_argument("layout needs at least one axis");
  std::vector<AxisGroup> groups;
  groups.reserve(per_axis.size());
  int offset = 0;
  for (auto& fs : per_axis) {
    const int d = fs.dim();
    groups.push_back(AxisGroup{offset, std::move(fs)});
    offset += d;
  }
  return groups;
}

}  // namespace

ChannelLayout::ChannelLayout(std::vector<FrequencySchedule> per_axis)
    : groups_(contiguous_groups(std::move(per_axis))) {
  dim_ = groups_.back().offset + groups_.back().freqs.dim();
}

ChannelLayout::ChannelLayout(std::vector<AxisGroup> groups, int total_dim)
    : dim_(total_dim), groups_(std::move(groups)) {
  if (groups_.empty()) throw std::invalid_argument("layout needs at least one axis");
  int expect = 0;
  for (const AxisGroup& g : groups_) {
    if (g.offset != expect) {
      throw std::invalid_argument("channel groups must be contiguous and disjoint");
    }
    expect += g.freqs.dim();
  }
  if (expect != total_dim) {
    throw std::invalid_argument("channel groups must cover the full dimension");
  }
}

ChannelLayout ChannelLayout::with_schedules(std::vector<FrequencySchedule> per_axis) const {
  if (static_cast<int>(per_axis.size()) != num_axes()) {
    throw std::invalid_argument("need one schedule per axis");
  }
  for (int a = 0; a < num_axes(); ++a) {
    if (per_axis[a].dim() != groups_[a].freqs.dim()) {
      throw std::invalid_argument("replacement schedule dimension mismatch");
    }
  }
  return ChannelLayout(std::move(per_axis));
}

Matrix rotate_rows(const Eigen::Ref<const Matrix>& rows, const ChannelLayout& layout,
                   const Eigen::Ref<const Matrix>& positions) {
  if (rows.cols() != layout.dim()) {
    throw std::invalid_argument("row width does not match layout dimension");
  }
  if (positions.rows() != rows.rows() || positions.cols() != layout.num_axes()) {
    throw std::invalid_argument("positions must be num_rows x num_axes");
  }
  Matrix out = rows;
  for (int a = 0; a < layout.num_axes(); ++a) {
    const AxisGroup& g = layout.group(a);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double p = positions(r, a);
      for (int i = 0; i < g.freqs.num_pairs(); ++i) {
        const double th = g.freqs.freq(i) * p;
        const double c = std::cos(th);
        const double s = std::sin(th);
        const int c0 = g.offset + 2 * i;
        const double x = out(r, c0);
        const double y = out(r, c0 + 1);
        out(r, c0) = c * x - s * y;
        out(r, c0 + 1) = s * x + c * y;
      }
    }
  }
  return out;
}

}  // namespace crpa
