#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "crpa/frequency_schedule.hpp"

namespace crpa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Channels are paired interleaved: pair i occupies channels (2i, 2i+1).
// rotate applies the block rotation R(theta_i) with theta_i = omega_i * p
// to each pair. Rotation preserves the Euclidean norm of every pair.
template <typename Derived>
Vector rotate(const Eigen::MatrixBase<Derived>& v, double p, const FrequencySchedule& fs) {
  if (v.size() != fs.dim()) {
    throw std::invalid_argument("vector size does not match schedule dimension");
  }
  Vector out = v;
  for (int i = 0; i < fs.num_pairs(); ++i) {
    const double th = fs.freq(i) * p;
    const double c = std::cos(th);
    const double s = std::sin(th);
    const double x = out[2 * i];
    const double y = out[2 * i + 1];
    out[2 * i] = c * x - s * y;
    out[2 * i + 1] = s * x + c * y;
  }
  return out;
}

// <rotate(q, p_q), rotate(k, p_k)>.
template <typename DQ, typename DK>
double score_absolute(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DK>& k,
                      double p_q, double p_k, const FrequencySchedule& fs) {
  return rotate(q, p_q, fs).dot(rotate(k, p_k, fs));
}

// q^T R(delta) k. Equals score_absolute at any pair of positions whose
// difference p_k - p_q is delta.
template <typename DQ, typename DK>
double score_relative(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DK>& k,
                      double delta, const FrequencySchedule& fs) {
  if (q.size() != fs.dim() || k.size() != fs.dim()) {
    throw std::invalid_argument("vector size does not match schedule dimension");
  }
  return q.dot(rotate(k, delta, fs));
}

// Disjoint contiguous channel groups, one rotary schedule per axis.
// Groups must partition [0, dim) exactly.
struct AxisGroup {
  int offset = 0;
  FrequencySchedule freqs;
};

class ChannelLayout {
 public:
  // Contiguous groups in axis order.
  explicit ChannelLayout(std::vector<FrequencySchedule> per_axis);
  ChannelLayout(std::vector<AxisGroup> groups, int total_dim);

  int dim() const { return dim_; }
  int num_axes() const { return static_cast<int>(groups_.size()); }
  const AxisGroup& group(int axis) const { return groups_[axis]; }

  // Same group structure, schedules replaced axis by axis.
  ChannelLayout with_schedules(std::vector<FrequencySchedule> per_axis) const;

 private:
  int dim_ = 0;
  std::vector<AxisGroup> groups_;
};

// Rotates each axis group by its own position coordinate.
template <typename Derived>
Vector rotate_multiaxis(const Eigen::MatrixBase<Derived>& v, const ChannelLayout& layout,
                        const Eigen::Ref<const Vector>& pos) {
  if (v.size() != layout.dim()) {
    throw std::invalid_argument("vector size does not match layout dimension");
  }
  if (pos.size() != layout.num_axes()) {
    throw std::invalid_argument("need one position coordinate per axis");
  }
  Vector out = v;
  for (int a = 0; a < layout.num_axes(); ++a) {
    const AxisGroup& g = layout.group(a);
    out.segment(g.offset, g.freqs.dim()) =
        rotate(out.segment(g.offset, g.freqs.dim()), pos[a], g.freqs);
  }
  return out;
}

template <typename DQ, typename DK>
double score_absolute_multiaxis(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DK>& k,
                                const ChannelLayout& layout,
                                const Eigen::Ref<const Vector>& pos_q,
                                const Eigen::Ref<const Vector>& pos_k) {
  return rotate_multiaxis(q, layout, pos_q).dot(rotate_multiaxis(k, layout, pos_k));
}

// Per-axis relative scores sum over the disjoint channel groups.
template <typename DQ, typename DK>
double score_relative_multiaxis(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DK>& k,
                                const ChannelLayout& layout,
                                const Eigen::Ref<const Vector>& deltas) {
  return q.dot(rotate_multiaxis(k, layout, deltas));
}

// Rotates row r of `rows` by positions(r, axis) on every axis group.
Matrix rotate_rows(const Eigen::Ref<const Matrix>& rows, const ChannelLayout& layout,
                   const Eigen::Ref<const Matrix>& positions);

}  // namespace crpa
