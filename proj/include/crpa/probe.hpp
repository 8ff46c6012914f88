#pragma once

#include <optional>
#include <vector>

#include "crpa/rope.hpp"

namespace crpa {

// Mean normalized rotary response over a bank of query/key pairs, one
// value per offset.
struct DeltaCurve {
  char axis = 'h';
  Vector deltas;
  Vector means;
  int sample_count = 0;
  std::optional<int> timestep;
};

// kappa(delta) = mean over sample rows of <q_hat, R(delta) k_hat>, with
// each row l2-normalized. Always in [-1, 1] up to rounding.
DeltaCurve kappa_curve(const Matrix& Q, const Matrix& K, const FrequencySchedule& fs,
                       const Vector& deltas, char axis = 'h',
                       std::optional<int> timestep = std::nullopt);

// Integer offsets lo..hi inclusive.
Vector integer_deltas(int lo, int hi);

// Half-width at half maximum of a curve sampled on an ascending delta
// grid: the smallest positive delta whose value drops below half the
// value at delta = 0 (linearly interpolated between grid points).
double half_width_at_half_max(const DeltaCurve& curve);

inline constexpr double kRdsThreshold = 0.085;

struct HeadStats {
  double rds = 0.0;
  double threshold = kRdsThreshold;
  bool rope_dominant = false;
};

// Rotary dominance score of a projection weight matrix, rows paired
// interleaved: (2/d) * sum_i |cos angle(w_{2i}, w_{2i+1})|. Parallel
// pairs score 1, orthogonal pairs 0.
HeadStats rds_score(const Matrix& weight_rows, double threshold = kRdsThreshold);

}  // namespace crpa
