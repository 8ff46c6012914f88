#pragma once

#include <Eigen/Core>
#include <optional>

namespace crpa {

// Per-pair angular frequencies for one rotary axis.
//
// The geometric schedule is omega_i = base^(-2i/dim) for pair index
// i in [0, dim/2). Rescaled schedules (NTK, YaRN) carry explicit
// frequency vectors; only geometric schedules remember their base.
class FrequencySchedule {
 public:
  // Geometric schedule. dim must be even and >= 2, base > 1.
  explicit FrequencySchedule(int dim, double base = 10000.0);

  // Explicit frequencies, one per pair; all must be positive and finite.
  FrequencySchedule(int dim, Eigen::VectorXd freqs);

  int dim() const { return dim_; }
  int num_pairs() const { return dim_ / 2; }

  // Set only for geometric schedules; rescaling needs it.
  std::optional<double> base() const { return base_; }

  const Eigen::VectorXd& freqs() const { return freqs_; }
  double freq(int i) const { return freqs_[i]; }

 private:
  int dim_ = 0;
  std::optional<double> base_;
  Eigen::VectorXd freqs_;
};

inline FrequencySchedule make_frequencies(int dim, double base = 10000.0) {
  return FrequencySchedule(dim, base);
}

}  // namespace crpa
