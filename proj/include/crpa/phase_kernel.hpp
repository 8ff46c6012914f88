#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crpa/rope.hpp"

namespace crpa {

// One cosine term of the score kernel: amplitude * cos(omega * delta + phase).
struct PhaseTerm {
  double omega = 0.0;
  double amplitude = 0.0;  // >= 0
  double phase = 0.0;      // in (-pi, pi]; exactly 0 when amplitude is 0
};

// The relative attention score as a function of offset:
//   score(delta) = sum_i C_i cos(omega_i delta + phi_i)
// with one term per channel pair.
class PhaseKernel {
 public:
  PhaseKernel() = default;
  explicit PhaseKernel(std::vector<PhaseTerm> terms);

  double eval(double delta) const;
  const std::vector<PhaseTerm>& terms() const { return terms_; }

  // Terms sorted by amplitude, largest first; ties keep pair order.
  std::vector<PhaseTerm> dominant(int top_n) const;

 private:
  std::vector<PhaseTerm> terms_;
};

// Exact decomposition of the pairwise score: for pair i with
// A_i = q_{2i} k_{2i} + q_{2i+1} k_{2i+1} and
// B_i = q_{2i+1} k_{2i} - q_{2i} k_{2i+1},
// the term is C_i = hypot(A_i, B_i), phi_i = atan2(-B_i, A_i).
// eval of the result reproduces score_relative for every delta.
PhaseKernel decompose(const Eigen::Ref<const Vector>& q, const Eigen::Ref<const Vector>& k,
                      const FrequencySchedule& fs);

nlohmann::json kernel_to_json(const PhaseKernel& kernel);
PhaseKernel kernel_from_json(const nlohmann::json& j);

}  // namespace crpa
