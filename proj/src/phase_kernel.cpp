#include "crpa/phase_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace crpa {

PhaseKernel::PhaseKernel(std::vector<PhaseTerm> terms) : terms_(std::move(terms)) {
  for (const PhaseTerm& t : terms_) {
    if (t.amplitude < 0.0) throw std::invalid_argument("amplitudes must be non-negative");
    if (!(t.omega > 0.0)) throw std::invalid_argument("frequencies must be positive");
  }
}

double PhaseKernel::eval(double delta) const {
  double s = 0.0;
  for (const PhaseTerm& t : terms_) {
    s += t.amplitude * std::cos(t.omega * delta + t.phase);
  }
  return s;
}

std::vector<PhaseTerm> PhaseKernel::dominant(int top_n) const {
  if (top_n < 0) throw std::invalid_argument("top_n must be non-negative");
  std::vector<PhaseTerm> sorted = terms_;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const PhaseTerm& a, const PhaseTerm& b) { return a.amplitude > b.amplitude; });
  if (static_cast<int>(sorted.size()) > top_n) sorted.resize(top_n);
  return sorted;
}

PhaseKernel decompose(const Eigen::Ref<const Vector>& q, const Eigen::Ref<const Vector>& k,
                      const FrequencySchedule& fs) {
  if (q.size() != fs.dim() || k.size() != fs.dim()) {
    throw std::invalid_argument("vector size does not match schedule dimension");
  }
  std::vector<PhaseTerm> terms(fs.num_pairs());
  for (int i = 0; i < fs.num_pairs(); ++i) {
    const double qx = q[2 * i], qy = q[2 * i + 1];
    const double kx = k[2 * i], ky = k[2 * i + 1];
    const double a = qx * kx + qy * ky;
    const double b = qy * kx - qx * ky;
    PhaseTerm& t = terms[i];
    t.omega = fs.freq(i);
    t.amplitude = std::hypot(a, b);
    if (t.amplitude == 0.0) {
      t.phase = 0.0;  // degenerate pair carries no phase information
    } else {
      t.phase = std::atan2(-b, a);
      if (t.phase == -std::numbers::pi) t.phase = std::numbers::pi;
    }
  }
  return PhaseKernel(std::move(terms));
}

nlohmann::json kernel_to_json(const PhaseKernel& kernel) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PhaseTerm& t : kernel.terms()) {
    arr.push_back({{"omega", t.omega}, {"amplitude", t.amplitude}, {"phase", t.phase}});
  }
  return arr;
}

PhaseKernel kernel_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("kernel json must be an array of terms");
  std::vector<PhaseTerm> terms;
  terms.reserve(j.size());
  for (const auto& e : j) {
    terms.push_back(PhaseTerm{e.at("omega").get<double>(), e.at("amplitude").get<double>(),
                              e.at("phase").get<double>()});
  }
  return PhaseKernel(std::move(terms));
}

}  // namespace crpa
