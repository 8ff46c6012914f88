#include "crpa/frequency_schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace crpa {

namespace {

void check_dim(int dim) {
  if (dim < 2) throw std::invalid_argument("dimension must be at least 2");
  if (dim % 2 != 0) throw std::invalid_argument("dimension must be even");
}

}  // namespace

FrequencySchedule::FrequencySchedule(int dim, double base) : dim_(dim), base_(base) {
  check_dim(dim);
  if (!(base > 1.0)) throw std::invalid_argument("base must be greater than 1");
  const int n = dim / 2;
  freqs_.resize(n);
  for (int i = 0; i < n; ++i) {
    freqs_[i] = std::pow(base, -2.0 * i / dim);
  }
}

FrequencySchedule::FrequencySchedule(int dim, Eigen::VectorXd freqs)
    : dim_(dim), freqs_(std::move(freqs)) {
  check_dim(dim);
  if (freqs_.size() != dim / 2) {
    throw std::invalid_argument("need one frequency per channel pair");
  }
  for (Eigen::Index i = 0; i < freqs_.size(); ++i) {
    if (!(freqs_[i] > 0.0) || !std::isfinite(freqs_[i])) {
      throw std::invalid_argument("frequencies must be positive and finite");
    }
  }
}

}  // namespace crpa
