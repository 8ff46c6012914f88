#include "crpa/noise.hpp"

#include <cmath>
#include <numbers>

namespace crpa {

namespace {

// splitmix64 finalizer; full-period mixing of a 64-bit counter.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t key(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(mix64(seed) ^ stream) ^ index);
}

// Maps to the open interval (0, 1): top 53 bits plus a half-ulp offset.
double to_unit(std::uint64_t x) {
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double uniform_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return to_unit(key(seed, stream, index));
}

double gaussian_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t k = key(seed, stream, index);
  const double u1 = to_unit(k);
  const double u2 = to_unit(mix64(k ^ 0xda942042e4dd58b5ull));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                std::uint64_t stream) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = gaussian_at(seed, stream, static_cast<std::uint64_t>(r * cols + c));
    }
  }
  return m;
}

std::uint64_t stream_id(std::uint64_t tag, std::uint64_t subtag) {
  return mix64(mix64(tag) ^ (subtag + 0x632be59bd9b4e019ull));
}

}  // namespace crpa
