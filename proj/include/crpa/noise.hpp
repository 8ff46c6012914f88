#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace crpa {

// Counter-based random values: every draw is a pure function of
// (seed, stream, index), so results do not depend on evaluation order
// or on how many values other code consumed. This is what makes
// repeated runs byte-identical across platforms.

// Uniform in (0, 1); never returns 0 or 1.
double uniform_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// Standard normal via Box-Muller on two decorrelated uniforms.
double gaussian_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// Row-major fill: element (r, c) has index r * cols + c.
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                std::uint64_t stream);

// Stable stream id derived from small tags, for keeping noise streams apart.
std::uint64_t stream_id(std::uint64_t tag, std::uint64_t subtag = 0);

}  // namespace crpa
