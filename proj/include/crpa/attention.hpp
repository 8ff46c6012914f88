#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crpa/grid.hpp"
#include "crpa/position_maps.hpp"
#include "crpa/rope.hpp"

namespace crpa {

// Position handling on a mixed-resolution layout.
//
//   pi_lr   fractional indices in base-grid units (upsampled tokens land
//           between integers)
//   pi_hr   integerized indices in fine-grid units (base tokens stretch
//           apart by the ratio)
//   ntk     fine-grid indices plus frequency rescaling by lambda * base
//   pi_ntk  partial interpolation plus the remaining NTK rescale
//   yarn    fine-grid indices plus per-pair frequency blending and a
//           logit temperature
//   crpa    per-query-stride re-indexing: every key is expressed in the
//           query's own grid units, coarser keys lifted, finer keys
//           pooled onto whole base cells
enum class Scheme { pi_lr, pi_hr, ntk, pi_ntk, yarn, crpa };

Scheme scheme_from_string(std::string_view name);
std::string_view to_string(Scheme s);
const std::vector<Scheme>& all_schemes();

// How a group of finer keys collapses onto its base cell: mean of the
// members, or just the member at the cell's base corner.
enum class PoolMode { mean, stride0 };

struct SchemeParams {
  Scheme scheme = Scheme::crpa;
  PoolMode pool = PoolMode::mean;

  // pi_ntk: linear position stretch applied before the NTK remainder.
  double pi_ntk_linear = 1.5;

  // Extension factors; default derives from the grid's axis ratio.
  std::optional<double> ntk_extension;
  std::optional<double> yarn_extension;
  std::optional<double> yarn_train_length;  // default: axis base length
  double yarn_alpha = 1.0;
  double yarn_beta = 32.0;
  double yarn_temperature = 1.0;
};

// Mapped rotary position of every token, one row per token, one column
// per axis. Not defined for crpa, which has no single shared map.
Matrix scheme_positions(const MixedGrid& grid, const SchemeParams& params);

// Axis schedules after the scheme's frequency adjustment.
ChannelLayout scheme_frequencies(const ChannelLayout& base, const MixedGrid& grid,
                                 const SchemeParams& params);

// One query-stride class with its assembled key set. Keys are direct
// tokens (one source id) or pooled groups (the group's members). Key
// rotary positions are in the query class's grid units; physical
// positions are in base-grid units for both sides.
struct KeyAssembly {
  std::vector<int> query_tokens;
  Matrix query_pos;       // [nq x axes] rotary positions
  Matrix query_phys;      // [nq x axes]
  Matrix key_pos;         // [nk x axes] rotary positions
  Matrix key_phys;        // [nk x axes]
  std::vector<std::vector<int>> key_sources;
  Matrix query_strides;   // [nq x axes]
};

std::vector<KeyAssembly> build_assemblies(const MixedGrid& grid, const SchemeParams& params);

struct AttentionDiagnostics {
  struct Block {
    std::vector<int> query_tokens;
    Matrix weights;  // rows sum to 1
  };
  std::vector<Block> blocks;
};

struct AttentionOutput {
  Matrix values;
  std::optional<AttentionDiagnostics> diagnostics;
};

// Single-resolution rotary attention at native integer indices.
AttentionOutput attend_reference(const TokenGrid& grid, const Matrix& Q, const Matrix& K,
                                 const Matrix& V, const ChannelLayout& layout,
                                 bool keep_weights = false);

// Mixed-resolution rotary attention under the chosen scheme.
AttentionOutput attend_mixed(const MixedGrid& grid, const Matrix& Q, const Matrix& K,
                             const Matrix& V, const ChannelLayout& layout,
                             const SchemeParams& params, bool keep_weights = false);

// Worst-case gap between the rotary offset a scheme feeds the kernel and
// the physical offset in query-stride units:
//   max over query/effective-key pairs and axes of
//   | delta_scheme - delta_physical / query_stride |
double phase_consistency_error(const MixedGrid& grid, const SchemeParams& params);

// Precomputed per-class softmax weights for fixed per-head query/key
// patterns; content then flows through apply(). Head h uses row h of
// q_patterns / k_patterns. Weights average over heads.
class MixedAttentionOperator {
 public:
  MixedAttentionOperator(const MixedGrid& grid, const Matrix& q_patterns,
                         const Matrix& k_patterns, const ChannelLayout& layout,
                         const SchemeParams& params);

  // values: one row per token. Returns one row per token.
  Matrix apply(const Matrix& values) const;

  int num_tokens() const { return num_tokens_; }

 private:
  struct Block {
    std::vector<int> query_tokens;
    std::vector<std::vector<int>> key_sources;
    Matrix weights;  // [nq x nk], head-averaged
  };
  std::vector<Block> blocks_;
  PoolMode pool_ = PoolMode::mean;
  int num_tokens_ = 0;
};

}  // namespace crpa
