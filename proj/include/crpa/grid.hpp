#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crpa/rope.hpp"

namespace crpa {

// Uniform token grid. Tokens enumerate row-major (axis 0 slowest).
// Native positions are per-axis integer indices; physical positions
// multiply by the axis stride.
class TokenGrid {
 public:
  struct Axis {
    int length = 0;
    double stride = 1.0;
  };

  explicit TokenGrid(std::vector<Axis> axes);

  int num_tokens() const { return num_tokens_; }
  int num_axes() const { return static_cast<int>(axes_.size()); }
  const std::vector<Axis>& axes() const { return axes_; }

  Vector native_pos(int token) const;
  Vector physical_pos(int token) const;

  // All native positions, one row per token.
  const Matrix& native_positions() const { return native_; }

 private:
  std::vector<Axis> axes_;
  int num_tokens_ = 0;
  Matrix native_;
};

// Two-resolution token layout over one physical extent. The base grid
// has unit spacing; selected base cells are replaced by ratio^D
// upsampled tokens with spacing 1/ratio per axis. Token order is all
// low-res tokens in base row-major order, then all high-res tokens in
// fine row-major order. Physical positions are in base-grid units.
class MixedGrid {
 public:
  struct AxisDef {
    int lr_length = 0;
    int ratio = 1;
  };

  // Half-open index box, per-axis lo/hi.
  struct Box {
    std::vector<long> lo;
    std::vector<long> hi;
  };

  // hr_cells marks base cells to upsample, row-major, size prod(lr_length).
  MixedGrid(std::vector<AxisDef> axes, std::vector<std::uint8_t> hr_cells);

  // Boxes given in fine-grid token indices. Box edges must be multiples
  // of the axis ratio, otherwise the upsampled patch cannot be pooled
  // back onto whole base cells.
  MixedGrid(std::vector<AxisDef> axes, const std::vector<Box>& hr_token_boxes);

  // Centered box covering approximately `area_fraction` of the base area.
  static MixedGrid center_box(const std::vector<int>& lr_lengths, int ratio,
                              double area_fraction);

  static MixedGrid from_json(const nlohmann::json& j);

  int num_tokens() const { return static_cast<int>(is_hr_.size()); }
  int num_axes() const { return static_cast<int>(axes_.size()); }
  int num_lr_tokens() const { return static_cast<int>(lr_tokens_.size()); }
  int num_hr_tokens() const { return static_cast<int>(hr_tokens_.size()); }
  const std::vector<AxisDef>& axes() const { return axes_; }
  const std::vector<std::uint8_t>& hr_cell_mask() const { return hr_cells_; }
  const std::vector<int>& lr_dims() const { return lr_dims_; }
  const std::vector<int>& hr_dims() const { return hr_dims_; }

  bool is_hr(int token) const { return is_hr_[token]; }
  double stride(int token, int axis) const {
    return is_hr_[token] ? 1.0 / axes_[axis].ratio : 1.0;
  }

  // Per-axis index on the token's own grid.
  Vector native_pos(int token) const { return native_.row(token); }
  const Matrix& native_positions() const { return native_; }

  Vector physical_pos(int token) const;

  const std::vector<int>& lr_tokens() const { return lr_tokens_; }
  const std::vector<int>& hr_tokens() const { return hr_tokens_; }

  // Flat base-cell index: own cell for low-res tokens, parent cell for
  // high-res tokens.
  int base_cell(int token) const { return base_cell_[token]; }

  // High-res tokens grouped by parent base cell, groups in base
  // row-major order, members in fine row-major order. Every group has
  // exactly prod(ratio) members; the first member sits at the cell's
  // base corner.
  struct PoolGroup {
    int cell = 0;                // flat base-cell index
    std::vector<int> cell_idx;   // per-axis base-cell coordinates
    std::vector<int> members;    // token ids
  };
  const std::vector<PoolGroup>& hr_groups() const { return groups_; }

 private:
  void build_tokens();

  std::vector<AxisDef> axes_;
  std::vector<int> lr_dims_;
  std::vector<int> hr_dims_;
  std::vector<std::uint8_t> hr_cells_;
  std::vector<std::uint8_t> is_hr_;
  std::vector<int> base_cell_;
  std::vector<int> lr_tokens_;
  std::vector<int> hr_tokens_;
  std::vector<PoolGroup> groups_;
  Matrix native_;
};

}  // namespace crpa
