#include "crpa/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace crpa {

namespace {

constexpr const char* kSchemeNames[] = {"pi-lr", "pi-hr", "ntk", "pi-ntk", "yarn", "crpa"};

Matrix physical_positions(const MixedGrid& grid) {
  const int n = grid.num_tokens();
  Matrix phys(n, grid.num_axes());
  for (int t = 0; t < n; ++t) phys.row(t) = grid.physical_pos(t).transpose();
  return phys;
}

void softmax_rows_in_place(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp();
    s.row(r) /= s.row(r).sum();
  }
}

// Rows of `patterns` replicated and rotated at the given positions.
Matrix rotate_pattern(const Eigen::Ref<const Eigen::RowVectorXd>& pattern,
                      const ChannelLayout& layout, const Matrix& positions) {
  Matrix rows = pattern.replicate(positions.rows(), 1);
  return rotate_rows(rows, layout, positions);
}

Matrix gather_rows(const Matrix& values, const std::vector<std::vector<int>>& sources,
                   PoolMode pool) {
  Matrix out(static_cast<Eigen::Index>(sources.size()), values.cols());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::vector<int>& src = sources[i];
    if (src.size() == 1 || pool == PoolMode::stride0) {
      out.row(static_cast<Eigen::Index>(i)) = values.row(src.front());
    } else {
      out.row(static_cast<Eigen::Index>(i)).setZero();
      for (int t : src) out.row(static_cast<Eigen::Index>(i)) += values.row(t);
      out.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(src.size());
    }
  }
  return out;
}

}  // namespace

Scheme scheme_from_string(std::string_view name) {
  for (int i = 0; i < 6; ++i) {
    if (name == kSchemeNames[i]) return static_cast<Scheme>(i);
  }
  throw std::invalid_argument("unknown scheme: " + std::string(name));
}

std::string_view to_string(Scheme s) { return kSchemeNames[static_cast<int>(s)]; }

const std::vector<Scheme>& all_schemes() {
  static const std::vector<Scheme> all = {Scheme::pi_lr, Scheme::pi_hr,  Scheme::ntk,
                                          Scheme::pi_ntk, Scheme::yarn, Scheme::crpa};
  return all;
}

Matrix scheme_positions(const MixedGrid& grid, const SchemeParams& params) {
  Matrix pos = physical_positions(grid);
  switch (params.scheme) {
    case Scheme::pi_lr:
      return pos;
    case Scheme::pi_hr:
    case Scheme::ntk:
    case Scheme::yarn:
      for (int a = 0; a < grid.num_axes(); ++a) pos.col(a) *= grid.axes()[a].ratio;
      return pos;
    case Scheme::pi_ntk:
      return pos * params.pi_ntk_linear;
    case Scheme::crpa:
      throw std::invalid_argument("crpa has no shared position map");
  }
  throw std::invalid_argument("unknown scheme");
}

ChannelLayout scheme_frequencies(const ChannelLayout& base, const MixedGrid& grid,
                                 const SchemeParams& params) {
  if (base.num_axes() != grid.num_axes()) {
    throw std::invalid_argument("layout axes must match grid axes");
  }
  switch (params.scheme) {
    case Scheme::pi_lr:
    case Scheme::pi_hr:
    case Scheme::crpa:
      return base;
    case Scheme::ntk:
    case Scheme::pi_ntk: {
      std::vector<FrequencySchedule> out;
      for (int a = 0; a < base.num_axes(); ++a) {
        const FrequencySchedule& fs = base.group(a).freqs;
        const double ratio = grid.axes()[a].ratio;
        const double s = params.ntk_extension.value_or(
            params.scheme == Scheme::ntk ? ratio : ratio / params.pi_ntk_linear);
        out.push_back(ntk_rescale(fs, NtkParams::for_dim(s, fs.dim())));
      }
      return base.with_schedules(std::move(out));
    }
    case Scheme::yarn: {
      std::vector<FrequencySchedule> out;
      for (int a = 0; a < base.num_axes(); ++a) {
        const FrequencySchedule& fs = base.group(a).freqs;
        YarnParams yp;
        yp.train_length = params.yarn_train_length.value_or(grid.axes()[a].lr_length);
        yp.extension_factor = params.yarn_extension.value_or(grid.axes()[a].ratio);
        yp.alpha = params.yarn_alpha;
        yp.beta = params.yarn_beta;
        yp.temperature = params.yarn_temperature;
        out.push_back(yarn_rescale(fs, yp));
      }
      return base.with_schedules(std::move(out));
    }
  }
  throw std::invalid_argument("unknown scheme");
}

std::vector<KeyAssembly> build_assemblies(const MixedGrid& grid, const SchemeParams& params) {
  const int n = grid.num_tokens();
  const int axes = grid.num_axes();
  const Matrix phys = physical_positions(grid);

  auto strides_for = [&](const std::vector<int>& tokens) {
    Matrix s(static_cast<Eigen::Index>(tokens.size()), axes);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      for (int a = 0; a < axes; ++a) s(static_cast<Eigen::Index>(i), a) = grid.stride(tokens[i], a);
    }
    return s;
  };

  if (params.scheme != Scheme::crpa) {
    const Matrix pos = scheme_positions(grid, params);
    KeyAssembly asm1;
    asm1.query_tokens.resize(n);
    for (int t = 0; t < n; ++t) asm1.query_tokens[t] = t;
    asm1.query_pos = pos;
    asm1.query_phys = phys;
    asm1.key_pos = pos;
    asm1.key_phys = phys;
    asm1.key_sources.reserve(n);
    for (int t = 0; t < n; ++t) asm1.key_sources.push_back({t});
    asm1.query_strides = strides_for(asm1.query_tokens);
    return {std::move(asm1)};
  }

  // crpa: group queries by stride class. With every axis ratio equal to 1
  // the two classes coincide and every key stays native.
  const bool distinct_strides = [&] {
    if (grid.num_hr_tokens() == 0 || grid.num_lr_tokens() == 0) return false;
    for (const auto& a : grid.axes()) {
      if (a.ratio != 1) return true;
    }
    return false;
  }();

  if (!distinct_strides) {
    KeyAssembly asm1;
    asm1.query_tokens.resize(n);
    for (int t = 0; t < n; ++t) asm1.query_tokens[t] = t;
    asm1.query_pos = grid.native_positions();
    asm1.query_phys = phys;
    asm1.key_pos = grid.native_positions();
    asm1.key_phys = phys;
    asm1.key_sources.reserve(n);
    for (int t = 0; t < n; ++t) asm1.key_sources.push_back({t});
    asm1.query_strides = strides_for(asm1.query_tokens);
    return {std::move(asm1)};
  }

  std::vector<KeyAssembly> out;

  long long group_size = 1;
  for (const auto& a : grid.axes()) group_size *= a.ratio;

  // Low-res query class: native low-res keys plus high-res groups pooled
  // onto their base cells.
  {
    KeyAssembly lr;
    lr.query_tokens = grid.lr_tokens();
    const int nq = static_cast<int>(lr.query_tokens.size());
    lr.query_pos.resize(nq, axes);
    lr.query_phys.resize(nq, axes);
    for (int i = 0; i < nq; ++i) {
      lr.query_pos.row(i) = grid.native_pos(lr.query_tokens[i]).transpose();
      lr.query_phys.row(i) = phys.row(lr.query_tokens[i]);
    }
    const int nk = grid.num_lr_tokens() + static_cast<int>(grid.hr_groups().size());
    lr.key_pos.resize(nk, axes);
    lr.key_phys.resize(nk, axes);
    lr.key_sources.reserve(nk);
    int j = 0;
    for (int t : grid.lr_tokens()) {
      lr.key_pos.row(j) = grid.native_pos(t).transpose();
      lr.key_phys.row(j) = phys.row(t);
      lr.key_sources.push_back({t});
      ++j;
    }
    for (const MixedGrid::PoolGroup& g : grid.hr_groups()) {
      if (static_cast<long long>(g.members.size()) != group_size) {
        throw std::invalid_argument("HR region not alignable to LR grid");
      }
      for (int a = 0; a < axes; ++a) {
        lr.key_pos(j, a) = g.cell_idx[a];
        lr.key_phys(j, a) = g.cell_idx[a];
      }
      if (params.pool == PoolMode::stride0) {
        lr.key_sources.push_back({g.members.front()});
      } else {
        lr.key_sources.push_back(g.members);
      }
      ++j;
    }
    lr.query_strides = strides_for(lr.query_tokens);
    out.push_back(std::move(lr));
  }

  // High-res query class: native high-res keys plus low-res keys lifted
  // into fine-grid units.
  {
    KeyAssembly hr;
    hr.query_tokens = grid.hr_tokens();
    const int nq = static_cast<int>(hr.query_tokens.size());
    hr.query_pos.resize(nq, axes);
    hr.query_phys.resize(nq, axes);
    for (int i = 0; i < nq; ++i) {
      hr.query_pos.row(i) = grid.native_pos(hr.query_tokens[i]).transpose();
      hr.query_phys.row(i) = phys.row(hr.query_tokens[i]);
    }
    const int nk = n;
    hr.key_pos.resize(nk, axes);
    hr.key_phys.resize(nk, axes);
    hr.key_sources.reserve(nk);
    int j = 0;
    for (int t : grid.lr_tokens()) {
      for (int a = 0; a < axes; ++a) {
        hr.key_pos(j, a) = grid.native_positions()(t, a) * grid.axes()[a].ratio;
      }
      hr.key_phys.row(j) = phys.row(t);
      hr.key_sources.push_back({t});
      ++j;
    }
    for (int t : grid.hr_tokens()) {
      hr.key_pos.row(j) = grid.native_pos(t).transpose();
      hr.key_phys.row(j) = phys.row(t);
      hr.key_sources.push_back({t});
      ++j;
    }
    hr.query_strides = strides_for(hr.query_tokens);
    out.push_back(std::move(hr));
  }

  return out;
}

namespace {

void check_shapes(int n, const Matrix& Q, const Matrix& K, const Matrix& V,
                  const ChannelLayout& layout) {
  if (Q.rows() != n || K.rows() != n || V.rows() != n) {
    throw std::invalid_argument("tensor rows must match token count");
  }
  if (Q.cols() != layout.dim() || K.cols() != layout.dim()) {
    throw std::invalid_argument("query/key width must match layout dimension");
  }
}

}  // namespace

AttentionOutput attend_reference(const TokenGrid& grid, const Matrix& Q, const Matrix& K,
                                 const Matrix& V, const ChannelLayout& layout,
                                 bool keep_weights) {
  check_shapes(grid.num_tokens(), Q, K, V, layout);
  if (grid.num_axes() != layout.num_axes()) {
    throw std::invalid_argument("layout axes must match grid axes");
  }
  const Matrix Qr = rotate_rows(Q, layout, grid.native_positions());
  const Matrix Kr = rotate_rows(K, layout, grid.native_positions());
  Matrix S = Qr * Kr.transpose() / std::sqrt(static_cast<double>(layout.dim()));
  softmax_rows_in_place(S);
  AttentionOutput out;
  out.values = S * V;
  if (keep_weights) {
    AttentionDiagnostics diag;
    AttentionDiagnostics::Block block;
    block.query_tokens.resize(grid.num_tokens());
    for (int t = 0; t < grid.num_tokens(); ++t) block.query_tokens[t] = t;
    block.weights = std::move(S);
    diag.blocks.push_back(std::move(block));
    out.diagnostics = std::move(diag);
  }
  return out;
}

AttentionOutput attend_mixed(const MixedGrid& grid, const Matrix& Q, const Matrix& K,
                             const Matrix& V, const ChannelLayout& layout,
                             const SchemeParams& params, bool keep_weights) {
  check_shapes(grid.num_tokens(), Q, K, V, layout);
  if (grid.num_axes() != layout.num_axes()) {
    throw std::invalid_argument("layout axes must match grid axes");
  }
  const ChannelLayout effective = scheme_frequencies(layout, grid, params);
  const double denom = std::sqrt(static_cast<double>(layout.dim())) *
                       (params.scheme == Scheme::yarn ? params.yarn_temperature : 1.0);

  AttentionOutput out;
  out.values.resize(grid.num_tokens(), V.cols());
  AttentionDiagnostics diag;

  for (const KeyAssembly& a : build_assemblies(grid, params)) {
    Matrix Qc(static_cast<Eigen::Index>(a.query_tokens.size()), Q.cols());
    for (std::size_t i = 0; i < a.query_tokens.size(); ++i) {
      Qc.row(static_cast<Eigen::Index>(i)) = Q.row(a.query_tokens[i]);
    }
    const Matrix Qr = rotate_rows(Qc, effective, a.query_pos);
    const Matrix Kr = rotate_rows(gather_rows(K, a.key_sources, params.pool), effective, a.key_pos);
    const Matrix Vc = gather_rows(V, a.key_sources, params.pool);
    Matrix S = Qr * Kr.transpose() / denom;
    softmax_rows_in_place(S);
    for (std::size_t i = 0; i < a.query_tokens.size(); ++i) {
      out.values.row(a.query_tokens[i]) = S.row(static_cast<Eigen::Index>(i)) * Vc;
    }
    if (keep_weights) {
      diag.blocks.push_back(AttentionDiagnostics::Block{a.query_tokens, std::move(S)});
    }
  }
  if (keep_weights) out.diagnostics = std::move(diag);
  return out;
}

double phase_consistency_error(const MixedGrid& grid, const SchemeParams& params) {
  double worst = 0.0;
  for (const KeyAssembly& a : build_assemblies(grid, params)) {
    for (Eigen::Index i = 0; i < a.query_pos.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.key_pos.rows(); ++j) {
        for (Eigen::Index ax = 0; ax < a.query_pos.cols(); ++ax) {
          const double ds = a.key_pos(j, ax) - a.query_pos(i, ax);
          const double dp = (a.key_phys(j, ax) - a.query_phys(i, ax)) / a.query_strides(i, ax);
          worst = std::max(worst, std::abs(ds - dp));
        }
      }
    }
  }
  return worst;
}

MixedAttentionOperator::MixedAttentionOperator(const MixedGrid& grid, const Matrix& q_patterns,
                                               const Matrix& k_patterns,
                                               const ChannelLayout& layout,
                                               const SchemeParams& params)
    : pool_(params.pool), num_tokens_(grid.num_tokens()) {
  if (q_patterns.rows() != k_patterns.rows() || q_patterns.cols() != layout.dim() ||
      k_patterns.cols() != layout.dim()) {
    throw std::invalid_argument("pattern shape must be num_heads x layout dimension");
  }
  const int heads = static_cast<int>(q_patterns.rows());
  if (heads == 0) throw std::invalid_argument("need at least one head");
  const ChannelLayout effective = scheme_frequencies(layout, grid, params);
  const double denom = std::sqrt(static_cast<double>(layout.dim())) *
                       (params.scheme == Scheme::yarn ? params.yarn_temperature : 1.0);

  for (KeyAssembly& a : build_assemblies(grid, params)) {
    Block block;
    block.query_tokens = std::move(a.query_tokens);
    block.key_sources = std::move(a.key_sources);
    Matrix avg;
    for (int h = 0; h < heads; ++h) {
      const Matrix Qr = rotate_pattern(q_patterns.row(h), effective, a.query_pos);
      const Matrix Kr = rotate_pattern(k_patterns.row(h), effective, a.key_pos);
      Matrix S = Qr * Kr.transpose() / denom;
      softmax_rows_in_place(S);
      if (h == 0) {
        avg = std::move(S);
      } else {
        avg += S;
      }
    }
    block.weights = avg / static_cast<double>(heads);
    blocks_.push_back(std::move(block));
  }
}

Matrix MixedAttentionOperator::apply(const Matrix& values) const {
  if (values.rows() != num_tokens_) {
    throw std::invalid_argument("value rows must match token count");
  }
  Matrix out(num_tokens_, values.cols());
  for (const Block& b : blocks_) {
    const Matrix Vc = gather_rows(values, b.key_sources, pool_);
    for (std::size_t i = 0; i < b.query_tokens.size(); ++i) {
      out.row(b.query_tokens[i]) = b.weights.row(static_cast<Eigen::Index>(i)) * Vc;
    }
  }
  return out;
}

}  // namespace crpa
