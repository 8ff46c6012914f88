#include "crpa/probe.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace crpa {

DeltaCurve kappa_curve(const Matrix& Q, const Matrix& K, const FrequencySchedule& fs,
                       const Vector& deltas, char axis, std::optional<int> timestep) {
  if (Q.rows() != K.rows()) throw std::invalid_argument("need matching query/key sample counts");
  if (Q.rows() == 0) throw std::invalid_argument("need at least one sample pair");
  if (Q.cols() != fs.dim() || K.cols() != fs.dim()) {
    throw std::invalid_argument("sample width does not match schedule dimension");
  }
  Matrix Qn = Q;
  Matrix Kn = K;
  for (Eigen::Index r = 0; r < Q.rows(); ++r) {
    const double qn = Qn.row(r).norm();
    const double kn = Kn.row(r).norm();
    if (qn == 0.0 || kn == 0.0) {
      throw std::invalid_argument("sample " + std::to_string(r) + " has zero norm");
    }
    Qn.row(r) /= qn;
    Kn.row(r) /= kn;
  }
  DeltaCurve curve;
  curve.axis = axis;
  curve.deltas = deltas;
  curve.means.resize(deltas.size());
  curve.sample_count = static_cast<int>(Q.rows());
  curve.timestep = timestep;
  for (Eigen::Index d = 0; d < deltas.size(); ++d) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < Q.rows(); ++r) {
      acc += score_relative(Qn.row(r).transpose(), Kn.row(r).transpose(), deltas[d], fs);
    }
    curve.means[d] = acc / static_cast<double>(Q.rows());
  }
  return curve;
}

Vector integer_deltas(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("offset range is empty");
  Vector v(hi - lo + 1);
  for (int i = 0; i <= hi - lo; ++i) v[i] = lo + i;
  return v;
}

double half_width_at_half_max(const DeltaCurve& curve) {
  const Vector& d = curve.deltas;
  const Vector& k = curve.means;
  Eigen::Index zero = -1;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] == 0.0) {
      zero = i;
      break;
    }
  }
  if (zero < 0) throw std::invalid_argument("curve must include delta = 0");
  const double half = 0.5 * k[zero];
  for (Eigen::Index i = zero + 1; i < d.size(); ++i) {
    if (k[i] < half) {
      const double t = (half - k[i - 1]) / (k[i] - k[i - 1]);
      return d[i - 1] + t * (d[i] - d[i - 1]);
    }
  }
  return std::numeric_limits<double>::infinity();
}

HeadStats rds_score(const Matrix& weight_rows, double threshold) {
  const Eigen::Index d = weight_rows.rows();
  if (d < 2 || d % 2 != 0) {
    throw std::invalid_argument("weight matrix must have an even number of rows");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d / 2; ++i) {
    const auto a = weight_rows.row(2 * i);
    const auto b = weight_rows.row(2 * i + 1);
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
      throw std::invalid_argument("weight row " + std::to_string(na == 0.0 ? 2 * i : 2 * i + 1) +
                                  " has zero norm");
    }
    acc += std::abs(a.dot(b) / (na * nb));
  }
  HeadStats stats;
  stats.rds = 2.0 * acc / static_cast<double>(d);
  stats.threshold = threshold;
  stats.rope_dominant = stats.rds >= threshold;
  return stats;
}

}  // namespace crpa
