#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace embia {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(v))). Entries equal to -inf contribute nothing; an all -inf
// input yields -inf.
template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.derived().array() - top).exp().sum());
}

// Row-wise softmax of a matrix of log weights, written into `out`.
// Returns the per-row log normalizers.
inline Vector normalize_log_rows(const Matrix& log_weights, Matrix& out) {
  out.resize(log_weights.rows(), log_weights.cols());
  Vector lognorm(log_weights.rows());
  for (Index i = 0; i < log_weights.rows(); ++i) {
    const double lse = log_sum_exp(log_weights.row(i));
    lognorm(i) = lse;
    out.row(i) = (log_weights.row(i).array() - lse).exp();
    // exp(x - lse) may sum to 1 +/- a few ulps; fold the residual back in.
    out.row(i) /= out.row(i).sum();
  }
  return lognorm;
}

// x log x with the 0 log 0 = 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace embia
