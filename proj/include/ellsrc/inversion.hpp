#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellsrc/forward.hpp"
#include "ellsrc/spectral.hpp"

namespace ellsrc {

enum class Method { I, II, III };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::I: return "I";
    case Method::II: return "II";
    default: return "III";
  }
}

/// Recovered source: coefficients in the normalized cell basis plus the
/// piecewise-constant field values (coefficients / sqrt(cell area)). The
/// residual is recomputed from the returned coefficients.
struct SourceEstimate {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd field;
  Method method = Method::I;
  double alpha = 0.0;
  double residual = 0.0;  // |K c - d|_Y of the returned coefficients
  double penalty = 0.0;   // 0.5 * alpha * (penalty norm of the minimizer)^2
};

namespace detail {

// Ridge solve (A'A + alpha I) x = A'b by dense Cholesky of the SPD normal
// equations; sizes here are a few hundred at most.
inline Eigen::VectorXd tikhonov_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                      double alpha) {
  Eigen::MatrixXd normal = a.transpose() * a;
  normal.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("tikhonov_solve: normal-equation factorization failed");
  return llt.solve(a.transpose() * b);
}

inline SourceEstimate finalize(const ForwardOperator& op, const BoundaryData& d,
                               Eigen::VectorXd coeffs, Method method, double alpha,
                               double penalty) {
  SourceEstimate est;
  est.method = method;
  est.alpha = alpha;
  est.penalty = penalty;
  est.field = coeffs * op.source_grid.basis_scale();
  est.residual = op.ynorm(op.K * coeffs - d.values);
  est.coefficients = std::move(coeffs);
  return est;
}

}  // namespace detail

/// Standard Tikhonov output mapped through the inverse weighting:
/// solve (K'K + alpha I) x = K'd in Y-weighted coordinates, return W^{-1} x.
inline SourceEstimate method_I(const ForwardOperator& op, const Weights& weights,
                               const BoundaryData& d, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("method_I: alpha must be positive");
  const Eigen::VectorXd x =
      detail::tikhonov_solve(op.K_weighted, op.to_weighted(d.values), alpha);
  return detail::finalize(op, d, weights.apply_inverse(x), Method::I, alpha,
                          0.5 * alpha * x.squaredNorm());
}

/// Tikhonov on the reweighted operator: minimize
/// 0.5 |K W^{-1} y - d|_Y^2 + 0.5 alpha |y|^2 and return y.
inline SourceEstimate method_II(const ForwardOperator& op, const Weights& weights,
                                const BoundaryData& d, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("method_II: alpha must be positive");
  const Eigen::MatrixXd kw =
      op.K_weighted * weights.w.cwiseInverse().asDiagonal();
  const Eigen::VectorXd y = detail::tikhonov_solve(kw, op.to_weighted(d.values), alpha);
  return detail::finalize(op, d, y, Method::II, alpha, 0.5 * alpha * y.squaredNorm());
}

/// Weighted Tikhonov: the minimizer of 0.5 |K z - d|_Y^2 + 0.5 alpha |W z|^2,
/// obtained as W^{-1} applied to the Method II minimizer.
inline SourceEstimate method_III(const ForwardOperator& op, const Weights& weights,
                                 const BoundaryData& d, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("method_III: alpha must be positive");
  SourceEstimate est = method_II(op, weights, d, alpha);
  const Eigen::VectorXd z = weights.apply_inverse(est.coefficients);
  return detail::finalize(op, d, z, Method::III, alpha,
                          0.5 * alpha * weights.apply(z).squaredNorm());
}

struct MethodErrorRow {
  double alpha = 0.0;
  double method_I = 0.0;
  double scaled_II = 0.0;  // |e_j - y_alpha / w_j|
  double method_III = 0.0;
};

/// Recovery errors of the three methods against the single basis source j,
/// with Method II rescaled by 1/w_j as in the sharpened-recovery bound.
inline std::vector<MethodErrorRow> compare_methods_on_basis(const ForwardOperator& op,
                                                            const Weights& weights, int j,
                                                            const std::vector<double>& alphas) {
  if (j < 0 || j >= op.n_sources())
    throw std::invalid_argument("compare_methods_on_basis: invalid source index");
  const BoundaryData d = apply_forward(op, Eigen::VectorXd::Unit(op.n_sources(), j));
  const Eigen::VectorXd truth = Eigen::VectorXd::Unit(op.n_sources(), j);
  std::vector<MethodErrorRow> rows;
  rows.reserve(alphas.size());
  for (double alpha : alphas) {
    MethodErrorRow row;
    row.alpha = alpha;
    row.method_I = (truth - method_I(op, weights, d, alpha).coefficients).norm();
    row.scaled_II =
        (truth - method_II(op, weights, d, alpha).coefficients / weights.w[j]).norm();
    row.method_III = (truth - method_III(op, weights, d, alpha).coefficients).norm();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ellsrc
