#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellsrc/forward.hpp"

namespace ellsrc {

enum class Projector {
  RangeComplement,  // P: onto the orthogonal complement of the nullspace
  Nullspace         // P^N = I - P
};

/// SVD of the Gram-weighted forward matrix L'K with a relative rank cut.
/// Everything downstream (projectors, weights, minimum-norm solutions) is a
/// query against this decomposition.
struct SpectralDecomposition {
  Eigen::VectorXd sigma;       // nonincreasing, length min(m,n)
  Eigen::MatrixXd U;           // m x m, Gram-weighted boundary coordinates
  Eigen::MatrixXd V;           // n x n, source-basis coordinates
  Eigen::MatrixXd gram_chol;   // copy of L so data can be weighted here
  int rank = 0;
  double tol = 0.0;            // relative threshold actually used

  int n() const { return int(V.rows()); }
  int m() const { return int(U.rows()); }
};

inline SpectralDecomposition decompose_matrix(const Eigen::MatrixXd& weighted_forward,
                                              const Eigen::MatrixXd& gram_chol,
                                              std::optional<double> rank_tol = {}) {
  SpectralDecomposition d;
  d.gram_chol = gram_chol;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(weighted_forward,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  d.sigma = svd.singularValues();
  d.U = svd.matrixU();
  d.V = svd.matrixV();

  const auto m = weighted_forward.rows(), n = weighted_forward.cols();
  d.tol = rank_tol.value_or(double(std::max(m, n)) * std::numeric_limits<double>::epsilon());
  if (!(d.tol > 0.0) || !(d.tol < 1.0))
    throw std::invalid_argument("decompose: rank tolerance must lie in (0,1)");
  const double sigma1 = d.sigma.size() > 0 ? d.sigma[0] : 0.0;
  d.rank = 0;
  for (int i = 0; i < d.sigma.size(); ++i)
    if (d.sigma[i] > d.tol * sigma1) ++d.rank;
  if (sigma1 == 0.0) d.rank = 0;
  return d;
}

inline SpectralDecomposition decompose(const ForwardOperator& op,
                                       std::optional<double> rank_tol = {}) {
  return decompose_matrix(op.K_weighted, op.gram_chol, rank_tol);
}

inline Eigen::VectorXd project(const SpectralDecomposition& d, const Eigen::VectorXd& x,
                               Projector which) {
  if (x.size() != d.n()) throw std::invalid_argument("project: vector length mismatch");
  const auto vr = d.V.leftCols(d.rank);
  const Eigen::VectorXd px = vr * (vr.transpose() * x);
  return which == Projector::RangeComplement ? px : Eigen::VectorXd(x - px);
}

/// Diagonal weights w_i = |P phi_i|: the norms of the basis projections onto
/// the nullspace complement. Construction fails loudly when any weight falls
/// below the floor, which signals a basis function numerically inside the
/// nullspace.
struct Weights {
  Eigen::VectorXd w;
  double floor_value = 0.0;

  int n() const { return int(w.size()); }
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& x) const {
    return x.cwiseQuotient(w);
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return x.cwiseProduct(w); }
};

inline Weights weight_operator(const SpectralDecomposition& d, double floor = 1e-8) {
  if (!(floor > 0.0)) throw std::invalid_argument("weight_operator: floor must be positive");
  Weights weights;
  weights.floor_value = floor;
  weights.w = d.V.leftCols(d.rank).rowwise().norm();
  for (int i = 0; i < weights.w.size(); ++i)
    if (weights.w[i] < floor)
      throw std::runtime_error("weight_operator: weight " + std::to_string(i) + " = " +
                               std::to_string(weights.w[i]) +
                               " below floor; basis function lies numerically in the nullspace");
  return weights;
}

/// Minimum-norm least-squares solution of K x = d in the Y inner product:
/// x = V_r diag(1/sigma) U_r' (L'd). Lies in the range of P.
inline Eigen::VectorXd min_norm_solution(const SpectralDecomposition& d, const BoundaryData& data) {
  if (data.values.size() != d.m())
    throw std::invalid_argument("min_norm_solution: data length mismatch");
  const Eigen::VectorXd weighted = d.gram_chol.transpose() * data.values;
  const Eigen::VectorXd coeff = d.U.leftCols(d.rank).transpose() * weighted;
  return d.V.leftCols(d.rank) * coeff.cwiseQuotient(d.sigma.head(d.rank));
}

/// One row per source cell: distance between cell centers and the coefficient
/// the weighted recovery of basis function j places on cell i.
struct DecayRow {
  int cell = 0;
  double distance = 0.0;
  double value = 0.0;
};

/// Spatial decay of the weighted recovery of basis function j, computed by
/// the projector route: value_i = (P e_j)_i / w_i.
inline std::vector<DecayRow> decay_profile(const SpectralDecomposition& d, const Weights& weights,
                                           int j, const std::vector<Eigen::Vector2d>& centers) {
  if (j < 0 || j >= d.n()) throw std::invalid_argument("decay_profile: invalid source index");
  if (int(centers.size()) != d.n())
    throw std::invalid_argument("decay_profile: center count mismatch");
  const Eigen::VectorXd pj =
      project(d, Eigen::VectorXd::Unit(d.n(), j), Projector::RangeComplement);
  std::vector<DecayRow> rows(std::size_t(d.n()));
  for (int i = 0; i < d.n(); ++i) {
    rows[std::size_t(i)].cell = i;
    rows[std::size_t(i)].distance = (centers[std::size_t(i)] - centers[std::size_t(j)]).norm();
    rows[std::size_t(i)].value = pj[i] / weights.w[i];
  }
  return rows;
}

}  // namespace ellsrc
