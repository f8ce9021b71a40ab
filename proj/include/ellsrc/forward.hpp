#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellsrc/assembly.hpp"
#include "ellsrc/geometry.hpp"

namespace ellsrc {

/// Dirichlet trace values at the observed boundary nodes of a ForwardOperator.
struct BoundaryData {
  Eigen::VectorXd values;
  std::string provenance;
};

/// Dense realization of the source-to-trace map together with the boundary
/// Gram matrix defining the discrete L2 inner product on the observed
/// boundary: <a,b>_Y = a' * gram * b = (L'a)' (L'b) with gram = L * L'.
struct ForwardOperator {
  Eigen::MatrixXd K;           // n_boundary x n_sources
  Eigen::MatrixXd gram;        // boundary mass M_b
  Eigen::MatrixXd gram_chol;   // lower-triangular L
  Eigen::MatrixXd K_weighted;  // L' * K
  std::vector<int> boundary_nodes;
  std::vector<Eigen::Vector2d> boundary_positions;
  SourceGrid source_grid;
  double epsilon = 1.0;

  int n_sources() const { return int(K.cols()); }
  int n_boundary() const { return int(K.rows()); }

  Eigen::VectorXd to_weighted(const Eigen::VectorXd& d) const {
    return gram_chol.transpose() * d;
  }
  double ydot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.dot(gram * b);
  }
  double ynorm(const Eigen::VectorXd& v) const { return std::sqrt(std::max(0.0, ydot(v, v))); }
};

/// Build K column-by-column from one shared factorization, plus the Cholesky
/// factor of the boundary Gram matrix.
inline ForwardOperator build_forward_matrix(const Mesh& mesh, const AssembledOperators& ops,
                                            const SourceGrid& grid, double epsilon) {
  if (ops.n_sources() != grid.n())
    throw std::invalid_argument("build_forward_matrix: operators assembled for a different source grid");
  ForwardOperator op;
  op.source_grid = grid;
  op.epsilon = epsilon;
  op.boundary_nodes = ops.boundary_nodes;
  op.boundary_positions.reserve(op.boundary_nodes.size());
  for (int k : op.boundary_nodes) op.boundary_positions.push_back(mesh.nodes[std::size_t(k)]);

  const int nb = ops.n_boundary();
  StateSolver solver(ops, epsilon);
  op.K.resize(nb, grid.n());
  for (int j = 0; j < grid.n(); ++j) {
    const NodalField u = solver.solve_nodal(ops.source_load * Eigen::VectorXd::Unit(grid.n(), j));
    for (int r = 0; r < nb; ++r) op.K(r, j) = u[op.boundary_nodes[std::size_t(r)]];
  }

  op.gram = Eigen::MatrixXd(ops.boundary_mass);
  Eigen::LLT<Eigen::MatrixXd> llt(op.gram);
  if (llt.info() != Eigen::Success) {
    std::vector<char> covered(std::size_t(nb), 0);
    for (int e : ops.observed_edges) {
      const auto& [a, b] = mesh.boundary_edges[std::size_t(e)];
      for (int r = 0; r < nb; ++r)
        if (op.boundary_nodes[std::size_t(r)] == a || op.boundary_nodes[std::size_t(r)] == b)
          covered[std::size_t(r)] = 1;
    }
    std::string missing;
    for (int r = 0; r < nb; ++r)
      if (!covered[std::size_t(r)]) missing += " " + std::to_string(op.boundary_nodes[std::size_t(r)]);
    throw std::runtime_error("build_forward_matrix: boundary Gram matrix is not positive definite;"
                             " nodes without observed-edge support:" + (missing.empty() ? " none" : missing));
  }
  op.gram_chol = llt.matrixL();
  op.K_weighted = op.gram_chol.transpose() * op.K;
  return op;
}

inline BoundaryData apply_forward(const ForwardOperator& op, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != op.n_sources())
    throw std::invalid_argument("apply_forward: coefficient count mismatch");
  return {op.K * coeffs, "forward"};
}

/// Inverse-crime-free data: solve the state equation on the fine mesh with a
/// piecewise-constant source given per fine cell, then sample the trace at
/// the coarse boundary node positions (exact fine nodes by nesting). For the
/// Poisson mode the sampled trace is normalized to zero boundary mean.
inline BoundaryData synthesize_data(const Mesh& fine_mesh, const AssembledOperators& fine_ops,
                                    const Eigen::VectorXd& fine_cell_values, const Mesh& state_mesh,
                                    const ForwardOperator& op) {
  if (fine_mesh.spec.nx % state_mesh.spec.nx != 0 || fine_mesh.spec.ny % state_mesh.spec.ny != 0)
    throw std::invalid_argument("synthesize_data: fine mesh is not a refinement of the state mesh");
  const int fx = fine_mesh.spec.nx / state_mesh.spec.nx;
  const int fy = fine_mesh.spec.ny / state_mesh.spec.ny;
  if (fx != fy || fx < 2)
    throw std::invalid_argument("synthesize_data: fine mesh must refine the state mesh by a factor >= 2");

  StateSolver solver(fine_ops, op.epsilon);
  const NodalField u = solver.solve_nodal(cell_load_vector(fine_mesh, fine_cell_values));

  BoundaryData d;
  d.provenance = "synthetic(fine " + std::to_string(fine_mesh.spec.nx) + "x" +
                 std::to_string(fine_mesh.spec.ny) + ")";
  d.values.resize(int(op.boundary_nodes.size()));
  for (std::size_t r = 0; r < op.boundary_nodes.size(); ++r) {
    const auto& [i, j] = state_mesh.node_coords[std::size_t(op.boundary_nodes[r])];
    const int fine_node = fine_mesh.node_at(i * fx, j * fy);
    if (fine_node < 0)
      throw std::invalid_argument("synthesize_data: coarse boundary node has no fine counterpart");
    d.values[int(r)] = u[fine_node];
  }
  if (op.epsilon == 0.0) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.values.size());
    d.values -= (op.ydot(ones, d.values) / op.ydot(ones, ones)) * ones;
  }
  return d;
}

namespace detail {

// Deterministic standard normals: fixed canonical mapping of mt19937_64
// output plus Box-Muller, so identical seeds give identical data on every
// platform (std::normal_distribution is implementation-defined).
inline Eigen::VectorXd standard_normals(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto canonical = [&gen]() {
    return (double(gen() >> 11) + 0.5) * 0x1.0p-53;  // (0,1)
  };
  Eigen::VectorXd g(n);
  for (int k = 0; k < n; k += 2) {
    const double u1 = canonical(), u2 = canonical();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    g[k] = radius * std::cos(2.0 * M_PI * u2);
    if (k + 1 < n) g[k + 1] = radius * std::sin(2.0 * M_PI * u2);
  }
  return g;
}

}  // namespace detail

/// d + level * |d|_Y / |g|_Y * g with g standard Gaussian per node.
inline BoundaryData add_noise(const ForwardOperator& op, const BoundaryData& d, double level,
                              std::uint64_t seed) {
  if (level < 0.0) throw std::invalid_argument("add_noise: level must be >= 0");
  BoundaryData out = d;
  if (level == 0.0) return out;
  const Eigen::VectorXd g = detail::standard_normals(int(d.values.size()), seed);
  const double gnorm = op.ynorm(g);
  if (gnorm > 0.0) out.values += (level * op.ynorm(d.values) / gnorm) * g;
  out.provenance += "+noise(level=" + std::to_string(level) + ",seed=" + std::to_string(seed) + ")";
  return out;
}

}  // namespace ellsrc
