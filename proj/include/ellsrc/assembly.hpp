#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <stdexcept>
#include <string>
#include <vector>

#include "ellsrc/geometry.hpp"

namespace ellsrc {

using NodalField = Eigen::VectorXd;

/// Finite element matrices for the Neumann problem -div(grad u) + eps*u = f
/// on a Mesh, with bilinear (Q1) elements and exact element integration.
struct AssembledOperators {
  Eigen::SparseMatrix<double> stiffness;      // S, n_nodes x n_nodes
  Eigen::SparseMatrix<double> mass;           // M, n_nodes x n_nodes
  Eigen::SparseMatrix<double> source_load;    // B, n_nodes x n_sources
  Eigen::SparseMatrix<double> boundary_mass;  // M_b over boundary_nodes (observed edges only)
  std::vector<int> boundary_nodes;            // ascending node ids touching observed edges
  std::vector<int> observed_edges;            // ids into mesh.boundary_edges
  Eigen::VectorXd boundary_weight;            // full-boundary integral of each nodal basis fn
  double domain_area = 0.0;
  double observed_length = 0.0;
  double full_boundary_length = 0.0;

  int n_nodes() const { return int(stiffness.rows()); }
  int n_sources() const { return int(source_load.cols()); }
  int n_boundary() const { return int(boundary_nodes.size()); }
};

namespace detail {

// Element matrices on an hx x hy rectangle, nodes CCW from the lower-left.
inline Eigen::Matrix4d element_stiffness(double hx, double hy) {
  Eigen::Matrix4d kxx, kyy;
  kxx << 2, -2, -1, 1,
        -2, 2, 1, -1,
        -1, 1, 2, -2,
         1, -1, -2, 2;
  kyy << 2, 1, -1, -2,
         1, 2, -2, -1,
        -1, -2, 2, 1,
        -2, -1, 1, 2;
  return (hy / (6.0 * hx)) * kxx + (hx / (6.0 * hy)) * kyy;
}

inline Eigen::Matrix4d element_mass(double hx, double hy) {
  Eigen::Matrix4d m;
  m << 4, 2, 1, 2,
       2, 4, 2, 1,
       1, 2, 4, 2,
       2, 1, 2, 4;
  return (hx * hy / 36.0) * m;
}

}  // namespace detail

/// Assemble stiffness, mass, source-to-load, and boundary mass matrices.
/// observed_edges selects the boundary edges carrying data; the boundary
/// mass matrix and boundary node list are restricted to them. Passing a null
/// grid leaves the source-to-load map empty (data-synthesis meshes need no
/// source basis).
inline AssembledOperators assemble(const Mesh& mesh, const SourceGrid* grid,
                                   const std::vector<int>& observed_edges) {
  AssembledOperators ops;
  const int n = mesh.n_nodes();

  const Eigen::Matrix4d ke = detail::element_stiffness(mesh.hx, mesh.hy);
  const Eigen::Matrix4d me = detail::element_mass(mesh.hx, mesh.hy);

  std::vector<Eigen::Triplet<double>> ts, tm;
  ts.reserve(std::size_t(mesh.n_cells()) * 16);
  tm.reserve(std::size_t(mesh.n_cells()) * 16);
  for (const auto& cell : mesh.cells)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        ts.emplace_back(cell[std::size_t(a)], cell[std::size_t(b)], ke(a, b));
        tm.emplace_back(cell[std::size_t(a)], cell[std::size_t(b)], me(a, b));
      }
  ops.stiffness.resize(n, n);
  ops.stiffness.setFromTriplets(ts.begin(), ts.end());
  ops.mass.resize(n, n);
  ops.mass.setFromTriplets(tm.begin(), tm.end());

  // B column i: integral of the normalized indicator of source cell i against
  // each nodal basis function; every mesh cell contributes area/4 per node.
  if (grid) {
    const double node_weight = grid->basis_scale() * mesh.hx * mesh.hy / 4.0;
    std::vector<Eigen::Triplet<double>> tb;
    tb.reserve(std::size_t(grid->n()) * std::size_t(grid->factor) * grid->factor * 4);
    for (int s = 0; s < grid->n(); ++s)
      for (int c : grid->cells[std::size_t(s)].mesh_cells)
        for (int a = 0; a < 4; ++a)
          tb.emplace_back(mesh.cells[std::size_t(c)][std::size_t(a)], s, node_weight);
    ops.source_load.resize(n, grid->n());
    ops.source_load.setFromTriplets(tb.begin(), tb.end());
  } else {
    ops.source_load.resize(n, 0);
  }

  ops.observed_edges = observed_edges;
  std::vector<char> on_boundary(std::size_t(n), 0);
  for (int e : observed_edges) {
    const auto& [a, b] = mesh.boundary_edges[std::size_t(e)];
    on_boundary[std::size_t(a)] = 1;
    on_boundary[std::size_t(b)] = 1;
  }
  std::vector<int> to_local(std::size_t(n), -1);
  for (int k = 0; k < n; ++k)
    if (on_boundary[std::size_t(k)]) {
      to_local[std::size_t(k)] = int(ops.boundary_nodes.size());
      ops.boundary_nodes.push_back(k);
    }
  if (ops.boundary_nodes.empty())
    throw std::invalid_argument("assemble: no observed boundary edges");

  // Consistent edge mass (len/6)*[[2,1],[1,2]] on each observed edge.
  std::vector<Eigen::Triplet<double>> tbm;
  for (int e : observed_edges) {
    const auto& [a, b] = mesh.boundary_edges[std::size_t(e)];
    const double len = mesh.edge_length(e);
    const int la = to_local[std::size_t(a)], lb = to_local[std::size_t(b)];
    tbm.emplace_back(la, la, len / 3.0);
    tbm.emplace_back(lb, lb, len / 3.0);
    tbm.emplace_back(la, lb, len / 6.0);
    tbm.emplace_back(lb, la, len / 6.0);
    ops.observed_length += len;
  }
  ops.boundary_mass.resize(int(ops.boundary_nodes.size()), int(ops.boundary_nodes.size()));
  ops.boundary_mass.setFromTriplets(tbm.begin(), tbm.end());

  ops.boundary_weight = Eigen::VectorXd::Zero(n);
  for (int e = 0; e < int(mesh.boundary_edges.size()); ++e) {
    const auto& [a, b] = mesh.boundary_edges[std::size_t(e)];
    const double half = 0.5 * mesh.edge_length(e);
    ops.boundary_weight[a] += half;
    ops.boundary_weight[b] += half;
    ops.full_boundary_length += 2.0 * half;
  }
  ops.domain_area = mesh.domain_area();
  return ops;
}

inline AssembledOperators assemble(const Mesh& mesh, const SourceGrid& grid,
                                   const std::vector<int>& observed_edges) {
  return assemble(mesh, &grid, observed_edges);
}

inline AssembledOperators assemble(const Mesh& mesh, const SourceGrid& grid) {
  return assemble(mesh, &grid, mesh.all_boundary_edges());
}

inline AssembledOperators assemble(const Mesh& mesh) {
  return assemble(mesh, nullptr, mesh.all_boundary_edges());
}

/// Nodal load vector of a piecewise-constant field given per retained cell.
inline Eigen::VectorXd cell_load_vector(const Mesh& mesh, const Eigen::VectorXd& cell_values) {
  if (cell_values.size() != mesh.n_cells())
    throw std::invalid_argument("cell_load_vector: value count does not match cell count");
  Eigen::VectorXd load = Eigen::VectorXd::Zero(mesh.n_nodes());
  const double quarter = mesh.hx * mesh.hy / 4.0;
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int a = 0; a < 4; ++a) load[mesh.cells[std::size_t(c)][std::size_t(a)]] += quarter * cell_values[c];
  return load;
}

/// Solves (S + eps*M) u = load with the Neumann operators, factorized once.
///
/// For eps = 0 the load is first mean-corrected (the source is replaced by
/// source - mean) and the singular Neumann system is closed by the single
/// constraint "boundary integral of u equals zero", enforced through one
/// Lagrange multiplier row/column.
class StateSolver {
 public:
  StateSolver(const AssembledOperators& ops, double epsilon)
      : eps_(epsilon), n_(ops.n_nodes()), area_(ops.domain_area) {
    if (epsilon < 0.0) throw std::invalid_argument("StateSolver: epsilon must be >= 0");
    if (epsilon > 0.0) {
      Eigen::SparseMatrix<double> a = ops.stiffness + epsilon * ops.mass;
      spd_.compute(a);
      if (spd_.info() != Eigen::Success)
        throw std::runtime_error("StateSolver: factorization of S + eps*M failed");
    } else {
      lumped_mass_ = ops.mass * Eigen::VectorXd::Ones(n_);
      std::vector<Eigen::Triplet<double>> t;
      t.reserve(std::size_t(ops.stiffness.nonZeros()) + 2 * std::size_t(n_));
      for (int k = 0; k < ops.stiffness.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(ops.stiffness, k); it; ++it)
          t.emplace_back(int(it.row()), int(it.col()), it.value());
      for (int k = 0; k < n_; ++k) {
        const double c = ops.boundary_weight[k];
        if (c != 0.0) {
          t.emplace_back(k, n_, c);
          t.emplace_back(n_, k, c);
        }
      }
      Eigen::SparseMatrix<double> bordered(n_ + 1, n_ + 1);
      bordered.setFromTriplets(t.begin(), t.end());
      lu_.compute(bordered);
      if (lu_.info() != Eigen::Success)
        throw std::runtime_error("StateSolver: factorization of the constrained Poisson system failed");
    }
  }

  StateSolver(const StateSolver&) = delete;
  StateSolver& operator=(const StateSolver&) = delete;

  double epsilon() const { return eps_; }

  NodalField solve_nodal(const Eigen::VectorXd& load) const {
    if (load.size() != n_) throw std::invalid_argument("StateSolver: load size mismatch");
    if (eps_ > 0.0) {
      NodalField u = spd_.solve(load);
      if (spd_.info() != Eigen::Success) throw std::runtime_error("StateSolver: solve failed");
      return u;
    }
    // Total load equals the integral of the source, so the mean correction
    // is exact for any assembled load.
    const double mean = load.sum() / area_;
    Eigen::VectorXd rhs(n_ + 1);
    rhs.head(n_) = load - mean * lumped_mass_;
    rhs[n_] = 0.0;
    Eigen::VectorXd x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) throw std::runtime_error("StateSolver: solve failed");
    return x.head(n_);
  }

 private:
  double eps_;
  int n_;
  double area_;
  Eigen::VectorXd lumped_mass_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> spd_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

/// One-shot state solve for a source given in the normalized cell basis.
inline NodalField solve_state(const AssembledOperators& ops, const Eigen::VectorXd& source_coeffs,
                              double epsilon) {
  if (source_coeffs.size() != ops.n_sources())
    throw std::invalid_argument("solve_state: coefficient count does not match source grid");
  StateSolver solver(ops, epsilon);
  return solver.solve_nodal(ops.source_load * source_coeffs);
}

}  // namespace ellsrc
