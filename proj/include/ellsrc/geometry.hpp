#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ellsrc {

/// Structured rectilinear domain: a width x height rectangle split into
/// nx x ny cells, with an optional set of removed cells. The retained cell
/// set must be edge-connected; corner-only contact counts as disconnected.
struct DomainSpec {
  double width = 1.0;
  double height = 1.0;
  int nx = 1;
  int ny = 1;
  std::set<std::pair<int, int>> removed_cells;

  bool is_removed(int i, int j) const {
    return removed_cells.count({i, j}) > 0;
  }

  /// Same domain with every cell split into factor x factor cells.
  DomainSpec refined(int factor) const {
    DomainSpec fine;
    fine.width = width;
    fine.height = height;
    fine.nx = nx * factor;
    fine.ny = ny * factor;
    for (const auto& [i, j] : removed_cells) {
      for (int dj = 0; dj < factor; ++dj)
        for (int di = 0; di < factor; ++di)
          fine.removed_cells.insert({i * factor + di, j * factor + dj});
    }
    return fine;
  }
};

namespace detail {

inline void validate_domain_spec(const DomainSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1)
    throw std::invalid_argument("DomainSpec: nx and ny must be >= 1");
  if (!(spec.width > 0.0) || !(spec.height > 0.0))
    throw std::invalid_argument("DomainSpec: width and height must be positive");
  for (const auto& [i, j] : spec.removed_cells) {
    if (i < 0 || i >= spec.nx || j < 0 || j >= spec.ny)
      throw std::invalid_argument("DomainSpec: removed cell (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") outside [0,nx) x [0,ny)");
  }
  const std::int64_t total = std::int64_t(spec.nx) * spec.ny;
  const std::int64_t retained = total - std::int64_t(spec.removed_cells.size());
  if (retained <= 0)
    throw std::invalid_argument("DomainSpec: no retained cells");

  // Edge-connectivity of the retained set (4-neighbor flood fill).
  std::vector<char> seen(std::size_t(total), 0);
  auto idx = [&](int i, int j) { return std::size_t(j) * spec.nx + i; };
  std::vector<std::pair<int, int>> stack;
  for (int j = 0; j < spec.ny && stack.empty(); ++j)
    for (int i = 0; i < spec.nx && stack.empty(); ++i)
      if (!spec.is_removed(i, j)) stack.push_back({i, j});
  std::int64_t reached = 0;
  seen[idx(stack[0].first, stack[0].second)] = 1;
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    stack.pop_back();
    ++reached;
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      int ii = i + di[k], jj = j + dj[k];
      if (ii < 0 || ii >= spec.nx || jj < 0 || jj >= spec.ny) continue;
      if (spec.is_removed(ii, jj) || seen[idx(ii, jj)]) continue;
      seen[idx(ii, jj)] = 1;
      stack.push_back({ii, jj});
    }
  }
  if (reached != retained)
    throw std::invalid_argument("DomainSpec: retained cells are not edge-connected (" +
                                std::to_string(reached) + " of " + std::to_string(retained) +
                                " reachable)");
}

}  // namespace detail

/// Quadrilateral mesh of a DomainSpec. Cells are congruent hx x hy
/// rectangles listed row-major (bottom row first); nodes are the lattice
/// points touching at least one retained cell. Boundary edges are oriented
/// with the domain on the left, so the outward normal of edge (a,b) is the
/// direction (b-a) rotated clockwise by 90 degrees.
struct Mesh {
  DomainSpec spec;
  double hx = 0.0;
  double hy = 0.0;
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 4>> cells;             // CCW node ids per cell
  std::vector<std::pair<int, int>> cell_coords;      // lattice (i,j) per cell
  std::vector<std::pair<int, int>> node_coords;      // lattice (i,j) per node
  std::vector<int> node_of_lattice;                  // (nx+1)*(ny+1), -1 if absent
  std::vector<int> cell_of_lattice;                  // nx*ny, -1 if removed
  std::vector<std::pair<int, int>> boundary_edges;   // (a,b) node ids

  int n_nodes() const { return int(nodes.size()); }
  int n_cells() const { return int(cells.size()); }

  int node_at(int i, int j) const {
    if (i < 0 || i > spec.nx || j < 0 || j > spec.ny) return -1;
    return node_of_lattice[std::size_t(j) * (spec.nx + 1) + i];
  }
  int cell_at(int i, int j) const {
    if (i < 0 || i >= spec.nx || j < 0 || j >= spec.ny) return -1;
    return cell_of_lattice[std::size_t(j) * spec.nx + i];
  }

  double cell_area() const { return hx * hy; }

  Eigen::Vector2d cell_center(int c) const {
    const auto& [i, j] = cell_coords[std::size_t(c)];
    return {((i + 0.5) / spec.nx) * spec.width, ((j + 0.5) / spec.ny) * spec.height};
  }

  double edge_length(int e) const {
    const auto& [a, b] = boundary_edges[std::size_t(e)];
    return (nodes[std::size_t(b)] - nodes[std::size_t(a)]).norm();
  }

  Eigen::Vector2d edge_midpoint(int e) const {
    const auto& [a, b] = boundary_edges[std::size_t(e)];
    return 0.5 * (nodes[std::size_t(a)] + nodes[std::size_t(b)]);
  }

  /// Outward unit normal of a boundary edge.
  Eigen::Vector2d edge_normal(int e) const {
    const auto& [a, b] = boundary_edges[std::size_t(e)];
    Eigen::Vector2d d = nodes[std::size_t(b)] - nodes[std::size_t(a)];
    d.normalize();
    return {d.y(), -d.x()};
  }

  double boundary_length() const {
    double total = 0.0;
    for (int e = 0; e < int(boundary_edges.size()); ++e) total += edge_length(e);
    return total;
  }

  double domain_area() const { return hx * hy * n_cells(); }

  std::vector<int> all_boundary_edges() const {
    std::vector<int> ids(boundary_edges.size());
    for (std::size_t e = 0; e < ids.size(); ++e) ids[e] = int(e);
    return ids;
  }
};

inline Mesh build_structured_mesh(const DomainSpec& spec) {
  detail::validate_domain_spec(spec);

  Mesh mesh;
  mesh.spec = spec;
  mesh.hx = spec.width / spec.nx;
  mesh.hy = spec.height / spec.ny;
  mesh.node_of_lattice.assign(std::size_t(spec.nx + 1) * (spec.ny + 1), -1);
  mesh.cell_of_lattice.assign(std::size_t(spec.nx) * spec.ny, -1);

  auto touches_retained = [&](int i, int j) {
    for (int dj = -1; dj <= 0; ++dj)
      for (int di = -1; di <= 0; ++di) {
        int ci = i + di, cj = j + dj;
        if (ci < 0 || ci >= spec.nx || cj < 0 || cj >= spec.ny) continue;
        if (!spec.is_removed(ci, cj)) return true;
      }
    return false;
  };

  for (int j = 0; j <= spec.ny; ++j)
    for (int i = 0; i <= spec.nx; ++i) {
      if (!touches_retained(i, j)) continue;
      mesh.node_of_lattice[std::size_t(j) * (spec.nx + 1) + i] = int(mesh.nodes.size());
      // ratio first: equal lattice fractions give bit-identical positions
      // across refinements, so nested meshes share nodes exactly
      mesh.nodes.push_back({(double(i) / spec.nx) * spec.width, (double(j) / spec.ny) * spec.height});
      mesh.node_coords.push_back({i, j});
    }

  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      if (spec.is_removed(i, j)) continue;
      mesh.cell_of_lattice[std::size_t(j) * spec.nx + i] = int(mesh.cells.size());
      mesh.cells.push_back({mesh.node_at(i, j), mesh.node_at(i + 1, j), mesh.node_at(i + 1, j + 1),
                            mesh.node_at(i, j + 1)});
      mesh.cell_coords.push_back({i, j});
    }

  // Boundary edges: cell sides with no retained neighbor, in cell-CCW
  // orientation so the domain lies on the left.
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& [i, j] = mesh.cell_coords[std::size_t(c)];
    const auto& q = mesh.cells[std::size_t(c)];
    const int neighbor_i[4] = {i, i + 1, i, i - 1};  // below, right, above, left
    const int neighbor_j[4] = {j - 1, j, j + 1, j};
    const std::pair<int, int> side[4] = {{q[0], q[1]}, {q[1], q[2]}, {q[2], q[3]}, {q[3], q[0]}};
    for (int s = 0; s < 4; ++s)
      if (mesh.cell_at(neighbor_i[s], neighbor_j[s]) < 0) mesh.boundary_edges.push_back(side[s]);
  }
  return mesh;
}

inline Mesh refine(const Mesh& mesh, int factor) {
  if (factor < 2) throw std::invalid_argument("refine: factor must be >= 2");
  return build_structured_mesh(mesh.spec.refined(factor));
}

/// One coarse source cell: a factor x factor block of mesh cells.
struct SourceCell {
  std::pair<int, int> block;     // (I,J) in the block lattice
  Eigen::Vector2d center;
  std::vector<int> mesh_cells;   // ids in the originating mesh
};

/// Disjoint uniform source cells tiling the retained domain. Carries the
/// orthonormal piecewise-constant basis: basis function i equals
/// cell_area^{-1/2} on cells[i] and zero elsewhere.
struct SourceGrid {
  int factor = 1;
  int bx = 0, by = 0;            // block lattice dimensions
  double block_w = 0.0, block_h = 0.0;
  double cell_area = 0.0;        // A, identical for all cells
  std::vector<SourceCell> cells;
  std::vector<int> cell_of_block;  // bx*by, -1 if removed

  int n() const { return int(cells.size()); }

  int cell_at_block(int I, int J) const {
    if (I < 0 || I >= bx || J < 0 || J >= by) return -1;
    return cell_of_block[std::size_t(J) * bx + I];
  }

  double basis_scale() const { return 1.0 / std::sqrt(cell_area); }

  std::vector<Eigen::Vector2d> centers() const {
    std::vector<Eigen::Vector2d> zs(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) zs[i] = cells[i].center;
    return zs;
  }

  /// Axis-aligned bounding box of source cell c.
  std::pair<Eigen::Vector2d, Eigen::Vector2d> cell_box(int c) const {
    const auto& [I, J] = cells[std::size_t(c)].block;
    Eigen::Vector2d lo(I * block_w, J * block_h);
    Eigen::Vector2d hi((I + 1) * block_w, (J + 1) * block_h);
    return {lo, hi};
  }
};

inline SourceGrid coarsen_to_source_grid(const Mesh& mesh, int factor) {
  if (factor < 1) throw std::invalid_argument("coarsen_to_source_grid: factor must be >= 1");
  const auto& spec = mesh.spec;
  if (spec.nx % factor != 0 || spec.ny % factor != 0)
    throw std::invalid_argument("coarsen_to_source_grid: mesh cell counts not divisible by factor");

  SourceGrid grid;
  grid.factor = factor;
  grid.bx = spec.nx / factor;
  grid.by = spec.ny / factor;
  grid.block_w = factor * mesh.hx;
  grid.block_h = factor * mesh.hy;
  grid.cell_area = grid.block_w * grid.block_h;
  grid.cell_of_block.assign(std::size_t(grid.bx) * grid.by, -1);

  for (int J = 0; J < grid.by; ++J)
    for (int I = 0; I < grid.bx; ++I) {
      int present = 0;
      std::vector<int> members;
      members.reserve(std::size_t(factor) * factor);
      for (int dj = 0; dj < factor; ++dj)
        for (int di = 0; di < factor; ++di) {
          int c = mesh.cell_at(I * factor + di, J * factor + dj);
          if (c >= 0) {
            ++present;
            members.push_back(c);
          }
        }
      if (present == 0) continue;
      if (present != factor * factor)
        throw std::invalid_argument(
            "coarsen_to_source_grid: removed region not aligned to factor x factor blocks at block (" +
            std::to_string(I) + "," + std::to_string(J) + ")");
      SourceCell cell;
      cell.block = {I, J};
      cell.center = {((I + 0.5) / grid.bx) * spec.width, ((J + 0.5) / grid.by) * spec.height};
      cell.mesh_cells = std::move(members);
      grid.cell_of_block[std::size_t(J) * grid.bx + I] = int(grid.cells.size());
      grid.cells.push_back(std::move(cell));
    }
  return grid;
}

/// Axis-aligned segment on the domain boundary.
struct BoundarySegment {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
};

/// Boundary edges whose midpoints lie on one of the segments.
inline std::vector<int> boundary_subset(const Mesh& mesh,
                                        const std::vector<BoundarySegment>& segments) {
  if (segments.empty())
    throw std::invalid_argument("boundary_subset: empty segment list (no observations)");
  const double tol = 1e-10 * std::max(mesh.spec.width, mesh.spec.height);
  for (const auto& s : segments) {
    if (std::abs(s.a.x() - s.b.x()) > tol && std::abs(s.a.y() - s.b.y()) > tol)
      throw std::invalid_argument("boundary_subset: segment is not axis-aligned");
  }
  auto on_segment = [&](const Eigen::Vector2d& p, const BoundarySegment& s) {
    const Eigen::Vector2d lo = s.a.cwiseMin(s.b) - Eigen::Vector2d(tol, tol);
    const Eigen::Vector2d hi = s.a.cwiseMax(s.b) + Eigen::Vector2d(tol, tol);
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  };
  std::vector<int> edges;
  for (int e = 0; e < int(mesh.boundary_edges.size()); ++e) {
    const Eigen::Vector2d m = mesh.edge_midpoint(e);
    for (const auto& s : segments)
      if (on_segment(m, s)) {
        edges.push_back(e);
        break;
      }
  }
  if (edges.empty())
    throw std::invalid_argument("boundary_subset: no boundary edges fall inside the segments");
  return edges;
}

/// Removed-cell mask from a text raster: one row of '0'/'1' per cell row,
/// top row first; '1' marks a retained cell.
inline DomainSpec domain_from_raster(double width, double height,
                                     const std::vector<std::string>& rows) {
  if (rows.empty()) throw std::invalid_argument("domain_from_raster: no rows");
  DomainSpec spec;
  spec.width = width;
  spec.height = height;
  spec.ny = int(rows.size());
  spec.nx = int(rows.front().size());
  for (int r = 0; r < spec.ny; ++r) {
    const std::string& row = rows[std::size_t(r)];
    if (int(row.size()) != spec.nx)
      throw std::invalid_argument("domain_from_raster: ragged raster rows");
    const int j = spec.ny - 1 - r;  // top row first
    for (int i = 0; i < spec.nx; ++i) {
      if (row[std::size_t(i)] == '0')
        spec.removed_cells.insert({i, j});
      else if (row[std::size_t(i)] != '1')
        throw std::invalid_argument("domain_from_raster: raster characters must be '0' or '1'");
    }
  }
  return spec;
}

inline DomainSpec square_domain(int n, double side = 1.0) {
  DomainSpec spec;
  spec.width = side;
  spec.height = side;
  spec.nx = n;
  spec.ny = n;
  return spec;
}

/// Unit square minus the upper-right quadrant [1/2,1] x [1/2,1].
inline DomainSpec lshape_domain(int n) {
  if (n % 2 != 0) throw std::invalid_argument("lshape_domain: n must be even");
  DomainSpec spec = square_domain(n);
  for (int j = n / 2; j < n; ++j)
    for (int i = n / 2; i < n; ++i) spec.removed_cells.insert({i, j});
  return spec;
}

/// Unit square minus the slot [3/8,5/8] x [3/8,1] (opening upward).
inline DomainSpec horseshoe_domain(int n) {
  if (n % 8 != 0) throw std::invalid_argument("horseshoe_domain: n must be divisible by 8");
  DomainSpec spec = square_domain(n);
  for (int j = 3 * n / 8; j < n; ++j)
    for (int i = 3 * n / 8; i < 5 * n / 8; ++i) spec.removed_cells.insert({i, j});
  return spec;
}

/// Rectangle (0,1) x (0,gamma) with nx cells across; ny chosen to keep the
/// cells close to square (at least one row).
inline DomainSpec rectangle_domain(int nx, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("rectangle_domain: gamma must be positive");
  DomainSpec spec;
  spec.width = 1.0;
  spec.height = gamma;
  spec.nx = nx;
  spec.ny = std::max(1, int(std::lround(nx * gamma)));
  return spec;
}

}  // namespace ellsrc
