#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ellsrc/assembly.hpp"
#include "ellsrc/forward.hpp"
#include "ellsrc/geometry.hpp"

namespace ellsrc {

struct Peak {
  int cell = 0;
  Eigen::Vector2d position{0.0, 0.0};
  double value = 0.0;
};

/// Local maxima of a cell field: cells dominating all retained 8-neighbors
/// and reaching at least threshold * global max, sorted by descending value.
struct PeakSet {
  std::vector<Peak> peaks;
  double threshold = 0.0;  // relative cutoff used
};

inline PeakSet detect_peaks(const SourceGrid& grid, const Eigen::VectorXd& field, double theta) {
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument("detect_peaks: theta must lie in (0,1]");
  if (field.size() != grid.n())
    throw std::invalid_argument("detect_peaks: field length does not match source grid");
  PeakSet set;
  set.threshold = theta;
  if (grid.n() == 0) return set;
  const double cutoff = theta * field.maxCoeff();
  for (int c = 0; c < grid.n(); ++c) {
    if (field[c] < cutoff) continue;
    const auto& [I, J] = grid.cells[std::size_t(c)].block;
    bool dominant = true;
    for (int dj = -1; dj <= 1 && dominant; ++dj)
      for (int di = -1; di <= 1 && dominant; ++di) {
        if (di == 0 && dj == 0) continue;
        const int nb = grid.cell_at_block(I + di, J + dj);
        if (nb >= 0 && field[nb] > field[c]) dominant = false;
      }
    if (dominant) set.peaks.push_back({c, grid.cells[std::size_t(c)].center, field[c]});
  }
  std::stable_sort(set.peaks.begin(), set.peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.value > b.value; });
  return set;
}

struct Ball {
  Eigen::Vector2d center{0.0, 0.0};
  double radius = 0.0;
};

/// Radii-fitting problem: known magnitude, fixed ball centers, radii
/// constrained to [0, r_max].
struct RadiiProblem {
  std::vector<Eigen::Vector2d> centers;
  double magnitude = 1.0;
  double r_max = 0.5;
  std::vector<double> radii;  // current iterate; empty means all zero
};

namespace detail {

// Fraction of a subsample x subsample midpoint grid inside the union of the
// balls, per axis-aligned box. Continuous-in-radius stand-in for the union
// indicator.
inline Eigen::VectorXd rasterize_union(const std::vector<Ball>& balls, double magnitude,
                                       const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>& boxes,
                                       int subsample) {
  if (subsample < 1) throw std::invalid_argument("rasterize_balls: subsample must be >= 1");
  Eigen::VectorXd values = Eigen::VectorXd::Zero(int(boxes.size()));
  for (std::size_t c = 0; c < boxes.size(); ++c) {
    const auto& [lo, hi] = boxes[c];
    const double dx = (hi.x() - lo.x()) / subsample;
    const double dy = (hi.y() - lo.y()) / subsample;
    int inside = 0;
    for (int sy = 0; sy < subsample; ++sy)
      for (int sx = 0; sx < subsample; ++sx) {
        const Eigen::Vector2d p(lo.x() + (sx + 0.5) * dx, lo.y() + (sy + 0.5) * dy);
        for (const Ball& ball : balls)
          if ((p - ball.center).norm() < ball.radius) {
            ++inside;
            break;
          }
      }
    values[int(c)] = magnitude * double(inside) / double(subsample * subsample);
  }
  return values;
}

inline std::vector<Ball> make_balls(const RadiiProblem& problem) {
  std::vector<Ball> balls(problem.centers.size());
  for (std::size_t k = 0; k < balls.size(); ++k) {
    balls[k].center = problem.centers[k];
    balls[k].radius = problem.radii.empty() ? 0.0 : problem.radii[k];
  }
  return balls;
}

}  // namespace detail

/// Per-mesh-cell values of the union-of-balls source.
inline Eigen::VectorXd rasterize_balls(const RadiiProblem& problem, const Mesh& mesh,
                                       int subsample) {
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> boxes;
  boxes.reserve(std::size_t(mesh.n_cells()));
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& [i, j] = mesh.cell_coords[std::size_t(c)];
    boxes.push_back({{i * mesh.hx, j * mesh.hy}, {(i + 1) * mesh.hx, (j + 1) * mesh.hy}});
  }
  return detail::rasterize_union(detail::make_balls(problem), problem.magnitude, boxes, subsample);
}

/// Per-source-cell values of the union-of-balls source.
inline Eigen::VectorXd rasterize_balls(const RadiiProblem& problem, const SourceGrid& grid,
                                       int subsample) {
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> boxes;
  boxes.reserve(std::size_t(grid.n()));
  for (int c = 0; c < grid.n(); ++c) boxes.push_back(grid.cell_box(c));
  return detail::rasterize_union(detail::make_balls(problem), problem.magnitude, boxes, subsample);
}

struct RadiiResult {
  std::vector<double> radii;
  double objective = 0.0;
  std::vector<double> history;  // objective after the initial state and each line search
  int sweeps = 0;
};

/// Coordinate descent over the radii with a golden-section line search per
/// coordinate on [0, r_max]. The objective is the boundary misfit
/// 0.5 |u(r) - d|_Y^2 with u(r) solved on the state mesh from the rasterized
/// union source. Stops when the largest radius change in a sweep drops below
/// tol or after max_sweeps.
inline RadiiResult optimize_radii(const RadiiProblem& problem, const Mesh& state_mesh,
                                  const StateSolver& solver, const ForwardOperator& op,
                                  const BoundaryData& d, double tol, int max_sweeps,
                                  int subsample = 4) {
  if (problem.centers.empty()) throw std::invalid_argument("optimize_radii: no centers");
  if (!(tol > 0.0)) throw std::invalid_argument("optimize_radii: tol must be positive");
  if (max_sweeps < 1) throw std::invalid_argument("optimize_radii: max_sweeps must be >= 1");

  RadiiProblem current = problem;
  if (current.radii.empty()) current.radii.assign(current.centers.size(), 0.0);
  if (current.radii.size() != current.centers.size())
    throw std::invalid_argument("optimize_radii: radii/centers size mismatch");
  for (double r : current.radii)
    if (r < 0.0 || r > current.r_max)
      throw std::invalid_argument("optimize_radii: initial radii outside [0, r_max]");

  auto objective = [&](const std::vector<double>& radii) {
    RadiiProblem p = current;
    p.radii = radii;
    const Eigen::VectorXd load = cell_load_vector(state_mesh, rasterize_balls(p, state_mesh, subsample));
    const NodalField u = solver.solve_nodal(load);
    Eigen::VectorXd trace(int(op.boundary_nodes.size()));
    for (std::size_t r = 0; r < op.boundary_nodes.size(); ++r)
      trace[int(r)] = u[op.boundary_nodes[r]];
    const Eigen::VectorXd misfit = trace - d.values;
    return 0.5 * op.ydot(misfit, misfit);
  };

  RadiiResult result;
  result.radii = current.radii;
  double best = objective(result.radii);
  result.history.push_back(best);

  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    ++result.sweeps;
    double max_change = 0.0;
    for (std::size_t k = 0; k < result.radii.size(); ++k) {
      auto eval = [&](double r) {
        std::vector<double> radii = result.radii;
        radii[k] = r;
        return objective(radii);
      };
      double lo = 0.0, hi = current.r_max;
      double r1 = hi - golden * (hi - lo), r2 = lo + golden * (hi - lo);
      double f1 = eval(r1), f2 = eval(r2);
      while (hi - lo > tol) {
        if (f1 <= f2) {
          hi = r2;
          r2 = r1;
          f2 = f1;
          r1 = hi - golden * (hi - lo);
          f1 = eval(r1);
        } else {
          lo = r1;
          r1 = r2;
          f1 = f2;
          r2 = lo + golden * (hi - lo);
          f2 = eval(r2);
        }
      }
      const double candidate = f1 <= f2 ? r1 : r2;
      const double f_candidate = std::min(f1, f2);
      if (f_candidate < best) {  // accept only improvements
        max_change = std::max(max_change, std::abs(candidate - result.radii[k]));
        result.radii[k] = candidate;
        best = f_candidate;
      }
      result.history.push_back(best);
    }
    if (max_change < tol) break;
  }
  result.objective = best;
  return result;
}

}  // namespace ellsrc
