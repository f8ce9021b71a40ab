#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ellsrc/assembly.hpp"
#include "ellsrc/forward.hpp"
#include "ellsrc/geometry.hpp"
#include "ellsrc/inversion.hpp"
#include "ellsrc/io.hpp"
#include "ellsrc/radii.hpp"
#include "ellsrc/spectral.hpp"

namespace ellsrc {

/// Group of source-grid cells sharing one amplitude; the true source adds
/// amplitude * (normalized cell indicator) over each listed block.
struct CellSourceGroup {
  std::vector<std::pair<int, int>> cells;  // (I,J) in the source lattice
  double amplitude = 1.0;
};

/// Smooth bump amplitude * exp(-decay_x (x-cx)^2 - decay_y (y-cy)^2).
struct GaussianSource {
  Eigen::Vector2d center{0.0, 0.0};
  Eigen::Vector2d decay{1.0, 1.0};
  double amplitude = 1.0;
};

/// Union of disks with one known magnitude.
struct BallSource {
  double magnitude = 1.0;
  std::vector<Ball> balls;
};

using TrueSource = std::variant<std::vector<CellSourceGroup>, std::vector<GaussianSource>, BallSource>;

struct GridSpec {
  int forward_n = 64;
  int state_n = 32;
  int source_n = 16;
};

struct NoiseSpec {
  double level = 0.0;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string name;
  DomainSpec domain;  // at source-grid resolution
  double epsilon = 1.0;
  double alpha = 1e-6;
  GridSpec grids;
  TrueSource true_source = std::vector<CellSourceGroup>{};
  std::vector<BoundarySegment> observed_segments;  // empty means the full boundary
  std::vector<Method> methods{Method::I, Method::II, Method::III};
  std::optional<double> rank_tol;
  double weight_floor = 1e-8;
  double peak_theta = 0.25;
  NoiseSpec noise;
  int synth_subsample = 8;  // ball rasterization on the data grid
};

inline void validate(const ExperimentConfig& config) {
  if (!(config.alpha > 0.0)) throw std::invalid_argument("config: alpha must be positive");
  if (config.epsilon < 0.0) throw std::invalid_argument("config: epsilon must be >= 0");
  if (config.grids.source_n != config.domain.nx)
    throw std::invalid_argument("config: domain nx must equal the source grid size");
  if (config.grids.state_n != 2 * config.grids.source_n ||
      config.grids.forward_n != 2 * config.grids.state_n)
    throw std::invalid_argument("config: grids must satisfy forward = 2*state = 4*source");
  if (config.methods.empty()) throw std::invalid_argument("config: no methods selected");
}

/// Everything the inversion stage needs, built once per configuration.
struct Pipeline {
  Mesh state_mesh;
  Mesh fine_mesh;
  SourceGrid grid;
  AssembledOperators state_ops;
  ForwardOperator op;
  SpectralDecomposition decomp;
  Weights weights;
  BoundaryData data;
  Eigen::VectorXd truth_field;                 // overlay on the source grid
  std::vector<Eigen::Vector2d> truth_centroids;
};

namespace detail {

inline void accumulate_cells(const std::vector<CellSourceGroup>& groups, const SourceGrid& grid,
                             const Mesh& fine_mesh, int fine_per_block, Eigen::VectorXd& fine_values,
                             Eigen::VectorXd& truth_field,
                             std::vector<Eigen::Vector2d>& centroids) {
  const double scale = grid.basis_scale();
  for (const auto& group : groups) {
    if (group.cells.empty()) continue;
    Eigen::Vector2d centroid(0.0, 0.0);
    for (const auto& [I, J] : group.cells) {
      const int s = grid.cell_at_block(I, J);
      if (s < 0)
        throw std::invalid_argument("true source block (" + std::to_string(I) + "," +
                                    std::to_string(J) + ") is not a retained source cell");
      truth_field[s] += group.amplitude * scale;
      centroid += grid.cells[std::size_t(s)].center;
      for (int dj = 0; dj < fine_per_block; ++dj)
        for (int di = 0; di < fine_per_block; ++di) {
          const int c = fine_mesh.cell_at(I * fine_per_block + di, J * fine_per_block + dj);
          if (c >= 0) fine_values[c] += group.amplitude * scale;
        }
    }
    centroids.push_back(centroid / double(group.cells.size()));
  }
}

inline void accumulate_gaussians(const std::vector<GaussianSource>& gaussians,
                                 const SourceGrid& grid, const Mesh& fine_mesh,
                                 Eigen::VectorXd& fine_values, Eigen::VectorXd& truth_field,
                                 std::vector<Eigen::Vector2d>& centroids) {
  auto value = [&](const GaussianSource& g, const Eigen::Vector2d& p) {
    const Eigen::Vector2d d = p - g.center;
    return g.amplitude * std::exp(-g.decay.x() * d.x() * d.x() - g.decay.y() * d.y() * d.y());
  };
  for (const auto& g : gaussians) {
    for (int c = 0; c < fine_mesh.n_cells(); ++c) fine_values[c] += value(g, fine_mesh.cell_center(c));
    for (int s = 0; s < grid.n(); ++s) truth_field[s] += value(g, grid.cells[std::size_t(s)].center);
    centroids.push_back(g.center);
  }
}

inline void accumulate_balls(const BallSource& source, const SourceGrid& grid,
                             const Mesh& fine_mesh, int subsample, Eigen::VectorXd& fine_values,
                             Eigen::VectorXd& truth_field, std::vector<Eigen::Vector2d>& centroids) {
  RadiiProblem problem;
  problem.magnitude = source.magnitude;
  for (const Ball& b : source.balls) {
    problem.centers.push_back(b.center);
    problem.radii.push_back(b.radius);
    centroids.push_back(b.center);
  }
  fine_values += rasterize_balls(problem, fine_mesh, subsample);
  truth_field += rasterize_balls(problem, grid, subsample);
}

}  // namespace detail

inline Pipeline build_pipeline(const ExperimentConfig& config) {
  validate(config);
  Pipeline p;
  p.state_mesh = build_structured_mesh(config.domain.refined(2));
  p.fine_mesh = refine(p.state_mesh, 2);
  p.grid = coarsen_to_source_grid(p.state_mesh, 2);

  const std::vector<int> observed = config.observed_segments.empty()
                                        ? p.state_mesh.all_boundary_edges()
                                        : boundary_subset(p.state_mesh, config.observed_segments);
  p.state_ops = assemble(p.state_mesh, p.grid, observed);
  p.op = build_forward_matrix(p.state_mesh, p.state_ops, p.grid, config.epsilon);
  p.decomp = decompose(p.op, config.rank_tol);
  p.weights = weight_operator(p.decomp, config.weight_floor);

  // Inverse-crime-free data: the true source is evaluated on the data grid,
  // never on the inversion grid.
  Eigen::VectorXd fine_values = Eigen::VectorXd::Zero(p.fine_mesh.n_cells());
  p.truth_field = Eigen::VectorXd::Zero(p.grid.n());
  const int fine_per_block = p.fine_mesh.spec.nx / config.domain.nx;
  std::visit(
      [&](const auto& source) {
        using T = std::decay_t<decltype(source)>;
        if constexpr (std::is_same_v<T, std::vector<CellSourceGroup>>)
          detail::accumulate_cells(source, p.grid, p.fine_mesh, fine_per_block, fine_values,
                                   p.truth_field, p.truth_centroids);
        else if constexpr (std::is_same_v<T, std::vector<GaussianSource>>)
          detail::accumulate_gaussians(source, p.grid, p.fine_mesh, fine_values, p.truth_field,
                                       p.truth_centroids);
        else
          detail::accumulate_balls(source, p.grid, p.fine_mesh, config.synth_subsample, fine_values,
                                   p.truth_field, p.truth_centroids);
      },
      config.true_source);

  const AssembledOperators fine_ops = assemble(p.fine_mesh);
  p.data = synthesize_data(p.fine_mesh, fine_ops, fine_values, p.state_mesh, p.op);
  if (config.noise.level > 0.0) p.data = add_noise(p.op, p.data, config.noise.level, config.noise.seed);
  return p;
}

/// Greedy matching: each truth centroid, in order, takes the nearest still
/// unmatched peak; truths left without a peak get +infinity.
inline std::vector<double> localization_metrics(const PeakSet& peaks,
                                                const std::vector<Eigen::Vector2d>& truths) {
  std::vector<char> used(peaks.peaks.size(), 0);
  std::vector<double> distances;
  distances.reserve(truths.size());
  for (const auto& truth : truths) {
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < peaks.peaks.size(); ++k) {
      if (used[k]) continue;
      const double dist = (peaks.peaks[k].position - truth).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = int(k);
      }
    }
    if (best >= 0) used[std::size_t(best)] = 1;
    distances.push_back(best >= 0 ? best_dist : std::numeric_limits<double>::infinity());
  }
  return distances;
}

struct MethodReport {
  Method method = Method::I;
  std::string field_csv;
  std::string heatmap_pgm;
  double residual = 0.0;
  double penalty = 0.0;
  std::vector<Peak> peaks;
  std::vector<double> localization;  // per truth; +inf when unmatched
};

struct RunReport {
  std::string name;
  nlohmann::json config_echo;
  int n_sources = 0;
  int rank = 0;
  double rank_tol_used = 0.0;
  double w_min = 0.0;
  double w_max = 0.0;
  std::string truth_csv, truth_pgm, data_csv, spectrum_csv, report_json;
  std::vector<MethodReport> methods;
  double elapsed_seconds = 0.0;
};

nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

inline nlohmann::json run_report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["name"] = report.name;
  j["config"] = report.config_echo;
  j["weights"] = {{"rank", report.rank},
                  {"rank_tol", report.rank_tol_used},
                  {"w_min", report.w_min},
                  {"w_max", report.w_max},
                  {"n_sources", report.n_sources}};
  j["files"] = {{"truth_csv", report.truth_csv},
                {"truth_pgm", report.truth_pgm},
                {"data_csv", report.data_csv},
                {"spectrum_csv", report.spectrum_csv}};
  j["elapsed_seconds"] = report.elapsed_seconds;
  auto methods = nlohmann::json::array();
  for (const auto& m : report.methods) {
    nlohmann::json jm;
    jm["method"] = method_name(m.method);
    jm["field_csv"] = m.field_csv;
    jm["heatmap_pgm"] = m.heatmap_pgm;
    jm["residual"] = m.residual;
    jm["penalty"] = m.penalty;
    auto peaks = nlohmann::json::array();
    for (const auto& p : m.peaks)
      peaks.push_back({{"cell", p.cell}, {"x", p.position.x()}, {"y", p.position.y()}, {"value", p.value}});
    jm["peaks"] = peaks;
    auto loc = nlohmann::json::array();
    for (double dist : m.localization) {
      if (std::isinf(dist))
        loc.push_back(nullptr);
      else
        loc.push_back(dist);
    }
    jm["localization"] = loc;
    methods.push_back(jm);
  }
  j["methods"] = methods;
  return j;
}

/// Full pipeline for one configuration: mesh -> forward -> weights ->
/// inversion per method, field exports, peak detection, localization
/// metrics, JSON report. Returns the report; all referenced files exist on
/// return.
inline RunReport run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  Pipeline p = build_pipeline(config);

  RunReport report;
  report.name = config.name;
  report.config_echo = experiment_config_to_json(config);
  report.n_sources = p.grid.n();
  report.rank = p.decomp.rank;
  report.rank_tol_used = p.decomp.tol;
  report.w_min = p.weights.w.minCoeff();
  report.w_max = p.weights.w.maxCoeff();

  const std::filesystem::path dir = out_dir / config.name;
  std::filesystem::create_directories(dir);
  report.truth_csv = (dir / "truth.csv").string();
  report.truth_pgm = (dir / "truth.pgm").string();
  report.data_csv = (dir / "data.csv").string();
  report.spectrum_csv = (dir / "spectrum.csv").string();
  write_field_csv(report.truth_csv, p.grid, p.truth_field);
  write_field_pgm(report.truth_pgm, p.grid, p.truth_field);
  write_boundary_csv(report.data_csv, p.op, p.data);
  write_spectrum_csv(report.spectrum_csv, p.decomp);

  for (Method method : config.methods) {
    SourceEstimate est;
    switch (method) {
      case Method::I: est = method_I(p.op, p.weights, p.data, config.alpha); break;
      case Method::II: est = method_II(p.op, p.weights, p.data, config.alpha); break;
      case Method::III: est = method_III(p.op, p.weights, p.data, config.alpha); break;
    }
    MethodReport mr;
    mr.method = method;
    mr.residual = est.residual;
    mr.penalty = est.penalty;
    mr.field_csv = (dir / ("method_" + method_name(method) + ".csv")).string();
    mr.heatmap_pgm = (dir / ("method_" + method_name(method) + ".pgm")).string();
    write_field_csv(mr.field_csv, p.grid, est.field);
    write_field_pgm(mr.heatmap_pgm, p.grid, est.field);
    mr.peaks = detect_peaks(p.grid, est.field, config.peak_theta).peaks;
    PeakSet set;
    set.peaks = mr.peaks;
    set.threshold = config.peak_theta;
    mr.localization = localization_metrics(set, p.truth_centroids);
    report.methods.push_back(std::move(mr));
  }

  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.report_json = (dir / "report.json").string();
  auto out = detail::open_out(report.report_json);
  out << run_report_to_json(report).dump(2) << "\n";
  return report;
}

struct RadiiRunResult {
  std::vector<Eigen::Vector2d> centers;
  std::vector<double> radii;
  double objective = 0.0;
  int sweeps = 0;
  std::vector<double> history;
  PeakSet stage1_peaks;
};

/// Three-stage procedure for constant-magnitude disk sources: weighted
/// Tikhonov recovery, peak extraction, then radii fitting against the data.
inline RadiiRunResult run_radii_pipeline(const ExperimentConfig& config, double line_tol = 1e-3,
                                         int max_sweeps = 20, int opt_subsample = 4) {
  const auto* source = std::get_if<BallSource>(&config.true_source);
  if (!source)
    throw std::invalid_argument("run_radii_pipeline: config must carry a ball source (known magnitude)");
  Pipeline p = build_pipeline(config);

  const SourceEstimate stage1 = method_I(p.op, p.weights, p.data, config.alpha);
  RadiiRunResult result;
  result.stage1_peaks = detect_peaks(p.grid, stage1.field, config.peak_theta);
  if (result.stage1_peaks.peaks.empty())
    throw std::runtime_error("run_radii_pipeline: no peaks detected in the stage-1 recovery");

  RadiiProblem problem;
  problem.magnitude = source->magnitude;
  problem.r_max = 0.5 * std::min(config.domain.width, config.domain.height);
  for (const Peak& peak : result.stage1_peaks.peaks) problem.centers.push_back(peak.position);

  StateSolver solver(p.state_ops, config.epsilon);
  const RadiiResult fit =
      optimize_radii(problem, p.state_mesh, solver, p.op, p.data, line_tol, max_sweeps, opt_subsample);
  result.centers = problem.centers;
  result.radii = fit.radii;
  result.objective = fit.objective;
  result.sweeps = fit.sweeps;
  result.history = fit.history;
  return result;
}

inline nlohmann::json radii_result_to_json(const RadiiRunResult& result) {
  nlohmann::json j;
  auto centers = nlohmann::json::array();
  for (const auto& c : result.centers) centers.push_back({c.x(), c.y()});
  j["centers"] = centers;
  j["radii"] = result.radii;
  j["objective"] = result.objective;
  j["sweeps"] = result.sweeps;
  return j;
}

// ---------------------------------------------------------------------------
// Presets: the paper-scale experiment family. Geometry defaults and source
// placements are documented choices; everything is overridable via config.
// ---------------------------------------------------------------------------

inline std::vector<std::string> preset_names() {
  return {"example1_lshape", "example1_square", "example2_horseshoe", "example2_square",
          "example2_partial", "example3_gamma1", "example3_gamma05", "example3_gamma02",
          "example4_smooth", "example5_radii", "poisson_smoke"};
}

inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig config;
  config.name = name;
  config.grids = {64, 32, 16};

  auto block = [](int i0, int j0, int w, int h) {
    CellSourceGroup g;
    for (int dj = 0; dj < h; ++dj)
      for (int di = 0; di < w; ++di) g.cells.push_back({i0 + di, j0 + dj});
    return g;
  };
  // Two well-separated composite sources shared by the Example 1 pair.
  const std::vector<CellSourceGroup> example1_sources{block(3, 3, 2, 2), block(11, 3, 2, 2)};
  // Two single-cell sources in the prong region shared by the Example 2 family.
  const std::vector<CellSourceGroup> example2_sources{block(2, 11, 1, 1), block(13, 11, 1, 1)};

  if (name == "example1_lshape") {
    config.domain = lshape_domain(16);
    config.true_source = example1_sources;
  } else if (name == "example1_square") {
    config.domain = square_domain(16);
    config.true_source = example1_sources;
  } else if (name == "example2_horseshoe") {
    config.domain = horseshoe_domain(16);
    config.true_source = example2_sources;
  } else if (name == "example2_square") {
    config.domain = square_domain(16);
    config.true_source = example2_sources;
  } else if (name == "example2_partial") {
    config.domain = square_domain(16);
    config.true_source = example2_sources;
    config.observed_segments = {{{0.0, 0.0}, {1.0, 0.0}},   // bottom
                                {{0.0, 0.0}, {0.0, 1.0}}};  // left
  } else if (name == "example3_gamma1" || name == "example3_gamma05" ||
             name == "example3_gamma02") {
    const double gamma = name == "example3_gamma1" ? 1.0 : (name == "example3_gamma05" ? 0.5 : 0.2);
    config.domain = rectangle_domain(16, gamma);
    config.alpha = 1e-4;
    const int rows = config.domain.ny;
    std::vector<CellSourceGroup> sources;
    if (rows >= 4) {
      const int j0 = rows / 2 - 1;
      sources = {block(3, j0, 2, 2), block(7, j0, 2, 2), block(11, j0, 2, 2)};
    } else {
      const int j0 = rows / 2;
      sources = {block(3, j0, 2, 1), block(7, j0, 2, 1), block(11, j0, 2, 1)};
    }
    config.true_source = sources;
  } else if (name == "example4_smooth") {
    config.domain = square_domain(16);
    config.true_source = std::vector<GaussianSource>{{{0.3, 0.25}, {10.0, 5.0}, 1.0}};
  } else if (name == "example5_radii") {
    config.domain = lshape_domain(16);
    BallSource source;
    source.magnitude = 1.0;
    source.balls = {{{0.21875, 0.71875}, 0.15}, {{0.78125, 0.21875}, 0.10}};
    config.true_source = source;
  } else if (name == "poisson_smoke") {
    config.domain = square_domain(8);
    config.grids = {32, 16, 8};
    config.epsilon = 0.0;
    config.true_source = std::vector<CellSourceGroup>{block(2, 2, 1, 1), block(5, 5, 1, 1)};
  } else {
    throw std::invalid_argument("preset: unknown name '" + name + "'");
  }
  return config;
}

// ---------------------------------------------------------------------------
// Config JSON (the CLI file format).
// ---------------------------------------------------------------------------

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["name"] = config.name;
  j["domain"] = domain_spec_to_json(config.domain);
  j["epsilon"] = config.epsilon;
  j["alpha"] = config.alpha;
  j["grids"] = {{"forward", config.grids.forward_n},
                {"state", config.grids.state_n},
                {"source", config.grids.source_n}};
  if (const auto* cells = std::get_if<std::vector<CellSourceGroup>>(&config.true_source)) {
    auto groups = nlohmann::json::array();
    for (const auto& g : *cells) {
      auto ids = nlohmann::json::array();
      for (const auto& [i, k] : g.cells) ids.push_back({i, k});
      groups.push_back({{"cells", ids}, {"amplitude", g.amplitude}});
    }
    j["true_source"] = {{"type", "cells"}, {"groups", groups}};
  } else if (const auto* gaussians = std::get_if<std::vector<GaussianSource>>(&config.true_source)) {
    auto items = nlohmann::json::array();
    for (const auto& g : *gaussians)
      items.push_back({{"center", {g.center.x(), g.center.y()}},
                       {"decay", {g.decay.x(), g.decay.y()}},
                       {"amplitude", g.amplitude}});
    j["true_source"] = {{"type", "gaussians"}, {"gaussians", items}};
  } else {
    const auto& balls = std::get<BallSource>(config.true_source);
    auto items = nlohmann::json::array();
    for (const auto& b : balls.balls)
      items.push_back({{"center", {b.center.x(), b.center.y()}}, {"radius", b.radius}});
    j["true_source"] = {{"type", "balls"}, {"magnitude", balls.magnitude}, {"balls", items}};
  }
  if (config.observed_segments.empty()) {
    j["observed_boundary"] = "full";
  } else {
    auto segments = nlohmann::json::array();
    for (const auto& s : config.observed_segments)
      segments.push_back({s.a.x(), s.a.y(), s.b.x(), s.b.y()});
    j["observed_boundary"] = {{"segments", segments}};
  }
  auto methods = nlohmann::json::array();
  for (Method m : config.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  if (config.rank_tol) j["rank_tol"] = *config.rank_tol;
  j["weight_floor"] = config.weight_floor;
  j["peak_theta"] = config.peak_theta;
  j["noise"] = {{"level", config.noise.level}, {"seed", config.noise.seed}};
  j["synth_subsample"] = config.synth_subsample;
  return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig config = j.contains("preset") ? preset(j.at("preset").get<std::string>())
                                                 : ExperimentConfig{};
  if (j.contains("name")) config.name = j.at("name").get<std::string>();
  if (j.contains("domain")) config.domain = domain_spec_from_json(j.at("domain"));
  if (j.contains("epsilon")) config.epsilon = j.at("epsilon").get<double>();
  if (j.contains("alpha")) config.alpha = j.at("alpha").get<double>();
  if (j.contains("grids")) {
    const auto& g = j.at("grids");
    config.grids.forward_n = g.at("forward").get<int>();
    config.grids.state_n = g.at("state").get<int>();
    config.grids.source_n = g.at("source").get<int>();
  }
  if (j.contains("true_source")) {
    const auto& src = j.at("true_source");
    const std::string type = src.at("type").get<std::string>();
    if (type == "cells") {
      std::vector<CellSourceGroup> groups;
      for (const auto& g : src.at("groups")) {
        CellSourceGroup group;
        group.amplitude = g.value("amplitude", 1.0);
        for (const auto& cell : g.at("cells"))
          group.cells.push_back({cell.at(0).get<int>(), cell.at(1).get<int>()});
        groups.push_back(std::move(group));
      }
      config.true_source = std::move(groups);
    } else if (type == "gaussians") {
      std::vector<GaussianSource> gaussians;
      for (const auto& g : src.at("gaussians")) {
        GaussianSource gauss;
        gauss.center = {g.at("center").at(0).get<double>(), g.at("center").at(1).get<double>()};
        gauss.decay = {g.at("decay").at(0).get<double>(), g.at("decay").at(1).get<double>()};
        gauss.amplitude = g.value("amplitude", 1.0);
        gaussians.push_back(gauss);
      }
      config.true_source = std::move(gaussians);
    } else if (type == "balls") {
      BallSource balls;
      balls.magnitude = src.value("magnitude", 1.0);
      for (const auto& b : src.at("balls"))
        balls.balls.push_back({{b.at("center").at(0).get<double>(), b.at("center").at(1).get<double>()},
                               b.at("radius").get<double>()});
      config.true_source = std::move(balls);
    } else {
      throw std::invalid_argument("config: unknown true_source type '" + type + "'");
    }
  }
  if (j.contains("observed_boundary")) {
    const auto& obs = j.at("observed_boundary");
    config.observed_segments.clear();
    if (!obs.is_string()) {
      for (const auto& s : obs.at("segments"))
        config.observed_segments.push_back({{s.at(0).get<double>(), s.at(1).get<double>()},
                                            {s.at(2).get<double>(), s.at(3).get<double>()}});
    } else if (obs.get<std::string>() != "full") {
      throw std::invalid_argument("config: observed_boundary must be \"full\" or a segment list");
    }
  }
  if (j.contains("methods")) {
    config.methods.clear();
    for (const auto& m : j.at("methods")) {
      const std::string s = m.get<std::string>();
      if (s == "I")
        config.methods.push_back(Method::I);
      else if (s == "II")
        config.methods.push_back(Method::II);
      else if (s == "III")
        config.methods.push_back(Method::III);
      else
        throw std::invalid_argument("config: unknown method '" + s + "'");
    }
  }
  if (j.contains("rank_tol") && !j.at("rank_tol").is_null())
    config.rank_tol = j.at("rank_tol").get<double>();
  if (j.contains("weight_floor")) config.weight_floor = j.at("weight_floor").get<double>();
  if (j.contains("peak_theta")) config.peak_theta = j.at("peak_theta").get<double>();
  if (j.contains("noise")) {
    config.noise.level = j.at("noise").value("level", 0.0);
    config.noise.seed = j.at("noise").value("seed", std::uint64_t(0));
  }
  if (j.contains("synth_subsample")) config.synth_subsample = j.at("synth_subsample").get<int>();
  return config;
}

}  // namespace ellsrc
