#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ellsrc/harness.hpp"

using namespace ellsrc;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small desk-scale configuration: source 4x4, state 8x8, data grid 16x16.
ExperimentConfig small_config(const std::string& name) {
  ExperimentConfig config;
  config.name = name;
  config.domain = square_domain(4);
  config.grids = {16, 8, 4};
  CellSourceGroup g;
  g.cells = {{1, 1}};
  g.amplitude = 1.0;
  config.true_source = std::vector<CellSourceGroup>{g};
  return config;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag)
      : path(std::filesystem::temp_directory_path() / ("ellsrc_" + tag)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("presets carry the documented parameters", "[harness]") {
  const ExperimentConfig lshape = preset("example1_lshape");
  CHECK(lshape.alpha == 1e-6);
  CHECK(lshape.epsilon == 1.0);
  CHECK(lshape.grids.forward_n == 64);
  CHECK(lshape.grids.state_n == 32);
  CHECK(lshape.grids.source_n == 16);
  CHECK(lshape.domain.removed_cells.size() == 64);

  const ExperimentConfig gamma02 = preset("example3_gamma02");
  CHECK(gamma02.alpha == 1e-4);
  CHECK(gamma02.domain.width == 1.0);
  CHECK(gamma02.domain.height == Catch::Approx(0.2));

  const ExperimentConfig poisson = preset("poisson_smoke");
  CHECK(poisson.epsilon == 0.0);
  CHECK(poisson.domain.removed_cells.empty());

  CHECK_THROWS_AS(preset("example_nope"), std::invalid_argument);
  for (const auto& name : preset_names()) CHECK_NOTHROW(preset(name));
}

TEST_CASE("config validation enforces the grid hierarchy", "[harness]") {
  ExperimentConfig config = small_config("bad");
  config.grids.forward_n = 24;
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
  config = small_config("bad2");
  config.alpha = 0.0;
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
  config = small_config("bad3");
  config.domain = square_domain(8);  // mismatch with grids.source_n = 4
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
  config = small_config("bad4");
  config.methods.clear();
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
}

TEST_CASE("config JSON round trip and preset overrides", "[harness]") {
  const ExperimentConfig config = preset("example2_partial");
  const nlohmann::json j = experiment_config_to_json(config);
  const ExperimentConfig back = experiment_config_from_json(j);
  CHECK(experiment_config_to_json(back) == j);

  nlohmann::json override_json;
  override_json["preset"] = "example1_lshape";
  override_json["alpha"] = 1e-4;
  override_json["methods"] = {"II"};
  const ExperimentConfig overridden = experiment_config_from_json(override_json);
  CHECK(overridden.alpha == 1e-4);
  CHECK(overridden.methods == std::vector<Method>{Method::II});
  CHECK(overridden.domain.removed_cells.size() == 64);

  nlohmann::json balls = experiment_config_to_json(preset("example5_radii"));
  const ExperimentConfig b = experiment_config_from_json(balls);
  CHECK(std::holds_alternative<BallSource>(b.true_source));
  nlohmann::json gauss = experiment_config_to_json(preset("example4_smooth"));
  const ExperimentConfig g = experiment_config_from_json(gauss);
  CHECK(std::holds_alternative<std::vector<GaussianSource>>(g.true_source));
}

TEST_CASE("field export: constant fields give flat heatmaps and exact CSV round trips",
          "[harness]") {
  const Mesh mesh = build_structured_mesh(lshape_domain(4).refined(2));
  const SourceGrid grid = coarsen_to_source_grid(mesh, 2);
  TempDir dir("export");

  SECTION("constant field") {
    const Eigen::VectorXd field = Eigen::VectorXd::Constant(grid.n(), 2.3);
    write_field_pgm(dir.path / "flat.pgm", grid, field);
    std::ifstream in(dir.path / "flat.pgm");
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    CHECK(magic == "P2");
    CHECK(w == grid.bx);
    CHECK(h == grid.by);
    int first_retained = -1;
    for (int row = 0; row < h; ++row)
      for (int col = 0; col < w; ++col) {
        int pixel = -1;
        in >> pixel;
        const int J = h - 1 - row, I = col;
        if (grid.cell_at_block(I, J) >= 0) {
          if (first_retained < 0) first_retained = pixel;
          CHECK(pixel == first_retained);
        } else {
          CHECK(pixel == 0);
        }
      }
  }

  SECTION("CSV row count and bit-exact round trip") {
    Eigen::VectorXd field(grid.n());
    for (int c = 0; c < grid.n(); ++c) field[c] = 1.0 / 3.0 + 1e-17 * c + std::sqrt(2.0) * c;
    write_field_csv(dir.path / "field.csv", grid, field);
    std::ifstream in(dir.path / "field.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++lines;
    CHECK(lines == grid.n() + 1);  // header + one row per cell
    const Eigen::VectorXd back = read_field_csv(dir.path / "field.csv");
    REQUIRE(back.size() == field.size());
    CHECK((back - field).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("greedy localization matching", "[harness]") {
  PeakSet peaks;
  peaks.peaks = {{0, {0.25, 0.25}, 2.0}, {1, {0.75, 0.75}, 1.0}};

  SECTION("peaks exactly at the truths") {
    const auto d = localization_metrics(peaks, {{0.25, 0.25}, {0.75, 0.75}});
    CHECK(d == std::vector<double>{0.0, 0.0});
  }
  SECTION("no peaks at all") {
    const auto d = localization_metrics(PeakSet{}, {{0.25, 0.25}});
    REQUIRE(d.size() == 1);
    CHECK(std::isinf(d[0]));
  }
  SECTION("one peak equidistant from two truths feeds the first truth") {
    PeakSet one;
    one.peaks = {{0, {1.0, 0.0}, 1.0}};
    const auto d = localization_metrics(one, {{0.0, 0.0}, {2.0, 0.0}});
    REQUIRE(d.size() == 2);
    CHECK(d[0] == Catch::Approx(1.0));
    CHECK(std::isinf(d[1]));
  }
}

TEST_CASE("a zero true source yields numerically zero estimates", "[harness]") {
  ExperimentConfig config = small_config("zero_source");
  config.true_source = std::vector<CellSourceGroup>{};
  TempDir dir("zero");
  const RunReport report = run_experiment(config, dir.path);
  for (const auto& m : report.methods) {
    const Eigen::VectorXd field = read_field_csv(m.field_csv);
    CHECK(field.cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("runs are deterministic byte for byte", "[harness]") {
  ExperimentConfig config = small_config("determinism");
  config.noise.level = 0.05;
  config.noise.seed = 1234;
  TempDir a("det_a"), b("det_b");
  const RunReport ra = run_experiment(config, a.path);
  const RunReport rb = run_experiment(config, b.path);
  for (std::size_t k = 0; k < ra.methods.size(); ++k) {
    CHECK(slurp(ra.methods[k].field_csv) == slurp(rb.methods[k].field_csv));
    CHECK(slurp(ra.methods[k].heatmap_pgm) == slurp(rb.methods[k].heatmap_pgm));
  }
  CHECK(slurp(ra.data_csv) == slurp(rb.data_csv));
}

TEST_CASE("the report references existing files and a recomputable residual", "[harness]") {
  ExperimentConfig config = small_config("report");
  TempDir dir("report");
  const RunReport report = run_experiment(config, dir.path);

  for (const std::string& path : {report.truth_csv, report.truth_pgm, report.data_csv,
                                  report.spectrum_csv, report.report_json})
    CHECK(std::filesystem::exists(path));
  for (const auto& m : report.methods) {
    CHECK(std::filesystem::exists(m.field_csv));
    CHECK(std::filesystem::exists(m.heatmap_pgm));
  }

  // independent residual recomputation from the exported field
  Pipeline p = build_pipeline(config);
  for (const auto& m : report.methods) {
    const Eigen::VectorXd field = read_field_csv(m.field_csv);
    const Eigen::VectorXd coeffs = field * std::sqrt(p.grid.cell_area);
    const double residual = p.op.ynorm(p.op.K * coeffs - p.data.values);
    CHECK(std::abs(residual - m.residual) <= 1e-12 * (1.0 + residual));
  }

  // the report JSON parses and echoes the config
  nlohmann::json j;
  std::ifstream in(report.report_json);
  in >> j;
  CHECK(j.at("name") == "report");
  CHECK(j.at("weights").at("rank").get<int>() == report.rank);
}

TEST_CASE("the radii pipeline needs a ball source", "[harness]") {
  ExperimentConfig config = small_config("no_balls");
  CHECK_THROWS_AS(run_radii_pipeline(config), std::invalid_argument);
}

TEST_CASE("partial observation shrinks the data vector", "[harness]") {
  ExperimentConfig config = small_config("partial");
  config.observed_segments = {{{0.0, 0.0}, {1.0, 0.0}}};
  Pipeline p = build_pipeline(config);
  CHECK(p.op.n_boundary() == 9);  // state mesh 8x8: bottom side nodes only
  for (const auto& pos : p.op.boundary_positions) CHECK(pos.y() == 0.0);
}
