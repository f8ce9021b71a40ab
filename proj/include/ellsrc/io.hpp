#pragma once

#include <Eigen/Sparse>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ellsrc/forward.hpp"
#include "ellsrc/geometry.hpp"
#include "ellsrc/spectral.hpp"

namespace ellsrc {

/// Shortest decimal form that round-trips a double exactly.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return in;
}

}  // namespace detail

/// Field CSV: header plus one row per retained source cell in row-major
/// order (bottom row first), columns cell,x,y,value.
inline void write_field_csv(const std::filesystem::path& path, const SourceGrid& grid,
                            const Eigen::VectorXd& field) {
  if (field.size() != grid.n())
    throw std::invalid_argument("write_field_csv: field length does not match source grid");
  auto out = detail::open_out(path);
  out << "cell,x,y,value\n";
  for (int c = 0; c < grid.n(); ++c) {
    const auto& z = grid.cells[std::size_t(c)].center;
    out << c << "," << format_g17(z.x()) << "," << format_g17(z.y()) << ","
        << format_g17(field[c]) << "\n";
  }
}

inline Eigen::VectorXd read_field_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto last_comma = line.find_last_of(',');
    if (last_comma == std::string::npos)
      throw std::runtime_error("read_field_csv: malformed row '" + line + "'");
    values.push_back(std::stod(line.substr(last_comma + 1)));
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), long(values.size()));
}

/// 8-bit ASCII PGM heatmap: linear min -> 0, max -> 255 per image; removed
/// cells are 0; top raster row is the top of the domain.
inline void write_field_pgm(const std::filesystem::path& path, const SourceGrid& grid,
                            const Eigen::VectorXd& field) {
  if (field.size() != grid.n())
    throw std::invalid_argument("write_field_pgm: field length does not match source grid");
  auto out = detail::open_out(path);
  const double lo = field.size() ? field.minCoeff() : 0.0;
  const double hi = field.size() ? field.maxCoeff() : 0.0;
  const double span = hi - lo;
  out << "P2\n" << grid.bx << " " << grid.by << "\n255\n";
  for (int J = grid.by - 1; J >= 0; --J) {
    for (int I = 0; I < grid.bx; ++I) {
      int pixel = 0;
      const int c = grid.cell_at_block(I, J);
      if (c >= 0) pixel = span > 0.0 ? int(std::lround((field[c] - lo) / span * 255.0)) : 255;
      out << pixel << (I + 1 < grid.bx ? ' ' : '\n');
    }
  }
}

/// Boundary data CSV: one row per observed boundary node, columns x,y,value.
inline void write_boundary_csv(const std::filesystem::path& path, const ForwardOperator& op,
                               const BoundaryData& d) {
  if (d.values.size() != op.n_boundary())
    throw std::invalid_argument("write_boundary_csv: data length mismatch");
  auto out = detail::open_out(path);
  out << "x,y,value\n";
  for (int r = 0; r < op.n_boundary(); ++r) {
    const auto& p = op.boundary_positions[std::size_t(r)];
    out << format_g17(p.x()) << "," << format_g17(p.y()) << "," << format_g17(d.values[r]) << "\n";
  }
}

inline BoundaryData read_boundary_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto last_comma = line.find_last_of(',');
    if (last_comma == std::string::npos)
      throw std::runtime_error("read_boundary_csv: malformed row '" + line + "'");
    values.push_back(std::stod(line.substr(last_comma + 1)));
  }
  BoundaryData d;
  d.provenance = "csv:" + path.string();
  d.values = Eigen::Map<Eigen::VectorXd>(values.data(), long(values.size()));
  return d;
}

/// Singular-value spectrum CSV: index, sigma, sigma / sigma_1.
inline void write_spectrum_csv(const std::filesystem::path& path, const SpectralDecomposition& d) {
  auto out = detail::open_out(path);
  out << "index,sigma,sigma_rel\n";
  const double sigma1 = d.sigma.size() > 0 ? d.sigma[0] : 0.0;
  for (int i = 0; i < d.sigma.size(); ++i)
    out << i << "," << format_g17(d.sigma[i]) << ","
        << format_g17(sigma1 > 0.0 ? d.sigma[i] / sigma1 : 0.0) << "\n";
}

inline void write_decay_csv(const std::filesystem::path& path, const std::vector<DecayRow>& rows) {
  auto out = detail::open_out(path);
  out << "cell,distance,value\n";
  for (const auto& r : rows)
    out << r.cell << "," << format_g17(r.distance) << "," << format_g17(r.value) << "\n";
}

/// Coordinate-format text dump of a sparse matrix (row col value), for
/// debugging.
inline void write_coordinate_text(const std::filesystem::path& path,
                                  const Eigen::SparseMatrix<double>& m) {
  auto out = detail::open_out(path);
  out << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      out << it.row() << " " << it.col() << " " << format_g17(it.value()) << "\n";
}

inline nlohmann::json domain_spec_to_json(const DomainSpec& spec) {
  nlohmann::json j;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["nx"] = spec.nx;
  j["ny"] = spec.ny;
  auto cells = nlohmann::json::array();
  for (const auto& [i, k] : spec.removed_cells) cells.push_back({i, k});
  j["removed_cells"] = cells;
  return j;
}

inline DomainSpec domain_spec_from_json(const nlohmann::json& j) {
  if (j.contains("raster")) {
    return domain_from_raster(j.value("width", 1.0), j.value("height", 1.0),
                              j.at("raster").get<std::vector<std::string>>());
  }
  DomainSpec spec;
  spec.width = j.value("width", 1.0);
  spec.height = j.value("height", 1.0);
  spec.nx = j.at("nx").get<int>();
  spec.ny = j.at("ny").get<int>();
  if (j.contains("removed_cells"))
    for (const auto& cell : j.at("removed_cells"))
      spec.removed_cells.insert({cell.at(0).get<int>(), cell.at(1).get<int>()});
  return spec;
}

}  // namespace ellsrc
