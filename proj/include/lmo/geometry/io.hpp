#pragma once

#include "lmo/core/error.hpp"
#include "lmo/geometry/grid.hpp"
#include "lmo/geometry/scalar_field.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace lmo {

/// Fixed 17-significant-digit formatting used by every CSV artifact.
inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json domain_to_json(const ConvexDomain& d) {
  if (d.kind() == ConvexDomain::Kind::kBall) {
    if (d.dimension() == 1) {
      return {{"kind", "interval"}, {"a", d.center().x() - d.radius()}, {"b", d.center().x() + d.radius()}};
    }
    return {{"kind", "ball"}, {"center", {d.center().x(), d.center().y()}}, {"radius", d.radius()}};
  }
  nlohmann::json v = nlohmann::json::array();
  for (const Point& p : d.vertices()) v.push_back({p.x(), p.y()});
  return {{"kind", "polygon"}, {"vertices", v}};
}

inline ConvexDomain domain_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "interval") return ConvexDomain::interval(j.at("a").get<double>(), j.at("b").get<double>());
  if (kind == "ball") {
    const auto c = j.at("center");
    return ConvexDomain::ball(Point(c.at(0).get<double>(), c.at(1).get<double>()), j.at("radius").get<double>());
  }
  if (kind == "polygon") {
    std::vector<Point> v;
    for (const auto& p : j.at("vertices")) v.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return ConvexDomain::polygon(std::move(v));
  }
  throw InvalidInput("unknown domain kind '" + kind + "'");
}

/// Companion metadata {origin, spacing, shape, dim[, domain]}.
inline nlohmann::json grid_metadata(const Grid& g) {
  nlohmann::json j = {{"origin", {g.origin().x(), g.origin().y()}},
                      {"spacing", g.spacing()},
                      {"shape", {g.nx(), g.ny()}},
                      {"dim", g.dim()}};
  if (g.domain()) j["domain"] = domain_to_json(*g.domain());
  return j;
}

/// CSV `x,y,value,tag`, one row per node in row-major order.
inline std::string scalar_field_csv(const ScalarField& f) {
  std::ostringstream out;
  out << "x,y,value,tag\n";
  const Grid& g = f.grid();
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Point p = g.point(idx);
    out << fmt17(p.x()) << ',' << fmt17(p.y()) << ',' << fmt17(f[idx]) << ',' << to_string(g.tag(idx)) << '\n';
  }
  return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot open '" + path + "' for writing");
  os << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Writes `<stem>.csv` and `<stem>.json`.
inline void write_scalar_field(const std::string& stem, const ScalarField& f) {
  write_text(stem + ".csv", scalar_field_csv(f));
  write_text(stem + ".json", grid_metadata(f.grid()).dump(2) + "\n");
}

/// Reads a field written by write_scalar_field. Tags come from the CSV.
inline ScalarField read_scalar_field(const std::string& csv_path, const std::string& meta_path) {
  const auto meta = nlohmann::json::parse(read_text(meta_path));
  const Point origin(meta.at("origin").at(0).get<double>(), meta.at("origin").at(1).get<double>());
  const double spacing = meta.at("spacing").get<double>();
  const int nx = meta.at("shape").at(0).get<int>();
  const int ny = meta.at("shape").at(1).get<int>();
  const int dim = meta.at("dim").get<int>();
  std::shared_ptr<const ConvexDomain> domain;
  if (meta.contains("domain")) domain = std::make_shared<const ConvexDomain>(domain_from_json(meta["domain"]));

  std::istringstream in(read_text(csv_path));
  std::string line;
  std::getline(in, line);
  if (line.rfind("x,y,value,tag", 0) != 0) throw InvalidInput("unexpected CSV header in '" + csv_path + "'");
  std::vector<double> values;
  std::vector<NodeTag> tags;
  values.reserve(static_cast<std::size_t>(nx) * ny);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string x, y, v, t;
    std::getline(row, x, ',');
    std::getline(row, y, ',');
    std::getline(row, v, ',');
    std::getline(row, t, ',');
    values.push_back(std::strtod(v.c_str(), nullptr));
    tags.push_back(t == "interior" ? NodeTag::kInterior : t == "boundary" ? NodeTag::kBoundary : NodeTag::kExterior);
  }
  if (values.size() != static_cast<std::size_t>(nx) * ny) throw InvalidInput("CSV row count does not match metadata");
  auto grid = std::make_shared<const Grid>(origin, spacing, nx, ny, dim, std::move(tags), std::move(domain));
  return ScalarField(std::move(grid), std::move(values));
}

}  // namespace lmo
