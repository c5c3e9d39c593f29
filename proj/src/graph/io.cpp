#include "sghormer/graph/io.hpp"

#include <fstream>

#include "json.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::graph {

using nlohmann::json;

namespace {

std::vector<float> read_matrix(const json& rows, std::size_t expect_rows, std::size_t& width,
                               const std::string& field) {
  if (!rows.is_array()) throw ParseError(field + " must be an array of rows");
  if (rows.size() != expect_rows) {
    throw ValidationError(field + " has " + std::to_string(rows.size()) + " rows, expected " +
                          std::to_string(expect_rows));
  }
  std::vector<float> out;
  width = rows.empty() ? 0 : rows[0].size();
  out.reserve(expect_rows * width);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != width) throw ValidationError(field + " rows have unequal widths");
    for (const auto& v : row) {
      if (!v.is_number()) throw ParseError(field + " contains a non-numeric value");
      out.push_back(v.get<float>());
    }
  }
  return out;
}

json matrix_json(const std::vector<float>& data, std::size_t rows, std::size_t width) {
  json out = json::array();
  for (std::size_t i = 0; i < rows; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < width; ++j) row.push_back(data[i * width + j]);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

Graph graph_from_json_line(const std::string& line, std::size_t line_number) {
  const std::string where = "line " + std::to_string(line_number);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(where + ": " + e.what());
  }
  Graph g;
  try {
    if (!j.is_object()) throw ParseError("expected a JSON object");
    if (!j.contains("num_nodes") || !j["num_nodes"].is_number_integer() || j["num_nodes"].get<long long>() < 0) {
      throw ParseError("missing or invalid num_nodes");
    }
    g.num_nodes = j["num_nodes"].get<std::size_t>();
    const json& edges = j.value("edges", json::array());
    if (!edges.is_array()) throw ParseError("edges must be an array");
    for (const auto& e : edges) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
          e[0].get<long long>() < 0 || e[1].get<long long>() < 0) {
        throw ParseError("edges must be pairs of non-negative integers");
      }
      g.edges.push_back({e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>()});
    }
    if (!j.contains("node_feats")) throw ParseError("missing node_feats");
    g.node_feats = read_matrix(j["node_feats"], g.num_nodes, g.node_dim, "node_feats");
    if (j.contains("edge_feats")) {
      g.edge_feats = read_matrix(j["edge_feats"], g.edges.size(), g.edge_dim, "edge_feats");
    }
    if (j.contains("label")) {
      const json& l = j["label"];
      if (l.is_number_integer()) {
        g.label = l.get<std::int64_t>();
      } else if (l.is_number_float()) {
        g.label = l.get<double>();
      } else if (l.is_array()) {
        std::vector<std::int64_t> classes;
        for (const auto& c : l) {
          if (!c.is_number_integer()) throw ParseError("node labels must be integers");
          classes.push_back(c.get<std::int64_t>());
        }
        g.label = std::move(classes);
      } else if (!l.is_null()) {
        throw ParseError("label must be a number or an array of integers");
      }
    }
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  g.validate("graph on " + where);
  return g;
}

std::string graph_to_json_line(const Graph& g) {
  json j;
  j["num_nodes"] = g.num_nodes;
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({e[0], e[1]});
  j["edges"] = std::move(edges);
  j["node_feats"] = matrix_json(g.node_feats, g.num_nodes, g.node_dim);
  if (g.edge_dim > 0) j["edge_feats"] = matrix_json(g.edge_feats, g.edges.size(), g.edge_dim);
  std::visit(
      [&j](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (!std::is_same_v<V, std::monostate>) j["label"] = v;
      },
      g.label);
  return j.dump();
}

Dataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset " + path.string());
  Dataset data;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    data.push_back(graph_from_json_line(line, line_number));
  }
  return data;
}

void save_jsonl(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  for (const auto& g : data) out << graph_to_json_line(g) << '\n';
}

}  // namespace sghormer::graph
