#include "sghormer/graph/synthetic.hpp"

#include <random>
#include <set>
#include <sstream>

#include "sghormer/errors.hpp"

namespace sghormer::graph {

namespace {

constexpr std::size_t kFeatureDim = 4;
constexpr double kEdgeProbability = 0.3;
constexpr double kIntraCommunity = 0.5;
constexpr double kInterCommunity = 0.1;

std::vector<std::vector<bool>> undirected_adjacency(const Graph& g) {
  std::vector<std::vector<bool>> adj(g.num_nodes, std::vector<bool>(g.num_nodes, false));
  for (const auto& e : g.edges) {
    if (e[0] == e[1]) continue;
    adj[e[0]][e[1]] = true;
    adj[e[1]][e[0]] = true;
  }
  return adj;
}

}  // namespace

SyntheticKind synthetic_kind_from_string(const std::string& name) {
  if (name == "degree_regression") return SyntheticKind::degree_regression;
  if (name == "triangle_count") return SyntheticKind::triangle_count;
  if (name == "two_community") return SyntheticKind::two_community;
  throw ConfigError("unknown synthetic dataset kind '" + name +
                    "' (expected degree_regression, triangle_count or two_community)");
}

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::degree_regression: return "degree_regression";
    case SyntheticKind::triangle_count: return "triangle_count";
    case SyntheticKind::two_community: return "two_community";
  }
  return "?";
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw ConfigError("synthetic spec must look like kind:n:seed, got '" + text + "'");
  SyntheticSpec spec;
  spec.kind = synthetic_kind_from_string(parts[0]);
  try {
    std::size_t used = 0;
    const long long n = std::stoll(parts[1], &used);
    if (used != parts[1].size() || n <= 0) throw std::invalid_argument("n");
    spec.num_graphs = static_cast<std::size_t>(n);
    const unsigned long long seed = std::stoull(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("seed");
    spec.seed = seed;
  } catch (const std::exception&) {
    throw ConfigError("synthetic spec '" + text + "' needs a positive graph count and an integer seed");
  }
  return spec;
}

double mean_degree(const Graph& g) {
  if (g.num_nodes == 0) return 0.0;
  const auto adj = undirected_adjacency(g);
  std::size_t degree_sum = 0;
  for (const auto& row : adj)
    for (bool b : row) degree_sum += b ? 1 : 0;
  return static_cast<double>(degree_sum) / static_cast<double>(g.num_nodes);
}

std::size_t count_triangles(const Graph& g) {
  const auto adj = undirected_adjacency(g);
  std::size_t count = 0;
  for (std::size_t a = 0; a < g.num_nodes; ++a)
    for (std::size_t b = a + 1; b < g.num_nodes; ++b) {
      if (!adj[a][b]) continue;
      for (std::size_t c = b + 1; c < g.num_nodes; ++c)
        if (adj[a][c] && adj[b][c]) ++count;
    }
  return count;
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.min_nodes < 3) throw ConfigError("synthetic graphs need at least 3 nodes");
  if (spec.max_nodes < spec.min_nodes) throw ConfigError("synthetic node range is empty");
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> size_dist(spec.min_nodes, spec.max_nodes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<float> feature(0.0f, 1.0f);

  Dataset data;
  data.reserve(spec.num_graphs);
  for (std::size_t gi = 0; gi < spec.num_graphs; ++gi) {
    Graph g;
    g.num_nodes = size_dist(rng);
    std::vector<std::int64_t> community;
    if (spec.kind == SyntheticKind::two_community) {
      community.resize(g.num_nodes);
      for (auto& c : community) c = unit(rng) < 0.5 ? 0 : 1;
    }
    for (std::uint32_t i = 0; i < g.num_nodes; ++i)
      for (std::uint32_t j = i + 1; j < g.num_nodes; ++j) {
        double p = kEdgeProbability;
        if (spec.kind == SyntheticKind::two_community) {
          p = community[i] == community[j] ? kIntraCommunity : kInterCommunity;
        }
        if (unit(rng) < p) {
          g.edges.push_back({i, j});
          g.edges.push_back({j, i});
        }
      }
    g.node_dim = kFeatureDim;
    g.node_feats.resize(g.num_nodes * kFeatureDim);
    for (auto& f : g.node_feats) f = feature(rng);
    switch (spec.kind) {
      case SyntheticKind::degree_regression: g.label = mean_degree(g); break;
      case SyntheticKind::triangle_count: g.label = static_cast<double>(count_triangles(g)); break;
      case SyntheticKind::two_community: g.label = std::move(community); break;
    }
    data.push_back(std::move(g));
  }
  return data;
}

}  // namespace sghormer::graph
