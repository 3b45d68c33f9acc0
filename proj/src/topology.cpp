#include "beepvote/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace beepvote {

Graph Graph::from_edges(std::size_t node_count,
                        std::span<const std::pair<NodeId, NodeId>> edges) {
  std::vector<std::vector<NodeId>> lists(node_count);
  for (auto [a, b] : edges) {
    if (a >= node_count || b >= node_count)
      throw TopologyError("edge endpoint out of range");
    if (a == b) throw TopologyError("self-loop not allowed");
    lists[a].push_back(b);
    lists[b].push_back(a);
  }

  Graph g;
  g.offsets_.reserve(node_count + 1);
  g.offsets_.push_back(0);
  for (auto& list : lists) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    g.adjacency_.insert(g.adjacency_.end(), list.begin(), list.end());
    g.offsets_.push_back(g.adjacency_.size());
    g.max_degree_ = std::max(g.max_degree_, list.size());
  }
  return g;
}

bool Graph::adjacent(NodeId a, NodeId b) const noexcept {
  auto n = neighbors(a);
  return std::binary_search(n.begin(), n.end(), b);
}

bool Graph::connected() const {
  if (node_count() == 0) return true;
  auto dist = bfs_distances(*this, 0);
  return std::none_of(dist.begin(), dist.end(), [](std::size_t d) {
    return d == std::numeric_limits<std::size_t>::max();
  });
}

double ErdosRenyi::probability() const {
  if (edge_probability) return *edge_probability;
  if (nodes < 2) return 1.0;
  const double n = static_cast<double>(nodes);
  return std::min(1.0, 2.0 / n * std::log2(n));
}

std::size_t node_count(const TopologySpec& spec) {
  struct {
    std::size_t operator()(const Complete& c) const { return c.nodes; }
    std::size_t operator()(const Mesh2D& m) const { return m.rows * m.cols; }
    std::size_t operator()(const ErdosRenyi& e) const { return e.nodes; }
  } visitor;
  return std::visit(visitor, spec);
}

std::string topology_name(const TopologySpec& spec) {
  struct {
    std::string operator()(const Complete&) const { return "complete"; }
    std::string operator()(const Mesh2D&) const { return "mesh"; }
    std::string operator()(const ErdosRenyi&) const { return "er"; }
  } visitor;
  return std::visit(visitor, spec);
}

namespace {

Graph build_complete(std::size_t n) {
  if (n == 0) throw TopologyError("complete graph needs at least one node");
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(n * (n - 1) / 2);
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b) edges.emplace_back(a, b);
  return Graph::from_edges(n, edges);
}

Graph build_mesh(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw TopologyError("mesh needs rows*cols > 0");
  std::vector<std::pair<NodeId, NodeId>> edges;
  auto id = [cols](std::size_t r, std::size_t c) { return static_cast<NodeId>(r * cols + c); };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) edges.emplace_back(id(r, c), id(r + 1, c));
    }
  }
  return Graph::from_edges(rows * cols, edges);
}

Graph build_erdos_renyi(const ErdosRenyi& spec, Rng& rng) {
  const std::size_t n = spec.nodes;
  if (n == 0) throw TopologyError("Erdos-Renyi graph needs at least one node");
  const double p = spec.probability();
  if (!(p > 0.0 && p <= 1.0)) throw TopologyError("edge probability must lie in (0, 1]");

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int attempt = 0; attempt < kConnectivityRetryLimit; ++attempt) {
    edges.clear();
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b)
        if (rng.bernoulli(p)) edges.emplace_back(a, b);
    Graph g = Graph::from_edges(n, edges);
    if (g.connected()) return g;
  }
  throw TopologyError("connectivity retry limit exceeded");
}

}  // namespace

Graph build(const TopologySpec& spec, Rng& rng) {
  struct {
    Rng& rng;
    Graph operator()(const Complete& c) const { return build_complete(c.nodes); }
    Graph operator()(const Mesh2D& m) const { return build_mesh(m.rows, m.cols); }
    Graph operator()(const ErdosRenyi& e) const { return build_erdos_renyi(e, rng); }
  } visitor{rng};
  return std::visit(visitor, spec);
}

Graph make_path(std::size_t nodes) {
  if (nodes == 0) throw TopologyError("path needs at least one node");
  return build_mesh(1, nodes);
}

Graph make_star(std::size_t leaves) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId leaf = 1; leaf <= leaves; ++leaf) edges.emplace_back(0, leaf);
  return Graph::from_edges(leaves + 1, edges);
}

std::vector<std::size_t> bfs_distances(const Graph& g, NodeId source) {
  constexpr auto unreachable = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(g.node_count(), unreachable);
  std::queue<NodeId> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop();
    for (NodeId u : g.neighbors(v)) {
      if (dist[u] == unreachable) {
        dist[u] = dist[v] + 1;
        frontier.push(u);
      }
    }
  }
  return dist;
}

std::size_t diameter(const Graph& g) {
  std::size_t best = 0;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    for (std::size_t d : bfs_distances(g, v)) {
      if (d == std::numeric_limits<std::size_t>::max()) throw TopologyError("graph not connected");
      best = std::max(best, d);
    }
  }
  return best;
}

LevelAssignment::LevelAssignment(std::vector<Level> values, std::size_t levels)
    : values_(std::move(values)), counts_(levels, 0) {
  if (levels == 0) throw std::invalid_argument("level count must be positive");
  for (Level v : values_) {
    if (v < 1 || v > levels) {
      std::ostringstream msg;
      msg << "value " << v << " outside 1.." << levels;
      throw std::invalid_argument(msg.str());
    }
    ++counts_[v - 1];
  }
}

std::optional<Level> LevelAssignment::strict_plurality() const {
  if (counts_.empty()) return std::nullopt;
  auto best = std::max_element(counts_.begin(), counts_.end());
  if (std::count(counts_.begin(), counts_.end(), *best) != 1) return std::nullopt;
  return static_cast<Level>(best - counts_.begin() + 1);
}

std::vector<std::vector<NodeId>> spots(const Graph& g, std::span<const Level> values) {
  if (values.size() != g.node_count())
    throw std::invalid_argument("assignment length does not match node count");

  constexpr auto unvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> spot_of(g.node_count(), unvisited);
  std::vector<std::vector<NodeId>> result;
  std::vector<NodeId> stack;
  for (NodeId start = 0; start < g.node_count(); ++start) {
    if (spot_of[start] != unvisited) continue;
    const std::size_t label = result.size();
    auto& members = result.emplace_back();
    spot_of[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      members.push_back(v);
      for (NodeId u : g.neighbors(v)) {
        if (spot_of[u] == unvisited && values[u] == values[v]) {
          spot_of[u] = label;
          stack.push_back(u);
        }
      }
    }
    std::sort(members.begin(), members.end());
  }
  return result;
}

std::vector<std::vector<NodeId>> spots(const Graph& g, const LevelAssignment& assignment) {
  return spots(g, assignment.values());
}

}  // namespace beepvote
