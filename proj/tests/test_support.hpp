#pragma once

// Generators and brute-force oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "beepvote/rng.hpp"
#include "beepvote/topology.hpp"

namespace beepvote::test {

/// Random spanning tree plus each remaining pair with probability extra.
inline Graph random_connected_graph(Rng& rng, std::size_t nodes, double extra = -1.0) {
  if (extra < 0.0) extra = rng.uniform() * 0.3;
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<NodeId> order(nodes);
  for (NodeId v = 0; v < nodes; ++v) order[v] = v;
  rng.shuffle(std::span<NodeId>(order));
  for (std::size_t i = 1; i < nodes; ++i) edges.emplace_back(order[i], order[rng.below(i)]);
  for (NodeId a = 0; a < nodes; ++a)
    for (NodeId b = a + 1; b < nodes; ++b)
      if (rng.bernoulli(extra)) edges.emplace_back(a, b);
  return Graph::from_edges(nodes, edges);
}

/// Floyd-Warshall diameter.
inline std::size_t floyd_diameter(const Graph& g) {
  const std::size_t n = g.node_count();
  const std::size_t inf = std::numeric_limits<std::size_t>::max() / 4;
  std::vector<std::size_t> d(n * n, inf);
  for (NodeId v = 0; v < n; ++v) {
    d[v * n + v] = 0;
    for (NodeId u : g.neighbors(v)) d[v * n + u] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
  return *std::max_element(d.begin(), d.end());
}

// Outcome frequencies of a Monte-Carlo of the alive/dead process on a fully
// connected network, with its own halting test.
struct ChainSample {
  std::vector<double> wins;
  double draws = 0;
};

inline ChainSample simulate_chain(const std::vector<std::size_t>& start, int samples, std::uint64_t seed) {
  Rng rng(seed);
  ChainSample out{std::vector<double>(start.size(), 0.0), 0.0};
  for (int s = 0; s < samples; ++s) {
    auto c = start;
    for (;;) {
      std::size_t total = 0, nonzero = 0, top = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        total += c[k];
        nonzero += c[k] > 0;
        if (c[k] > c[top]) top = k;
      }
      if (total == 0) {
        out.draws += 1;
        break;
      }
      if (nonzero == 1) {
        out.wins[top] += 1;
        break;
      }
      if (nonzero == 2 && c[top] >= 2 && total - c[top] == 1) {
        out.wins[top] += 1;
        break;
      }
      for (auto& x : c) x = std::binomial_distribution<std::size_t>(x, 0.5)(rng);
    }
  }
  for (auto& w : out.wins) w /= samples;
  out.draws /= samples;
  return out;
}

}  // namespace beepvote::test
