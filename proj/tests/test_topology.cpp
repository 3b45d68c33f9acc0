#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "beepvote/topology.hpp"
#include "test_support.hpp"

using namespace beepvote;

TEST_CASE("complete graph identities") {
  Rng rng(1);
  const auto g = build(Complete{4}, rng);
  CHECK(g.node_count() == 4);
  CHECK(g.edge_count() == 6);
  CHECK(g.max_degree() == 3);
  CHECK(diameter(g) == 1);
  CHECK(diameter(build(Complete{7}, rng)) == 1);
}

TEST_CASE("mesh identities") {
  Rng rng(1);
  const auto g = build(Mesh2D{4, 4}, rng);
  CHECK(g.edge_count() == 24);
  CHECK(g.max_degree() == 4);
  CHECK(diameter(g) == 6);
  CHECK(diameter(build(Mesh2D{2, 3}, rng)) == 3);
  // Row-major numbering: node 5 (0-based) sits at row 1, column 1.
  const auto n5 = g.neighbors(5);
  CHECK(std::vector<NodeId>(n5.begin(), n5.end()) == std::vector<NodeId>{1, 4, 6, 9});
  for (std::size_t r = 1; r <= 6; ++r)
    for (std::size_t c = 1; c <= 6; ++c) CHECK(diameter(build(Mesh2D{r, c}, rng)) == r + c - 2);
}

TEST_CASE("mesh with zero area is rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(build(Mesh2D{0, 5}, rng), TopologyError);
  CHECK_THROWS_AS(build(Mesh2D{3, 0}, rng), TopologyError);
}

TEST_CASE("path and star") {
  CHECK(diameter(make_path(5)) == 4);
  const auto star = make_star(3);
  CHECK(star.degree(0) == 3);
  CHECK(diameter(star) == 2);
}

TEST_CASE("edge list validation") {
  const std::vector<std::pair<NodeId, NodeId>> loop{{0, 0}};
  CHECK_THROWS_AS(Graph::from_edges(2, loop), TopologyError);
  const std::vector<std::pair<NodeId, NodeId>> out_of_range{{0, 5}};
  CHECK_THROWS_AS(Graph::from_edges(2, out_of_range), TopologyError);
  const std::vector<std::pair<NodeId, NodeId>> dup{{0, 1}, {1, 0}, {0, 1}};
  const auto g = Graph::from_edges(2, dup);
  CHECK(g.edge_count() == 1);
  CHECK(g.adjacent(0, 1));
  CHECK(g.adjacent(1, 0));
}

TEST_CASE("diameter of a disconnected graph throws") {
  const std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}};
  const auto g = Graph::from_edges(3, edges);
  CHECK_FALSE(g.connected());
  CHECK_THROWS_WITH_AS(diameter(g), "graph not connected", TopologyError);
}

TEST_CASE("adjacency is symmetric and irreflexive on generated graphs") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = test::random_connected_graph(rng, 2 + rng.below(30));
    std::size_t max_deg = 0;
    for (NodeId v = 0; v < g.node_count(); ++v) {
      max_deg = std::max(max_deg, g.degree(v));
      for (NodeId u : g.neighbors(v)) {
        CHECK(u != v);
        CHECK(g.adjacent(u, v));
      }
    }
    CHECK(g.max_degree() == max_deg);
    CHECK(g.connected());
  }
}

TEST_CASE("diameter matches all-pairs BFS oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = test::random_connected_graph(rng, 2 + rng.below(25));
    CHECK(diameter(g) == test::floyd_diameter(g));
  }
}

TEST_CASE("Erdos-Renyi default probability and mean degree") {
  const ErdosRenyi spec{100, std::nullopt};
  CHECK(spec.probability() == doctest::Approx(2.0 / 100.0 * std::log2(100.0)));
  CHECK(spec.probability() == doctest::Approx(0.1329).epsilon(1e-3));

  double total_degree = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto g = build(spec, rng);
    CHECK(g.connected());
    total_degree += 2.0 * static_cast<double>(g.edge_count()) / 100.0;
  }
  CHECK(total_degree / 100.0 == doctest::Approx(13.2).epsilon(2.0 / 13.2));
}

TEST_CASE("Erdos-Renyi retry limit") {
  Rng rng(3);
  CHECK_THROWS_WITH_AS(build(ErdosRenyi{200, 0.001}, rng), "connectivity retry limit exceeded",
                       TopologyError);
}

TEST_CASE("topology names and node counts") {
  CHECK(topology_name(Complete{3}) == "complete");
  CHECK(topology_name(Mesh2D{2, 2}) == "mesh");
  CHECK(topology_name(ErdosRenyi{5, std::nullopt}) == "er");
  CHECK(node_count(Mesh2D{3, 5}) == 15);
}

TEST_CASE("level assignment counts and plurality") {
  const LevelAssignment a({1, 2, 2, 3, 2}, 3);
  CHECK(std::vector<std::size_t>(a.level_counts().begin(), a.level_counts().end()) ==
        std::vector<std::size_t>{1, 3, 1});
  CHECK(a.strict_plurality() == Level{2});
  CHECK_FALSE(LevelAssignment({1, 2}, 2).strict_plurality().has_value());
  CHECK_THROWS_AS(LevelAssignment({1, 4}, 3), std::invalid_argument);
  CHECK_THROWS_AS(LevelAssignment({0, 1}, 3), std::invalid_argument);
}

TEST_CASE("spots on hand-computed cases") {
  Rng rng(1);
  const auto mesh = build(Mesh2D{2, 2}, rng);
  const auto s = spots(mesh, LevelAssignment({1, 1, 2, 1}, 2));
  REQUIRE(s.size() == 2);
  CHECK(s[0] == std::vector<NodeId>{0, 1, 3});
  CHECK(s[1] == std::vector<NodeId>{2});

  const auto k3 = build(Complete{3}, rng);
  CHECK(spots(k3, LevelAssignment({1, 2, 3}, 3)).size() == 3);

  const auto g = build(Mesh2D{3, 3}, rng);
  const auto one = spots(g, LevelAssignment(std::vector<Level>(9, 2), 2));
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == 9);
}

TEST_CASE("spots form a maximal same-value partition") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = test::random_connected_graph(rng, 1 + rng.below(40));
    const std::size_t k = 1 + rng.below(4);
    std::vector<Level> values(g.node_count());
    for (auto& v : values) v = static_cast<Level>(1 + rng.below(k));
    const auto parts = spots(g, values);

    std::vector<int> owner(g.node_count(), -1);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      CHECK(std::is_sorted(parts[i].begin(), parts[i].end()));
      for (NodeId v : parts[i]) {
        CHECK(owner[v] == -1);
        owner[v] = static_cast<int>(i);
        CHECK(values[v] == values[parts[i].front()]);
      }
      if (i > 0) CHECK(parts[i - 1].front() < parts[i].front());
    }
    CHECK(std::count(owner.begin(), owner.end(), -1) == 0);

    // Maximality: an edge between equal values never crosses spots.
    // Connectivity: each spot is one component of its induced subgraph.
    for (NodeId v = 0; v < g.node_count(); ++v)
      for (NodeId u : g.neighbors(v))
        if (values[u] == values[v]) CHECK(owner[u] == owner[v]);
    for (const auto& part : parts) {
      std::set<NodeId> members(part.begin(), part.end()), seen{part.front()};
      std::vector<NodeId> stack{part.front()};
      while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        for (NodeId u : g.neighbors(v))
          if (members.count(u) && seen.insert(u).second) stack.push_back(u);
      }
      CHECK(seen.size() == members.size());
    }
  }
}
