#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "beepvote/rng.hpp"

namespace beepvote {

/// Node index. Zero-based internally; user-facing output is one-based.
using NodeId = std::uint32_t;

/// Value level in 1..K.
using Level = std::uint32_t;

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected simple graph in compressed adjacency form. Immutable after
/// construction and safe to share across threads.
class Graph {
 public:
  Graph() = default;

  /// Builds from an edge list. Rejects self-loops and out-of-range
  /// endpoints; duplicate edges are merged. Connectivity is not required
  /// here (see connected()).
  static Graph from_edges(std::size_t node_count,
                          std::span<const std::pair<NodeId, NodeId>> edges);

  std::size_t node_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return adjacency_.size() / 2; }
  std::size_t degree(NodeId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  std::size_t max_degree() const noexcept { return max_degree_; }

  /// Sorted neighbor list of v.
  std::span<const NodeId> neighbors(NodeId v) const noexcept {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }

  bool adjacent(NodeId a, NodeId b) const noexcept;
  bool connected() const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> adjacency_;
  std::size_t max_degree_ = 0;
};

struct Complete {
  std::size_t nodes = 1;
};

/// rows x cols grid, row-major numbering, 4-neighborhood.
struct Mesh2D {
  std::size_t rows = 1;
  std::size_t cols = 1;
};

struct ErdosRenyi {
  std::size_t nodes = 1;
  /// Defaults to (2/N) log2(N) when unset.
  std::optional<double> edge_probability;

  double probability() const;
};

using TopologySpec = std::variant<Complete, Mesh2D, ErdosRenyi>;

std::size_t node_count(const TopologySpec& spec);
std::string topology_name(const TopologySpec& spec);

/// Maximum whole-graph resamples for ErdosRenyi before giving up.
inline constexpr int kConnectivityRetryLimit = 1000;

/// Builds a connected graph. ErdosRenyi draws each edge independently and
/// resamples the whole graph until it is connected.
Graph build(const TopologySpec& spec, Rng& rng);

/// Path 1-2-...-n. Used by tests and the CLI.
Graph make_path(std::size_t nodes);
/// Star with node 0 at the center.
Graph make_star(std::size_t leaves);

/// Hop distances from source; unreachable nodes get SIZE_MAX.
std::vector<std::size_t> bfs_distances(const Graph& g, NodeId source);

/// Exact hop-count diameter. Throws TopologyError("graph not connected").
std::size_t diameter(const Graph& g);

/// Initial values of all nodes together with their per-level counts.
class LevelAssignment {
 public:
  LevelAssignment() = default;
  /// Throws std::invalid_argument when a value falls outside 1..levels.
  LevelAssignment(std::vector<Level> values, std::size_t levels);

  std::span<const Level> values() const noexcept { return values_; }
  /// Entry j-1 holds #l_j.
  std::span<const std::size_t> level_counts() const noexcept { return counts_; }
  std::size_t levels() const noexcept { return counts_.size(); }
  std::size_t size() const noexcept { return values_.size(); }

  /// The level held by strictly more nodes than any other, if one exists.
  std::optional<Level> strict_plurality() const;

 private:
  std::vector<Level> values_;
  std::vector<std::size_t> counts_;
};

/// Maximal connected same-value node sets. Each spot is sorted; spots are
/// ordered by their smallest node.
std::vector<std::vector<NodeId>> spots(const Graph& g, std::span<const Level> values);
std::vector<std::vector<NodeId>> spots(const Graph& g, const LevelAssignment& assignment);

}  // namespace beepvote
