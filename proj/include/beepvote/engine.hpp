#pragma once

// Slot-synchronous beep channel.
//
// Each slot every node either beeps or listens. A listener hears iff at least
// one neighbor beeped; the number of beepers is not observable. Under the
// default half-duplex channel a beeping node observes nothing. The
// full-duplex variant lets a beeping node also sense its neighbors' beeps in
// the same slot (never its own).

#include <concepts>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "beepvote/rng.hpp"
#include "beepvote/topology.hpp"

namespace beepvote {

enum class SlotAction : std::uint8_t { listen, beep };

struct SlotObservation {
  bool heard = false;
  bool operator==(const SlotObservation&) const = default;
};

enum class Duplex : std::uint8_t { half, full };

struct TrialMetrics {
  std::uint64_t slots_elapsed = 0;
  std::uint64_t total_beeps = 0;
  std::uint64_t phases_elapsed = 0;
  bool operator==(const TrialMetrics&) const = default;
};

class SlotBudgetExhausted : public std::runtime_error {
 public:
  SlotBudgetExhausted() : std::runtime_error("slot budget exhausted") {}
};

inline constexpr std::uint64_t kUnlimitedSlots = std::numeric_limits<std::uint64_t>::max();

/// Shared medium of one trial: owns the slot clock, beep counters and the
/// optional trace stream. Not thread-safe; one Channel per trial.
class Channel {
 public:
  explicit Channel(const Graph& g, Duplex duplex = Duplex::half,
                   std::uint64_t slot_budget = kUnlimitedSlots, std::ostream* trace = nullptr);

  /// Runs one slot in which exactly the listed nodes beep. Returns per-node
  /// heard flags (1 = heard), valid until the next call.
  std::span<const std::uint8_t> transmit(std::span<const NodeId> beepers);

  /// Dense form of transmit().
  std::vector<SlotObservation> step(std::span<const SlotAction> actions);

  /// Advances the clock over slots in which no node beeps.
  void idle(std::uint64_t slots);

  void end_phase() noexcept { ++metrics_.phases_elapsed; }

  const Graph& graph() const noexcept { return *graph_; }
  Duplex duplex() const noexcept { return duplex_; }
  const TrialMetrics& metrics() const noexcept { return metrics_; }

 private:
  void charge(std::uint64_t slots);

  const Graph* graph_;
  Duplex duplex_;
  std::uint64_t slot_budget_;
  std::ostream* trace_;
  TrialMetrics metrics_;
  std::vector<std::uint8_t> heard_;
  std::vector<std::uint8_t> beeping_;
  std::vector<NodeId> touched_;
};

/// One half-duplex slot on g. Throws std::invalid_argument when the action
/// count differs from the node count.
std::vector<SlotObservation> step(const Graph& g, std::span<const SlotAction> actions);

enum class RunStatus : std::uint8_t { terminated, max_phases_exceeded, slot_budget_exhausted };

const char* to_string(RunStatus status) noexcept;

/// Outcome of one simulated execution.
struct TrialResult {
  std::vector<Level> final_values;
  /// Initial strict-plurality level, when one exists.
  std::optional<Level> target;
  /// All final values equal target and the run terminated.
  bool success = false;
  RunStatus status = RunStatus::terminated;
  TrialMetrics metrics;
  /// First phase at whose end every node held the same value (observer view).
  std::optional<std::uint64_t> consensus_phase;
  /// Every node held target at the end of the first phase.
  bool first_phase_success = false;

  bool operator==(const TrialResult&) const = default;
};

/// Per-node protocol automaton driven in lockstep by run(). A node sees only
/// its own state, the shared slot index and its own observations.
template <class A>
concept NodeAutomaton = requires(A& a, const A& ca, std::uint64_t slot, Rng& rng,
                                 SlotObservation obs) {
  { a.act(slot, rng) } -> std::same_as<SlotAction>;
  a.absorb(slot, obs);
  { ca.finished() } -> std::convertible_to<bool>;
  { ca.value() } -> std::convertible_to<Level>;
};

struct RunOutcome {
  std::vector<Level> final_values;
  TrialMetrics metrics;
  /// False when the slot budget ran out before every automaton finished.
  bool completed = false;
};

/// Drives one automaton per node slot by slot until all are finished or the
/// budget is spent. make(node) builds node's automaton. Node randomness is
/// drawn from one stream seeded by seed, in node order within each slot.
template <class Factory>
  requires NodeAutomaton<std::invoke_result_t<Factory&, NodeId>>
RunOutcome run(const Graph& g, Factory&& make, std::uint64_t seed, std::uint64_t slot_budget,
               Duplex duplex = Duplex::half, std::ostream* trace = nullptr) {
  if (slot_budget == 0) throw std::invalid_argument("slot budget must be positive");
  using Automaton = std::invoke_result_t<Factory&, NodeId>;
  std::vector<Automaton> nodes;
  nodes.reserve(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) nodes.push_back(make(v));

  Rng rng(seed);
  Channel channel(g, duplex, slot_budget, trace);
  std::vector<NodeId> beepers;
  RunOutcome outcome;
  auto all_finished = [&] {
    for (const auto& n : nodes)
      if (!n.finished()) return false;
    return true;
  };
  for (std::uint64_t slot = 0;; ++slot) {
    if (all_finished()) {
      outcome.completed = true;
      break;
    }
    if (slot >= slot_budget) break;
    beepers.clear();
    for (NodeId v = 0; v < nodes.size(); ++v)
      if (nodes[v].act(slot, rng) == SlotAction::beep) beepers.push_back(v);
    auto heard = channel.transmit(beepers);
    for (NodeId v = 0; v < nodes.size(); ++v) nodes[v].absorb(slot, SlotObservation{heard[v] != 0});
  }
  outcome.metrics = channel.metrics();
  outcome.final_values.reserve(nodes.size());
  for (const auto& n : nodes) outcome.final_values.push_back(n.value());
  return outcome;
}

}  // namespace beepvote
