#pragma once

// DVB1: corrosion of small same-value spots, with a beep-wave termination
// check every check_interval phases.
//
// A phase is T rounds of K slots. In slot k of a round every alive node
// holding level k beeps and then dies with probability 1 - p. A node that
// heard beeps in exactly one slot m of the round adopts level m when the
// round ends.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "beepvote/engine.hpp"
#include "beepvote/rng.hpp"
#include "beepvote/topology.hpp"

namespace beepvote {

/// How nodes bound the network diameter for scheduling.
enum class DiameterMode : std::uint8_t { exact, upper_bound_n };

std::size_t scheduling_diameter(const Graph& g, DiameterMode mode);

/// Rounds per phase: max(1, ceil(c1 * log2 N)).
std::size_t rounds_per_phase(std::size_t nodes, double c1);

struct Dvb1Params {
  std::size_t levels = 2;
  double c1 = 20.0;
  std::size_t rounds = 1;
  double survival = 0.5;
  std::size_t d_sched = 1;
  std::size_t check_interval = 1;
  /// Full duplex lets a beeping node count same-slot beeps of its neighbors.
  Duplex duplex = Duplex::full;

  static Dvb1Params make(std::size_t nodes, std::size_t levels, std::size_t d_sched,
                         double c1 = 20.0);

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;

  /// Slots of one corrosion phase: rounds * levels.
  std::uint64_t phase_slots() const noexcept { return std::uint64_t{rounds} * levels; }
  /// Slots of a full termination check: (K - 1)(d_sched + 1).
  std::uint64_t check_slots() const noexcept {
    return std::uint64_t{levels - 1} * (d_sched + 1);
  }
};

struct Dvb1NodeState {
  Level value = 1;
  bool allowed_to_beep = true;
  std::vector<std::uint8_t> hear_flags;
  bool terminated = false;
  std::size_t phase_counter = 0;
};

std::vector<Dvb1NodeState> make_dvb1_states(std::span<const Level> values, std::size_t levels);

/// Optional override of the death coin: returns true when node dies after
/// beeping. Empty means draw U(0,1) < 1 - p from the trial stream.
using DeathRule = std::function<bool(NodeId)>;

/// One round of K slots.
void corrosion_round(Channel& channel, std::span<Dvb1NodeState> states, const Dvb1Params& params,
                     Rng& rng, const DeathRule& dies = {});

/// Revives every node and runs params.rounds corrosion rounds. Rounds after
/// the last alive node has died are silent and are skipped in bulk.
void corrosion_phase(Channel& channel, std::span<Dvb1NodeState> states, const Dvb1Params& params,
                     Rng& rng, const DeathRule& dies = {});

/// Beep-wave consensus check over up to K-1 periods of d_sched+1 slots.
/// Returns per-node terminated flags (1 = all values agree). d_sched must
/// be at least the graph diameter for the flags to be unanimous.
std::vector<std::uint8_t> termination_detection(Channel& channel, std::span<const Level> values,
                                                std::size_t levels, std::size_t d_sched);

std::size_t default_dvb1_max_phases(const Dvb1Params& params);

/// Full DVB1 execution. max_phases = 0 selects default_dvb1_max_phases().
/// slot_budget = 0 selects ten times the slots of max_phases phases.
TrialResult dvb1_run(const Graph& g, const LevelAssignment& assignment, const Dvb1Params& params,
                     std::uint64_t seed, std::size_t max_phases = 0, std::ostream* trace = nullptr,
                     std::uint64_t slot_budget = 0);

/// Exactly one corrosion phase, without termination checks. status is
/// terminated once the phase completes; success means every node holds the
/// initial strict plurality.
TrialResult dvb1_single_phase(const Graph& g, const LevelAssignment& assignment,
                              const Dvb1Params& params, std::uint64_t seed);

}  // namespace beepvote
