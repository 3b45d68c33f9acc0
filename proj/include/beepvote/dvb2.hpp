#pragma once

// DVB2: pairwise DMVR interactions encoded in beeps.
//
// Nodes draw IDs in 1..Y, learn their neighbors' IDs in Y slots, then run
// phases of Y^2 invitation slots, Y acceptance slots and two 2YK exchange
// sections. Termination uses the same beep wave as DVB1, applied to the DMVR
// memory values.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <vector>

#include "beepvote/dvb1.hpp"
#include "beepvote/engine.hpp"
#include "beepvote/rng.hpp"
#include "beepvote/topology.hpp"

namespace beepvote {

inline constexpr std::size_t kMaxDvb2Levels = 64;

/// Subset of levels 1..64.
class LevelSet {
 public:
  constexpr LevelSet() = default;
  constexpr LevelSet(std::initializer_list<Level> levels) {
    for (Level l : levels) insert(l);
  }

  constexpr bool contains(Level l) const noexcept { return (bits_ >> (l - 1)) & 1U; }
  constexpr void insert(Level l) noexcept { bits_ |= std::uint64_t{1} << (l - 1); }
  constexpr std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool empty() const noexcept { return bits_ == 0; }
  /// Smallest member; the sole member of a singleton.
  constexpr Level front() const noexcept { return static_cast<Level>(std::countr_zero(bits_) + 1); }
  constexpr std::uint64_t bits() const noexcept { return bits_; }

  friend constexpr LevelSet operator|(LevelSet a, LevelSet b) noexcept { return from_bits(a.bits_ | b.bits_); }
  friend constexpr LevelSet operator&(LevelSet a, LevelSet b) noexcept { return from_bits(a.bits_ & b.bits_); }
  constexpr bool operator==(const LevelSet&) const = default;

  static constexpr LevelSet from_bits(std::uint64_t bits) noexcept {
    LevelSet s;
    s.bits_ = bits;
    return s;
  }

 private:
  std::uint64_t bits_ = 0;
};

struct DmvrOutcome {
  LevelSet first_set;
  LevelSet second_set;
  Level first_memory = 1;
  Level second_memory = 1;
  bool operator==(const DmvrOutcome&) const = default;
};

/// DMVR rules. The smaller set takes the union and the larger the
/// intersection; a party left with a singleton copies it into memory; when
/// both updated sets have more than one member, first_adopts picks which
/// party takes the other's old memory.
DmvrOutcome dmvr(LevelSet first, LevelSet second, Level first_memory, Level second_memory,
                 bool first_adopts);
/// As above with the speed-up coin drawn as U(0,1) < 1/2.
DmvrOutcome dmvr(LevelSet first, LevelSet second, Level first_memory, Level second_memory,
                 Rng& rng);

enum class IdMode : std::uint8_t { random, preassigned_unique };

/// Y = max(ceil(c2 * D * log2 D), D + 1) for maximum degree D.
std::size_t id_range(std::size_t max_degree, double c2);

struct Dvb2Params {
  std::size_t levels = 2;
  double c2 = 20.0;
  std::size_t id_range = 2;
  double p_inv = 0.5;
  std::size_t d_sched = 1;
  std::size_t check_interval = 1;
  IdMode id_mode = IdMode::random;

  static Dvb2Params make(std::size_t max_degree, std::size_t levels, std::size_t d_sched,
                         double c2 = 20.0, IdMode id_mode = IdMode::random);

  void validate() const;

  /// Y^2 + Y + 4YK.
  std::uint64_t phase_slots() const noexcept {
    const std::uint64_t y = id_range;
    return y * y + y + 4 * y * levels;
  }
  std::uint64_t check_slots() const noexcept {
    return std::uint64_t{levels - 1} * (d_sched + 1);
  }
};

using NodeTag = std::uint32_t;  // DVB2 node ID in 1..Y

struct Dvb2NodeState {
  NodeTag id = 1;
  std::vector<NodeTag> neighbor_ids;  // sorted
  LevelSet value_set;
  Level value = 1;

  bool inviter = false;
  NodeTag invitee_target = 0;           // 0: none
  std::vector<NodeTag> heard_inviters;  // sorted
  NodeTag chosen_inviter = 0;           // 0: not invited
  bool accepted = false;

  // What an invitee received from, and will return to, its inviter.
  LevelSet partner_set;
  Level partner_value = 0;

  bool terminated = false;
  std::size_t phase_counter = 0;
};

/// Random mode draws each ID uniformly from 1..Y. Preassigned mode runs a
/// greedy distance-2 coloring so closed neighborhoods hold distinct IDs;
/// throws std::runtime_error if that needs more than Y IDs.
std::vector<NodeTag> assign_ids(const Graph& g, const Dvb2Params& params, Rng& rng);

std::vector<Dvb2NodeState> make_dvb2_states(std::span<const Level> values,
                                            std::span<const NodeTag> ids);

/// Y slots: a node beeps in the slot of its own ID and records the IDs of
/// the slots in which it hears a beep.
void discover_neighbor_ids(Channel& channel, std::span<Dvb2NodeState> states,
                           const Dvb2Params& params);

/// One interaction phase (exactly Y^2 + Y + 4YK slots). forced_inviters,
/// when non-empty, replaces the inviter coin per node.
void interaction_phase(Channel& channel, std::span<Dvb2NodeState> states, const Dvb2Params& params,
                       Rng& rng, std::span<const std::uint8_t> forced_inviters = {});

std::size_t default_dvb2_max_phases(const Dvb2Params& params, std::size_t nodes);

TrialResult dvb2_run(const Graph& g, const LevelAssignment& assignment, const Dvb2Params& params,
                     std::uint64_t seed, std::size_t max_phases = 0, std::ostream* trace = nullptr,
                     std::uint64_t slot_budget = 0);

}  // namespace beepvote
