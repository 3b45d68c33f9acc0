#include "beepvote/dvb2.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace beepvote {

DmvrOutcome dmvr(LevelSet first, LevelSet second, Level first_memory, Level second_memory,
                 bool first_adopts) {
  DmvrOutcome out;
  if (first.size() <= second.size()) {
    out.first_set = first | second;
    out.second_set = first & second;
  } else {
    out.first_set = first & second;
    out.second_set = first | second;
  }

  out.first_memory = first_memory;
  out.second_memory = second_memory;
  if (out.first_set.size() == 1) out.first_memory = out.first_set.front();
  if (out.second_set.size() == 1) out.second_memory = out.second_set.front();

  if (out.first_set.size() > 1 && out.second_set.size() > 1) {
    if (first_adopts)
      out.first_memory = second_memory;
    else
      out.second_memory = first_memory;
  }
  return out;
}

DmvrOutcome dmvr(LevelSet first, LevelSet second, Level first_memory, Level second_memory,
                 Rng& rng) {
  return dmvr(first, second, first_memory, second_memory, rng.uniform() < 0.5);
}

std::size_t id_range(std::size_t max_degree, double c2) {
  const double d = static_cast<double>(max_degree);
  const double raw = max_degree <= 1 ? 0.0 : std::ceil(c2 * d * std::log2(d));
  return std::max(static_cast<std::size_t>(raw), max_degree + 1);
}

Dvb2Params Dvb2Params::make(std::size_t max_degree, std::size_t levels, std::size_t d_sched,
                            double c2, IdMode id_mode) {
  Dvb2Params p;
  p.levels = levels;
  p.c2 = c2;
  p.id_range = beepvote::id_range(max_degree, c2);
  p.d_sched = std::max<std::size_t>(1, d_sched);
  p.check_interval = p.d_sched;
  p.id_mode = id_mode;
  p.validate();
  return p;
}

void Dvb2Params::validate() const {
  if (levels < 1 || levels > kMaxDvb2Levels) throw std::invalid_argument("K must lie in 1..64");
  if (id_range < 1) throw std::invalid_argument("Y must be at least 1");
  if (!(p_inv > 0.0 && p_inv < 1.0)) throw std::invalid_argument("p_inv must lie in (0, 1)");
  if (d_sched < 1) throw std::invalid_argument("scheduling diameter must be at least 1");
  if (check_interval < 1) throw std::invalid_argument("check interval must be at least 1");
}

std::vector<NodeTag> assign_ids(const Graph& g, const Dvb2Params& params, Rng& rng) {
  const std::size_t n = g.node_count();
  std::vector<NodeTag> ids(n, 0);
  if (params.id_mode == IdMode::random) {
    for (auto& id : ids) id = static_cast<NodeTag>(rng.below(params.id_range) + 1);
    return ids;
  }

  std::vector<std::size_t> used_by(params.id_range + 2, n);  // id -> last node that saw it
  for (NodeId v = 0; v < n; ++v) {
    auto mark = [&](NodeId u) {
      if (ids[u] != 0) used_by[ids[u]] = v;
    };
    for (NodeId u : g.neighbors(v)) {
      mark(u);
      for (NodeId w : g.neighbors(u)) mark(w);
    }
    NodeTag pick = 1;
    while (pick <= params.id_range && used_by[pick] == v) ++pick;
    if (pick > params.id_range)
      throw std::runtime_error("distance-2 coloring needs more than Y ids");
    ids[v] = pick;
  }
  return ids;
}

std::vector<Dvb2NodeState> make_dvb2_states(std::span<const Level> values,
                                            std::span<const NodeTag> ids) {
  if (values.size() != ids.size()) throw std::invalid_argument("ids and values differ in length");
  std::vector<Dvb2NodeState> states(values.size());
  for (std::size_t v = 0; v < states.size(); ++v) {
    states[v].id = ids[v];
    states[v].value = values[v];
    states[v].value_set.insert(values[v]);
  }
  return states;
}

namespace {

struct BeepEvent {
  std::uint64_t slot;
  NodeId node;
  auto operator<=>(const BeepEvent&) const = default;
};

// Plays a section of section_slots slots in which only the listed events
// beep. on_slot(slot, beepers, heard) runs for every non-silent slot.
template <class OnSlot>
void play_section(Channel& channel, std::vector<BeepEvent>& events, std::uint64_t section_slots,
                  OnSlot&& on_slot) {
  std::sort(events.begin(), events.end());
  std::vector<NodeId> beepers;
  std::uint64_t next = 0;
  for (std::size_t i = 0; i < events.size();) {
    const std::uint64_t slot = events[i].slot;
    beepers.clear();
    for (; i < events.size() && events[i].slot == slot; ++i) beepers.push_back(events[i].node);
    channel.idle(slot - next);
    auto heard = channel.transmit(beepers);
    on_slot(slot, std::span<const NodeId>(beepers), heard);
    next = slot + 1;
  }
  channel.idle(section_slots - next);
}

template <class T>
void insert_sorted(std::vector<T>& list, T item) {
  auto it = std::lower_bound(list.begin(), list.end(), item);
  if (it == list.end() || *it != item) list.insert(it, item);
}

bool is_beeper(std::span<const NodeId> beepers, NodeId v) {
  return std::find(beepers.begin(), beepers.end(), v) != beepers.end();
}

}  // namespace

void discover_neighbor_ids(Channel& channel, std::span<Dvb2NodeState> states,
                           const Dvb2Params& params) {
  std::vector<BeepEvent> events;
  events.reserve(states.size());
  for (NodeId v = 0; v < states.size(); ++v) {
    states[v].neighbor_ids.clear();
    events.push_back({states[v].id - 1u, v});
  }
  play_section(channel, events, params.id_range,
               [&](std::uint64_t slot, std::span<const NodeId> beepers, std::span<const std::uint8_t> heard) {
                 const auto tag = static_cast<NodeTag>(slot + 1);
                 for (NodeId v = 0; v < states.size(); ++v)
                   if (heard[v] && !is_beeper(beepers, v)) insert_sorted(states[v].neighbor_ids, tag);
               });
}

void interaction_phase(Channel& channel, std::span<Dvb2NodeState> states, const Dvb2Params& params,
                       Rng& rng, std::span<const std::uint8_t> forced_inviters) {
  const std::size_t n = states.size();
  const std::uint64_t y = params.id_range;
  const std::uint64_t k_levels = params.levels;
  if (!forced_inviters.empty() && forced_inviters.size() != n)
    throw std::invalid_argument("forced inviter vector length does not match node count");

  // Role coins, then invitee choice.
  for (NodeId v = 0; v < n; ++v) {
    auto& s = states[v];
    s.inviter = forced_inviters.empty() ? rng.uniform() < params.p_inv : forced_inviters[v] != 0;
    s.invitee_target = 0;
    s.heard_inviters.clear();
    s.chosen_inviter = 0;
    s.accepted = false;
    s.partner_set = LevelSet{};
    s.partner_value = 0;
  }
  for (auto& s : states)
    if (s.inviter && !s.neighbor_ids.empty())
      s.invitee_target = s.neighbor_ids[rng.below(s.neighbor_ids.size())];

  std::vector<BeepEvent> events;

  // Invitations: Y x Y slots keyed by (inviter id, invitee id).
  for (NodeId v = 0; v < n; ++v)
    if (states[v].invitee_target != 0)
      events.push_back({(states[v].id - 1u) * y + (states[v].invitee_target - 1u), v});
  play_section(channel, events, y * y,
               [&](std::uint64_t slot, std::span<const NodeId>, std::span<const std::uint8_t> heard) {
                 const auto from = static_cast<NodeTag>(slot / y + 1);
                 const auto to = static_cast<NodeTag>(slot % y + 1);
                 for (NodeId v = 0; v < n; ++v)
                   if (heard[v] && !states[v].inviter && states[v].id == to)
                     insert_sorted(states[v].heard_inviters, from);
               });

  // Acceptance: Y slots keyed by the chosen inviter's id.
  events.clear();
  for (NodeId v = 0; v < n; ++v) {
    auto& s = states[v];
    if (s.inviter || s.heard_inviters.empty()) continue;
    s.chosen_inviter = s.heard_inviters[rng.below(s.heard_inviters.size())];
    events.push_back({s.chosen_inviter - 1u, v});
  }
  play_section(channel, events, y,
               [&](std::uint64_t slot, std::span<const NodeId>, std::span<const std::uint8_t> heard) {
                 const auto tag = static_cast<NodeTag>(slot + 1);
                 for (NodeId v = 0; v < n; ++v)
                   if (heard[v] && states[v].inviter && states[v].id == tag) states[v].accepted = true;
               });

  // Inviter -> invitee: per inviter id a block of K set bits then K
  // one-hot value slots.
  const std::uint64_t block = 2 * k_levels;
  events.clear();
  for (NodeId v = 0; v < n; ++v) {
    const auto& s = states[v];
    if (!(s.inviter && s.accepted)) continue;
    const std::uint64_t base = (s.id - 1u) * block;
    for (Level k = 1; k <= k_levels; ++k)
      if (s.value_set.contains(k)) events.push_back({base + k - 1, v});
    events.push_back({base + k_levels + s.value - 1, v});
  }
  play_section(channel, events, y * block,
               [&](std::uint64_t slot, std::span<const NodeId>, std::span<const std::uint8_t> heard) {
                 const auto tag = static_cast<NodeTag>(slot / block + 1);
                 const auto offset = slot % block;
                 for (NodeId v = 0; v < n; ++v) {
                   auto& s = states[v];
                   if (!heard[v] || s.inviter || s.chosen_inviter != tag) continue;
                   if (offset < k_levels)
                     s.partner_set.insert(static_cast<Level>(offset + 1));
                   else
                     s.partner_value = static_cast<Level>(offset - k_levels + 1);
                 }
               });

  // Invitees apply DMVR as the first party.
  for (auto& s : states) {
    if (s.inviter || s.chosen_inviter == 0) continue;
    const Level partner_value = s.partner_value != 0 ? s.partner_value : s.value;
    const auto out = dmvr(s.value_set, s.partner_set, s.value, partner_value, rng);
    s.value_set = out.first_set;
    s.value = out.first_memory;
    s.partner_set = out.second_set;
    s.partner_value = out.second_memory;
  }

  // Invitee -> inviter: the inviter's updated set and memory.
  events.clear();
  for (NodeId v = 0; v < n; ++v) {
    const auto& s = states[v];
    if (s.inviter || s.chosen_inviter == 0) continue;
    const std::uint64_t base = (s.chosen_inviter - 1u) * block;
    for (Level k = 1; k <= k_levels; ++k)
      if (s.partner_set.contains(k)) events.push_back({base + k - 1, v});
    events.push_back({base + k_levels + s.partner_value - 1, v});
  }
  for (auto& s : states)
    if (s.inviter && s.accepted) s.value_set = LevelSet{};
  play_section(channel, events, y * block,
               [&](std::uint64_t slot, std::span<const NodeId>, std::span<const std::uint8_t> heard) {
                 const auto tag = static_cast<NodeTag>(slot / block + 1);
                 const auto offset = slot % block;
                 for (NodeId v = 0; v < n; ++v) {
                   auto& s = states[v];
                   if (!heard[v] || !s.inviter || !s.accepted || s.id != tag) continue;
                   if (offset < k_levels)
                     s.value_set.insert(static_cast<Level>(offset + 1));
                   else
                     s.value = static_cast<Level>(offset - k_levels + 1);
                 }
               });
}

std::size_t default_dvb2_max_phases(const Dvb2Params& params, std::size_t nodes) {
  return std::max<std::size_t>(50 * params.d_sched, 40 * nodes);
}

TrialResult dvb2_run(const Graph& g, const LevelAssignment& assignment, const Dvb2Params& params,
                     std::uint64_t seed, std::size_t max_phases, std::ostream* trace,
                     std::uint64_t slot_budget) {
  params.validate();
  if (assignment.size() != g.node_count())
    throw std::invalid_argument("assignment length does not match node count");
  if (assignment.levels() != params.levels)
    throw std::invalid_argument("assignment level count does not match K");
  if (max_phases == 0) max_phases = default_dvb2_max_phases(params, g.node_count());
  if (slot_budget == 0) {
    const std::uint64_t per_phase =
        params.phase_slots() + (params.check_slots() + params.check_interval - 1) / params.check_interval;
    slot_budget = 10 * (std::uint64_t{max_phases} * per_phase + params.id_range);
  }

  TrialResult result;
  result.target = assignment.strict_plurality();

  Rng rng(seed);
  const auto ids = assign_ids(g, params, rng);
  auto states = make_dvb2_states(assignment.values(), ids);
  Channel channel(g, Duplex::half, slot_budget, trace);

  std::vector<Level> values(states.size());
  auto snapshot = [&] {
    for (std::size_t v = 0; v < states.size(); ++v) values[v] = states[v].value;
  };
  auto all_equal = [&](Level level) {
    return std::all_of(values.begin(), values.end(), [level](Level v) { return v == level; });
  };

  try {
    discover_neighbor_ids(channel, states, params);
    result.status = RunStatus::max_phases_exceeded;
    std::size_t counter = 0;
    while (channel.metrics().phases_elapsed < max_phases) {
      interaction_phase(channel, states, params, rng);
      channel.end_phase();
      snapshot();
      const auto phase = channel.metrics().phases_elapsed;
      if (!result.consensus_phase && !values.empty() && all_equal(values.front()))
        result.consensus_phase = phase;
      if (phase == 1) result.first_phase_success = result.target && all_equal(*result.target);

      ++counter;
      for (auto& s : states) s.phase_counter = counter;
      if (counter == params.check_interval) {
        counter = 0;
        auto flags = termination_detection(channel, values, params.levels, params.d_sched);
        for (std::size_t v = 0; v < states.size(); ++v) states[v].terminated = flags[v] != 0;
        if (std::all_of(flags.begin(), flags.end(), [](std::uint8_t f) { return f != 0; })) {
          result.status = RunStatus::terminated;
          break;
        }
      }
    }
  } catch (const SlotBudgetExhausted&) {
    result.status = RunStatus::slot_budget_exhausted;
  }

  snapshot();
  result.final_values = values;
  result.metrics = channel.metrics();
  result.success = result.status == RunStatus::terminated && result.target &&
                   all_equal(*result.target);
  return result;
}

}  // namespace beepvote
