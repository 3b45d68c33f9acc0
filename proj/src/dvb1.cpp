#include "beepvote/dvb1.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace beepvote {

std::size_t scheduling_diameter(const Graph& g, DiameterMode mode) {
  if (mode == DiameterMode::upper_bound_n) return std::max<std::size_t>(1, g.node_count());
  return std::max<std::size_t>(1, diameter(g));
}

std::size_t rounds_per_phase(std::size_t nodes, double c1) {
  if (nodes == 0) throw std::invalid_argument("node count must be positive");
  const double t = std::ceil(c1 * std::log2(static_cast<double>(nodes)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(t));
}

Dvb1Params Dvb1Params::make(std::size_t nodes, std::size_t levels, std::size_t d_sched,
                            double c1) {
  Dvb1Params p;
  p.levels = levels;
  p.c1 = c1;
  p.rounds = rounds_per_phase(nodes, c1);
  p.d_sched = std::max<std::size_t>(1, d_sched);
  p.check_interval = p.d_sched;
  p.validate();
  return p;
}

void Dvb1Params::validate() const {
  if (levels < 1) throw std::invalid_argument("K must be at least 1");
  if (rounds < 1) throw std::invalid_argument("T must be at least 1");
  if (!(survival > 0.0 && survival < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  if (d_sched < 1) throw std::invalid_argument("scheduling diameter must be at least 1");
  if (check_interval < 1) throw std::invalid_argument("check interval must be at least 1");
}

std::vector<Dvb1NodeState> make_dvb1_states(std::span<const Level> values, std::size_t levels) {
  std::vector<Dvb1NodeState> states(values.size());
  for (std::size_t v = 0; v < values.size(); ++v) {
    states[v].value = values[v];
    states[v].hear_flags.assign(levels, 0);
  }
  return states;
}

void corrosion_round(Channel& channel, std::span<Dvb1NodeState> states, const Dvb1Params& params,
                     Rng& rng, const DeathRule& dies) {
  for (auto& s : states) std::fill(s.hear_flags.begin(), s.hear_flags.end(), 0);

  std::vector<NodeId> beepers;
  for (Level level = 1; level <= params.levels; ++level) {
    beepers.clear();
    for (NodeId v = 0; v < states.size(); ++v)
      if (states[v].allowed_to_beep && states[v].value == level) beepers.push_back(v);

    auto heard = channel.transmit(beepers);
    for (NodeId v = 0; v < states.size(); ++v)
      if (heard[v]) states[v].hear_flags[level - 1] = 1;

    for (NodeId v : beepers) {
      const bool death = dies ? dies(v) : rng.bernoulli(1.0 - params.survival);
      if (death) states[v].allowed_to_beep = false;
    }
  }

  for (auto& s : states) {
    const auto raised = std::count(s.hear_flags.begin(), s.hear_flags.end(), 1);
    if (raised != 1) continue;
    auto it = std::find(s.hear_flags.begin(), s.hear_flags.end(), 1);
    s.value = static_cast<Level>(it - s.hear_flags.begin() + 1);
  }
}

void corrosion_phase(Channel& channel, std::span<Dvb1NodeState> states, const Dvb1Params& params,
                     Rng& rng, const DeathRule& dies) {
  for (auto& s : states) s.allowed_to_beep = true;
  for (std::size_t round = 0; round < params.rounds; ++round) {
    const bool any_alive = std::any_of(states.begin(), states.end(),
                                       [](const Dvb1NodeState& s) { return s.allowed_to_beep; });
    if (!any_alive) {
      // Nobody can beep again this phase, so no flag is raised and no
      // value changes.
      channel.idle(std::uint64_t{params.rounds - round} * params.levels);
      break;
    }
    corrosion_round(channel, states, params, rng, dies);
  }
}

std::vector<std::uint8_t> termination_detection(Channel& channel, std::span<const Level> values,
                                                std::size_t levels, std::size_t d_sched) {
  const std::size_t n = values.size();
  std::vector<std::uint8_t> terminated(n, 1);
  std::vector<NodeId> beepers;

  for (Level period = 1; period < levels; ++period) {
    beepers.clear();
    for (NodeId v = 0; v < n; ++v)
      if (values[v] == period) beepers.push_back(v);
    auto heard = channel.transmit(beepers);
    for (NodeId v = 0; v < n; ++v)
      if (values[v] != period && heard[v]) terminated[v] = 0;

    // Relay slots: a node already cancelled beeps in every remaining slot;
    // hearing in slot d makes a node beep from slot d+1 on.
    for (std::size_t d = 1; d <= d_sched; ++d) {
      beepers.clear();
      for (NodeId v = 0; v < n; ++v)
        if (!terminated[v]) beepers.push_back(v);
      if (beepers.empty()) {
        channel.idle(d_sched - d + 1);
        break;
      }
      auto relay = channel.transmit(beepers);
      for (NodeId v = 0; v < n; ++v)
        if (relay[v]) terminated[v] = 0;
    }

    const auto cancelled = std::count(terminated.begin(), terminated.end(), 0);
    if (cancelled == 0) continue;
    if (static_cast<std::size_t>(cancelled) != n)
      throw std::logic_error("termination wave did not reach every node; d_sched below diameter");
    break;
  }
  return terminated;
}

std::size_t default_dvb1_max_phases(const Dvb1Params& params) { return 50 * params.d_sched; }

namespace {

bool all_equal(std::span<const Level> values, Level level) {
  return std::all_of(values.begin(), values.end(), [level](Level v) { return v == level; });
}

std::vector<Level> current_values(std::span<const Dvb1NodeState> states) {
  std::vector<Level> out(states.size());
  for (std::size_t v = 0; v < states.size(); ++v) out[v] = states[v].value;
  return out;
}

}  // namespace

TrialResult dvb1_run(const Graph& g, const LevelAssignment& assignment, const Dvb1Params& params,
                     std::uint64_t seed, std::size_t max_phases, std::ostream* trace,
                     std::uint64_t slot_budget) {
  params.validate();
  if (assignment.size() != g.node_count())
    throw std::invalid_argument("assignment length does not match node count");
  if (assignment.levels() != params.levels)
    throw std::invalid_argument("assignment level count does not match K");
  if (max_phases == 0) max_phases = default_dvb1_max_phases(params);
  if (slot_budget == 0) {
    const std::uint64_t per_phase =
        params.phase_slots() + (params.check_slots() + params.check_interval - 1) / params.check_interval;
    slot_budget = 10 * std::uint64_t{max_phases} * per_phase;
  }

  TrialResult result;
  result.target = assignment.strict_plurality();

  auto states = make_dvb1_states(assignment.values(), params.levels);
  Rng rng(seed);
  Channel channel(g, params.duplex, slot_budget, trace);
  std::vector<Level> values = current_values(states);

  try {
    result.status = RunStatus::max_phases_exceeded;
    std::size_t counter = 0;
    while (channel.metrics().phases_elapsed < max_phases) {
      corrosion_phase(channel, states, params, rng);
      channel.end_phase();
      values = current_values(states);
      const auto phase = channel.metrics().phases_elapsed;
      if (!result.consensus_phase && all_equal(values, values.empty() ? 1 : values.front()))
        result.consensus_phase = phase;
      if (phase == 1) result.first_phase_success = result.target && all_equal(values, *result.target);

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

  result.final_values = current_values(states);
  result.metrics = channel.metrics();
  result.success = result.status == RunStatus::terminated && result.target &&
                   all_equal(result.final_values, *result.target);
  return result;
}

TrialResult dvb1_single_phase(const Graph& g, const LevelAssignment& assignment,
                              const Dvb1Params& params, std::uint64_t seed) {
  params.validate();
  if (assignment.size() != g.node_count())
    throw std::invalid_argument("assignment length does not match node count");
  auto states = make_dvb1_states(assignment.values(), params.levels);
  Rng rng(seed);
  Channel channel(g, params.duplex);
  corrosion_phase(channel, states, params, rng);
  channel.end_phase();

  TrialResult result;
  result.target = assignment.strict_plurality();
  result.final_values = current_values(states);
  result.metrics = channel.metrics();
  result.status = RunStatus::terminated;
  result.first_phase_success = result.target && all_equal(result.final_values, *result.target);
  result.success = result.first_phase_success;
  if (!result.final_values.empty() && all_equal(result.final_values, result.final_values.front()))
    result.consensus_phase = 1;
  return result;
}

}  // namespace beepvote
