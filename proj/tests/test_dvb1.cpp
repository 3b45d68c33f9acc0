#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "beepvote/dvb1.hpp"
#include "test_support.hpp"

using namespace beepvote;

namespace {

Dvb1Params params_for(std::size_t nodes, std::size_t levels, std::size_t d_sched, std::size_t rounds) {
  auto p = Dvb1Params::make(nodes, levels, d_sched);
  p.rounds = rounds;
  return p;
}

std::vector<Level> values_of(const std::vector<Dvb1NodeState>& states) {
  std::vector<Level> out;
  for (const auto& s : states) out.push_back(s.value);
  return out;
}

const DeathRule kNeverDie = [](NodeId) { return false; };

}  // namespace

TEST_CASE("round count and parameters") {
  CHECK(rounds_per_phase(100, 20) == 133);
  CHECK(rounds_per_phase(1, 20) == 1);
  CHECK(rounds_per_phase(2, 20) == 20);
  CHECK_THROWS_AS(rounds_per_phase(0, 20), std::invalid_argument);

  const auto p = Dvb1Params::make(100, 3, 4);
  CHECK(p.rounds == 133);
  CHECK(p.check_interval == 4);
  CHECK(p.phase_slots() == 399);
  CHECK(p.check_slots() == 10);
  auto bad = p;
  bad.survival = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("scheduling diameter modes") {
  Rng rng(1);
  const auto g = build(Mesh2D{3, 4}, rng);
  CHECK(scheduling_diameter(g, DiameterMode::exact) == 5);
  CHECK(scheduling_diameter(g, DiameterMode::upper_bound_n) == 12);
  CHECK(scheduling_diameter(Graph::from_edges(1, {}), DiameterMode::exact) == 1);
}

TEST_CASE("consensus is a fixed point of a round") {
  Rng rng(1);
  const auto g = build(Complete{6}, rng);
  auto states = make_dvb1_states(std::vector<Level>(6, 1), 2);
  Channel channel(g, Duplex::full);
  const auto params = params_for(6, 2, 1, 1);
  for (int r = 0; r < 5; ++r) corrosion_round(channel, states, params, rng);
  CHECK(values_of(states) == std::vector<Level>(6, 1));
}

TEST_CASE("two alive nodes with different levels swap") {
  const auto g = make_path(2);
  for (auto duplex : {Duplex::half, Duplex::full}) {
    auto states = make_dvb1_states(std::vector<Level>{1, 2}, 2);
    Channel channel(g, duplex);
    Rng rng(1);
    corrosion_round(channel, states, params_for(2, 2, 1, 1), rng, kNeverDie);
    CHECK(values_of(states) == std::vector<Level>{2, 1});
  }
}

TEST_CASE("lone opponent adopts the level of two alive neighbors") {
  Rng rng(1);
  const auto g = build(Complete{3}, rng);
  const auto params = params_for(3, 2, 1, 1);

  auto full = make_dvb1_states(std::vector<Level>{1, 1, 2}, 2);
  Channel full_channel(g, Duplex::full);
  corrosion_round(full_channel, full, params, rng, kNeverDie);
  CHECK(values_of(full) == std::vector<Level>{1, 1, 1});

  // Without sensing while beeping, nodes 1 and 2 hear only level 2.
  auto half = make_dvb1_states(std::vector<Level>{1, 1, 2}, 2);
  Channel half_channel(g, Duplex::half);
  corrosion_round(half_channel, half, params, rng, kNeverDie);
  CHECK(values_of(half) == std::vector<Level>{2, 2, 1});
}

TEST_CASE("hear flags reset each round and dead nodes keep listening") {
  const auto g = make_path(2);
  auto states = make_dvb1_states(std::vector<Level>{1, 2}, 2);
  Channel channel(g, Duplex::full);
  Rng rng(1);
  const auto params = params_for(2, 2, 1, 1);
  // Node 0 dies after its first beep; node 1 survives.
  corrosion_round(channel, states, params, rng, [](NodeId v) { return v == 0; });
  CHECK(values_of(states) == std::vector<Level>{2, 1});
  CHECK_FALSE(states[0].allowed_to_beep);
  corrosion_round(channel, states, params, rng, kNeverDie);
  // Node 1 (now level 1) beeps in slot 1; dead node 0 hears it.
  CHECK(states[0].hear_flags == std::vector<std::uint8_t>{1, 0});
  CHECK(states[1].hear_flags == std::vector<std::uint8_t>{0, 0});
  CHECK(values_of(states) == std::vector<Level>{1, 1});
}

TEST_CASE("value changes only on exactly one raised flag") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = test::random_connected_graph(rng, 2 + rng.below(20));
    const std::size_t k = 2 + rng.below(3);
    std::vector<Level> values(g.node_count());
    for (auto& v : values) v = static_cast<Level>(1 + rng.below(k));
    auto states = make_dvb1_states(values, k);
    for (auto& s : states) s.allowed_to_beep = rng.bernoulli(0.7);
    Channel channel(g, trial % 2 ? Duplex::full : Duplex::half);
    const auto before = values_of(states);
    corrosion_round(channel, states, params_for(g.node_count(), k, 1, 1), rng);
    for (std::size_t v = 0; v < states.size(); ++v) {
      const auto& flags = states[v].hear_flags;
      const auto raised = std::count(flags.begin(), flags.end(), 1);
      if (raised == 1)
        CHECK(flags[states[v].value - 1] == 1);
      else
        CHECK(states[v].value == before[v]);
    }
  }
}

TEST_CASE("dead nodes stay silent for the rest of the phase") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = test::random_connected_graph(rng, 2 + rng.below(20));
    std::vector<Level> values(g.node_count());
    for (auto& v : values) v = static_cast<Level>(1 + rng.below(3));
    auto states = make_dvb1_states(values, 3);
    std::ostringstream trace;
    Channel channel(g, Duplex::full, kUnlimitedSlots, &trace);
    std::map<NodeId, std::uint64_t> death_slot;
    Rng coins(trial);
    DeathRule dies = [&](NodeId v) {
      const bool dead = coins.bernoulli(0.5);
      if (dead) death_slot[v] = channel.metrics().slots_elapsed - 1;
      return dead;
    };
    corrosion_phase(channel, states, params_for(g.node_count(), 3, 1, 12), rng, dies);

    std::istringstream lines(trace.str());
    std::string line;
    while (std::getline(lines, line)) {
      std::istringstream fields(line);
      std::uint64_t slot;
      NodeId node;
      std::string kind;
      if (!(fields >> slot >> node >> kind) || kind != "B") continue;
      auto it = death_slot.find(node - 1);
      if (it != death_slot.end()) CHECK(slot <= it->second);
    }
  }
}

TEST_CASE("single node keeps its value") {
  const auto g = Graph::from_edges(1, {});
  auto states = make_dvb1_states(std::vector<Level>{2}, 3);
  Channel channel(g, Duplex::full);
  Rng rng(1);
  corrosion_phase(channel, states, Dvb1Params::make(1, 3, 1), rng);
  CHECK(states[0].value == 2);
}

TEST_CASE("corrosion phase consumes exactly T*K slots") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = test::random_connected_graph(rng, 1 + rng.below(50));
    const std::size_t k = 2 + rng.below(4);
    std::vector<Level> values(g.node_count());
    for (auto& v : values) v = static_cast<Level>(1 + rng.below(k));
    auto states = make_dvb1_states(values, k);
    const auto params = Dvb1Params::make(g.node_count(), k, 1);
    Channel channel(g, Duplex::full);
    corrosion_phase(channel, states, params, rng);
    CHECK(channel.metrics().slots_elapsed == params.rounds * k);
  }
}

TEST_CASE("all nodes die within log2(N/eps) rounds") {
  // P(all dead after r rounds) >= 1 - N p^r.
  for (std::size_t n : {10u, 100u}) {
    Rng rng(n);
    const auto g = build(Complete{n}, rng);
    for (std::size_t r : {5u, 10u, 14u}) {
      const int trials = 2000;
      int all_dead = 0;
      for (int t = 0; t < trials; ++t) {
        auto states = make_dvb1_states(std::vector<Level>(n, 1), 2);
        Channel channel(g, Duplex::full);
        corrosion_phase(channel, states, params_for(n, 2, 1, r), rng);
        all_dead += std::none_of(states.begin(), states.end(),
                                 [](const Dvb1NodeState& s) { return s.allowed_to_beep; });
      }
      const double bound = 1.0 - static_cast<double>(n) * std::pow(0.5, static_cast<double>(r));
      const double rate = static_cast<double>(all_dead) / trials;
      const double sigma = std::sqrt(std::max(bound, 0.0) * (1 - std::max(bound, 0.0)) / trials);
      CHECK(rate >= bound - 3 * sigma);
    }
  }
}

TEST_CASE("termination detection on consensus is silent") {
  Rng rng(1);
  const auto g = build(Mesh2D{3, 3}, rng);
  for (Level level : {1u, 4u}) {
    Channel channel(g);
    const auto flags = termination_detection(channel, std::vector<Level>(9, level), 4, 4);
    CHECK(flags == std::vector<std::uint8_t>(9, 1));
    CHECK(channel.metrics().slots_elapsed == 3 * 5);
    CHECK(channel.metrics().total_beeps == (level == 1 ? 9u : 0u));
  }
}

TEST_CASE("termination wave cancels every node on a path") {
  const auto g = make_path(5);
  Channel channel(g);
  const auto flags = termination_detection(channel, std::vector<Level>{1, 1, 1, 1, 2}, 2, 4);
  CHECK(flags == std::vector<std::uint8_t>(5, 0));
  CHECK(channel.metrics().slots_elapsed == 5);
}

TEST_CASE("termination wave with too small a diameter is detected") {
  const auto g = make_path(6);
  Channel channel(g);
  CHECK_THROWS_AS(termination_detection(channel, std::vector<Level>{1, 1, 1, 1, 1, 2}, 2, 1),
                  std::logic_error);
}

TEST_CASE("termination flags are unanimous on random graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = test::random_connected_graph(rng, 1 + rng.below(25));
    const std::size_t k = 2 + rng.below(3);
    std::vector<Level> values(g.node_count());
    if (rng.bernoulli(0.3)) {
      std::fill(values.begin(), values.end(), static_cast<Level>(1 + rng.below(k)));
    } else {
      for (auto& v : values) v = static_cast<Level>(1 + rng.below(k));
    }
    const bool agree = std::all_of(values.begin(), values.end(), [&](Level v) { return v == values[0]; });
    const auto d = diameter(g);
    Channel channel(g);
    const auto flags = termination_detection(channel, values, k, d);
    CHECK(std::all_of(flags.begin(), flags.end(), [&](std::uint8_t f) { return f == flags[0]; }));
    CHECK((flags[0] == 1) == agree);
    if (agree) CHECK(channel.metrics().slots_elapsed == (k - 1) * (d + 1));
  }
}

TEST_CASE("dvb1 run on consensus input") {
  Rng rng(1);
  const auto g = build(Mesh2D{3, 3}, rng);
  const LevelAssignment a(std::vector<Level>(9, 2), 2);
  const auto params = Dvb1Params::make(9, 2, 4);
  const auto r = dvb1_run(g, a, params, 5);
  CHECK(r.status == RunStatus::terminated);
  CHECK(r.success);
  CHECK(r.final_values == std::vector<Level>(9, 2));
  CHECK(r.metrics.phases_elapsed == params.check_interval);
  CHECK(r.metrics.slots_elapsed == params.check_interval * params.phase_slots() + params.check_slots());
  CHECK(r.consensus_phase == std::uint64_t{1});
}

TEST_CASE("dvb1 run is deterministic") {
  Rng rng(4);
  const auto g = build(ErdosRenyi{40, std::nullopt}, rng);
  Rng vr(5);
  std::vector<Level> values(40);
  for (auto& v : values) v = static_cast<Level>(1 + vr.below(3));
  const LevelAssignment a(values, 3);
  const auto params = Dvb1Params::make(40, 3, diameter(g));
  CHECK(dvb1_run(g, a, params, 77) == dvb1_run(g, a, params, 77));
}

TEST_CASE("dvb1 reports phase cap and slot budget distinctly") {
  Rng rng(1);
  const auto g = build(Mesh2D{4, 4}, rng);
  std::vector<Level> values(16, 1);
  values[5] = 2;
  const LevelAssignment a(values, 2);
  const auto params = Dvb1Params::make(16, 2, 6);
  const auto capped = dvb1_run(g, a, params, 1, 2);
  CHECK(capped.status == RunStatus::max_phases_exceeded);
  CHECK_FALSE(capped.success);
  CHECK(capped.metrics.phases_elapsed == 2);

  const auto starved = dvb1_run(g, a, params, 1, 0, nullptr, 10);
  CHECK(starved.status == RunStatus::slot_budget_exhausted);
  CHECK_FALSE(starved.success);
}

TEST_CASE("dvb1 on a complete graph at delta 0.95") {
  Rng rng(1);
  const auto g = build(Complete{100}, rng);
  std::vector<Level> values(100, 2);
  std::fill(values.begin(), values.begin() + 5, 1);
  const auto params = Dvb1Params::make(100, 2, 1);
  int wins = 0;
  double phases = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng shuffle_rng(seed);
    auto v = values;
    shuffle_rng.shuffle(std::span<Level>(v));
    const auto r = dvb1_run(g, LevelAssignment(v, 2), params, seed);
    wins += r.success;
    phases += static_cast<double>(r.metrics.phases_elapsed);
  }
  CHECK(wins >= 990);
  CHECK(phases / 1000 <= 1.1);
}

TEST_CASE("plurality wins most often on the 4x4 ternary example") {
  Rng rng(1);
  const auto g = build(Mesh2D{4, 4}, rng);
  std::vector<Level> values;
  values.insert(values.end(), 7, 1);
  values.insert(values.end(), 5, 2);
  values.insert(values.end(), 4, 3);
  const auto params = Dvb1Params::make(16, 3, 6);
  std::array<int, 4> wins{};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng shuffle_rng(seed);
    auto v = values;
    shuffle_rng.shuffle(std::span<Level>(v));
    const auto r = dvb1_run(g, LevelAssignment(v, 3), params, seed);
    REQUIRE(r.status == RunStatus::terminated);
    const auto& f = r.final_values;
    if (std::all_of(f.begin(), f.end(), [&](Level x) { return x == f[0]; })) ++wins[f[0]];
  }
  CHECK(wins[1] > wins[2]);
  CHECK(wins[2] > wins[3]);
  CHECK(wins[1] > 400);
}

TEST_CASE("half duplex variant still runs to termination") {
  Rng rng(1);
  const auto g = build(Complete{30}, rng);
  std::vector<Level> values(30, 1);
  std::fill(values.begin(), values.begin() + 10, 2);
  auto params = Dvb1Params::make(30, 2, 1);
  params.duplex = Duplex::half;
  const auto r = dvb1_run(g, LevelAssignment(values, 2), params, 3);
  CHECK(r.status == RunStatus::terminated);
}

TEST_CASE("single phase result") {
  Rng rng(1);
  const auto g = build(Complete{20}, rng);
  std::vector<Level> values(20, 1);
  values[0] = 2;
  const auto params = Dvb1Params::make(20, 2, 1);
  const auto r = dvb1_single_phase(g, LevelAssignment(values, 2), params, 8);
  CHECK(r.metrics.phases_elapsed == 1);
  CHECK(r.metrics.slots_elapsed == params.phase_slots());
  CHECK(r.success == r.first_phase_success);
}
