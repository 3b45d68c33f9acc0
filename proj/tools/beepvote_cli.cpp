// Command-line front end: single trials, seeded sweeps, the exact Markov
// curve, success bounds and spot listings.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "beepvote/analysis.hpp"
#include "beepvote/harness.hpp"

namespace bv = beepvote;

namespace {

// Flag name -> config key. Every flag is kept as text and applied through
// the config parser so flags and config files accept the same syntax.
const std::vector<std::pair<std::string, std::string>> kFlagKeys = {
    {"algo", "algo"},         {"topology", "topology"},     {"nodes", "nodes"},
    {"levels", "k"},          {"delta", "delta"},           {"trials", "trials"},
    {"seed", "master_seed"},  {"c1", "c1"},                 {"c2", "c2"},
    {"d-mode", "d_mode"},     {"id-mode", "id_mode"},       {"out", "output"},
    {"format", "format"},     {"max-phases", "max_phases"}, {"workers", "workers"},
    {"phase-mode", "phase_mode"},
};

struct CommonFlags {
  std::map<std::string, std::string> values;
  std::string config_path;
  std::string trace_path;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  for (const auto& [flag, key] : kFlagKeys)
    cmd->add_option("--" + flag, flags.values[flag], "sets config key '" + key + "'");
  cmd->add_option("--config", flags.config_path, "flat key = value config file");
}

bv::ExperimentConfig resolve(const CLI::App* cmd, const CommonFlags& flags, bv::ExperimentConfig base = {}) {
  bv::ExperimentConfig config = flags.config_path.empty() ? base : bv::load_config(flags.config_path, base);
  for (const auto& [flag, key] : kFlagKeys)
    if (cmd->count("--" + flag) > 0) bv::set_config_value(config, key, flags.values.at(flag));
  config.validate();
  return config;
}

std::string counts_text(std::span<const std::size_t> counts) {
  std::string out;
  for (std::size_t k = 0; k < counts.size(); ++k) out += (k ? " " : "") + std::to_string(counts[k]);
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Sink {
  std::ofstream file;
  std::ostream* out = &std::cout;
  explicit Sink(const std::string& path) {
    if (path.empty()) return;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output file " + path);
    out = &file;
  }
};

int cmd_run(const bv::ExperimentConfig& config, const std::string& trace_path) {
  const auto kind = config.topology.front();
  const auto nodes = config.nodes.front();
  const auto delta = config.delta.front();
  const auto seed = bv::trial_seed(config.master_seed, config.algo, kind, nodes, config.k, delta, 0);

  bv::Rng graph_rng(bv::mix_seed(seed, {bv::stream::graph}));
  const auto graph = bv::build(bv::make_topology(kind, nodes), graph_rng);
  bv::Rng value_rng(bv::mix_seed(seed, {bv::stream::values}));
  const auto assignment = bv::make_assignment(nodes, config.k, delta, value_rng);
  const auto d_sched = bv::scheduling_diameter(graph, config.d_mode);
  const auto protocol_seed = bv::mix_seed(seed, {bv::stream::protocol});

  std::ofstream trace_file;
  std::ostream* trace = nullptr;
  if (!trace_path.empty()) {
    trace_file.open(trace_path);
    if (!trace_file) throw std::runtime_error("cannot open trace file " + trace_path);
    trace = &trace_file;
  }

  bv::TrialResult result;
  if (config.algo == bv::Algo::dvb1) {
    const auto params = bv::Dvb1Params::make(nodes, config.k, d_sched, config.c1);
    result = config.phase_mode == bv::PhaseMode::one_phase
                 ? bv::dvb1_single_phase(graph, assignment, params, protocol_seed)
                 : bv::dvb1_run(graph, assignment, params, protocol_seed, config.max_phases, trace);
  } else {
    const auto params = bv::Dvb2Params::make(graph.max_degree(), config.k, d_sched, config.c2, config.id_mode);
    result = bv::dvb2_run(graph, assignment, params, protocol_seed, config.max_phases, trace);
  }

  std::vector<std::size_t> final_counts(config.k, 0);
  for (auto v : result.final_values) ++final_counts[v - 1];

  Sink sink(config.output);
  auto& out = *sink.out;
  out << "algo: " << bv::to_string(config.algo) << '\n'
      << "topology: " << bv::to_string(kind) << " n=" << nodes << " edges=" << graph.edge_count()
      << " max_degree=" << graph.max_degree() << " d_sched=" << d_sched << '\n'
      << "initial counts: " << counts_text(assignment.level_counts()) << '\n'
      << "target: " << (result.target ? std::to_string(*result.target) : "none") << '\n'
      << "status: " << bv::to_string(result.status) << '\n'
      << "success: " << (result.success ? "yes" : "no") << '\n'
      << "final counts: " << counts_text(final_counts) << '\n'
      << "phases: " << result.metrics.phases_elapsed << '\n'
      << "slots: " << result.metrics.slots_elapsed << '\n'
      << "beeps: " << result.metrics.total_beeps << '\n'
      << "consensus phase: " << (result.consensus_phase ? std::to_string(*result.consensus_phase) : "none")
      << '\n';
  return 0;
}

int cmd_sweep(const bv::ExperimentConfig& config) {
  const auto rows = bv::run_sweep(config);
  bv::emit(rows, config.format, config.output);
  return 0;
}

int cmd_markov(const bv::ExperimentConfig& config) {
  Sink sink(config.output);
  auto& out = *sink.out;
  out << "n,k,delta,counts,win,draw\n";
  for (auto nodes : config.nodes) {
    for (auto delta : config.delta) {
      const auto fractions = bv::delta_fractions(config.k, delta);
      const auto counts = bv::level_counts(nodes, fractions);
      const auto result = bv::analysis::markov_success(counts, 0.5);
      const auto majority = static_cast<std::size_t>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      out << nodes << ',' << config.k << ',' << num(delta) << ',' << counts_text(counts) << ','
          << num(result.win_prob[majority]) << ',' << num(result.draw_prob) << '\n';
    }
  }
  return 0;
}

int cmd_bounds(const bv::ExperimentConfig& config, double eps) {
  Sink sink(config.output);
  auto& out = *sink.out;
  out << "# ratio threshold for success 1-" << num(eps) << " at k=" << config.k << ": "
      << num(bv::analysis::majority_ratio_threshold(config.k, eps)) << '\n';
  out << "n,k,delta,counts,ratio,two_event,closed\n";
  for (auto nodes : config.nodes) {
    const auto r_max = bv::analysis::rounds_until_all_dead(nodes, 1e-6);
    for (auto delta : config.delta) {
      const auto fractions = bv::delta_fractions(config.k, delta);
      auto counts = bv::level_counts(nodes, fractions);
      auto sorted = counts;
      std::sort(sorted.rbegin(), sorted.rend());
      const double ratio = sorted[1] == 0 ? INFINITY : double(sorted[0]) / double(sorted[1]);
      out << nodes << ',' << config.k << ',' << num(delta) << ',' << counts_text(counts) << ','
          << num(ratio) << ',' << num(bv::analysis::lower_bound_two_event(counts, 0.5, r_max)) << ','
          << num(bv::analysis::lower_bound_closed(sorted[0], sorted[1], config.k)) << '\n';
    }
  }
  return 0;
}

int cmd_spots(const bv::ExperimentConfig& config, const std::string& values_text) {
  const auto kind = config.topology.front();
  const auto nodes = config.nodes.front();
  const auto seed = bv::trial_seed(config.master_seed, config.algo, kind, nodes, config.k,
                                   config.delta.front(), 0);
  bv::Rng graph_rng(bv::mix_seed(seed, {bv::stream::graph}));
  const auto graph = bv::build(bv::make_topology(kind, nodes), graph_rng);

  std::vector<bv::Level> values;
  if (values_text.empty()) {
    bv::Rng value_rng(bv::mix_seed(seed, {bv::stream::values}));
    const auto assignment = bv::make_assignment(nodes, config.k, config.delta.front(), value_rng);
    values.assign(assignment.values().begin(), assignment.values().end());
  } else {
    std::stringstream in(values_text);
    std::string item;
    while (std::getline(in, item, ',')) values.push_back(static_cast<bv::Level>(std::stoul(item)));
    if (values.size() != nodes)
      throw bv::ConfigError("--values lists " + std::to_string(values.size()) + " entries for " +
                            std::to_string(nodes) + " nodes");
  }
  const bv::LevelAssignment assignment(values, config.k);

  Sink sink(config.output);
  auto& out = *sink.out;
  for (const auto& spot : bv::spots(graph, assignment)) {
    out << "level " << values[spot.front()] << " size " << spot.size() << ":";
    for (auto v : spot) out << ' ' << v + 1;
    out << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Majority voting in the beep model: simulation and analysis"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, markov_flags, bounds_flags, spots_flags;
  auto* run = app.add_subcommand("run", "one verbose trial at the first sweep point");
  add_common(run, run_flags);
  run->add_option("--trace", run_flags.trace_path, "per-slot log file");

  auto* sweep = app.add_subcommand("sweep", "seeded trials over every (topology, nodes, delta) point");
  add_common(sweep, sweep_flags);

  auto* markov = app.add_subcommand("markov", "exact one-phase success on a complete graph");
  add_common(markov, markov_flags);

  double eps = 0.1;
  auto* bounds = app.add_subcommand("bounds", "closed-form success lower bounds");
  add_common(bounds, bounds_flags);
  bounds->add_option("--eps", eps, "failure probability for the ratio threshold")->check(CLI::Range(0.0, 1.0));

  std::string values_text;
  auto* spots = app.add_subcommand("spots", "same-value connected components of an assignment");
  add_common(spots, spots_flags);
  spots->add_option("--values", values_text, "comma-separated levels, one per node");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return cmd_run(resolve(run, run_flags), run_flags.trace_path);
    if (*sweep) return cmd_sweep(resolve(sweep, sweep_flags));
    bv::ExperimentConfig curve;
    curve.delta = {0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
    if (*markov) return cmd_markov(resolve(markov, markov_flags, curve));
    if (*bounds) return cmd_bounds(resolve(bounds, bounds_flags, curve), eps);
    if (*spots) {
      bv::ExperimentConfig small;
      small.nodes = {16};
      small.topology = {bv::TopologyKind::mesh};
      small.delta = {0.6};
      return cmd_spots(resolve(spots, spots_flags, small), values_text);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
