#include "beepvote/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "beepvote/analysis.hpp"

namespace beepvote {

const char* to_string(Algo algo) noexcept { return algo == Algo::dvb1 ? "dvb1" : "dvb2"; }

const char* to_string(TopologyKind kind) noexcept {
  switch (kind) {
    case TopologyKind::complete: return "complete";
    case TopologyKind::mesh: return "mesh";
    case TopologyKind::er: return "er";
  }
  return "unknown";
}

const char* to_string(DiameterMode mode) noexcept {
  return mode == DiameterMode::exact ? "exact" : "upper_bound_n";
}

const char* to_string(IdMode mode) noexcept {
  return mode == IdMode::random ? "random" : "unique";
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("invalid value for " + key + ": '" + value + "'");
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) bad_value(key, text);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, text);
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) bad_value(key, text);
  try {
    return std::stoull(text);
  } catch (const std::logic_error&) {
    bad_value(key, text);
  }
}

}  // namespace

Algo parse_algo(const std::string& text) {
  if (text == "dvb1") return Algo::dvb1;
  if (text == "dvb2") return Algo::dvb2;
  bad_value("algo", text);
}

TopologyKind parse_topology_kind(const std::string& text) {
  if (text == "complete") return TopologyKind::complete;
  if (text == "mesh") return TopologyKind::mesh;
  if (text == "er") return TopologyKind::er;
  bad_value("topology", text);
}

DiameterMode parse_d_mode(const std::string& text) {
  if (text == "exact") return DiameterMode::exact;
  if (text == "upper_bound_n") return DiameterMode::upper_bound_n;
  bad_value("d_mode", text);
}

IdMode parse_id_mode(const std::string& text) {
  if (text == "random") return IdMode::random;
  if (text == "unique") return IdMode::preassigned_unique;
  bad_value("id_mode", text);
}

OutputFormat parse_format(const std::string& text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  bad_value("format", text);
}

PhaseMode parse_phase_mode(const std::string& text) {
  if (text == "full") return PhaseMode::full;
  if (text == "one_phase") return PhaseMode::one_phase;
  bad_value("phase_mode", text);
}

TopologySpec make_topology(TopologyKind kind, std::size_t nodes) {
  switch (kind) {
    case TopologyKind::complete: return Complete{nodes};
    case TopologyKind::er: return ErdosRenyi{nodes, std::nullopt};
    case TopologyKind::mesh: {
      std::size_t rows = static_cast<std::size_t>(std::sqrt(static_cast<double>(nodes)));
      while (rows > 1 && nodes % rows != 0) --rows;
      rows = std::max<std::size_t>(rows, 1);
      return Mesh2D{rows, nodes / rows};
    }
  }
  throw ConfigError("unknown topology kind");
}

void ExperimentConfig::validate() const {
  if (topology.empty()) throw ConfigError("topology list is empty");
  if (nodes.empty()) throw ConfigError("nodes list is empty");
  if (delta.empty()) throw ConfigError("delta list is empty");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (k != 2 && k != 3) throw ConfigError("delta schedules are defined for k = 2 or k = 3");
  for (std::size_t n : nodes)
    if (n < 1) throw ConfigError("node counts must be positive");
  for (double d : delta) {
    if (k == 2 && !(d > 0.5 && d <= 1.0)) throw ConfigError("binary delta must lie in (1/2, 1]");
    if (k == 3 && !(d >= 0.0 && d < 1.0 / 3.0)) throw ConfigError("ternary delta must lie in [0, 1/3)");
  }
  if (!(c1 > 0.0)) throw ConfigError("c1 must be positive");
  if (!(c2 > 0.0)) throw ConfigError("c2 must be positive");
  if (phase_mode == PhaseMode::one_phase && algo != Algo::dvb1)
    throw ConfigError("phase_mode one_phase applies to dvb1 only");
  if (workers < 1) throw ConfigError("workers must be at least 1");
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key == "algo") {
    config.algo = parse_algo(value);
  } else if (key == "topology") {
    config.topology.clear();
    for (const auto& item : split_list(value)) config.topology.push_back(parse_topology_kind(item));
  } else if (key == "nodes") {
    config.nodes.clear();
    for (const auto& item : split_list(value)) config.nodes.push_back(parse_uint(key, item));
  } else if (key == "k") {
    config.k = parse_uint(key, value);
  } else if (key == "delta") {
    config.delta.clear();
    for (const auto& item : split_list(value)) config.delta.push_back(parse_double(key, item));
  } else if (key == "trials") {
    config.trials = parse_uint(key, value);
  } else if (key == "master_seed") {
    config.master_seed = parse_uint(key, value);
  } else if (key == "c1") {
    config.c1 = parse_double(key, value);
  } else if (key == "c2") {
    config.c2 = parse_double(key, value);
  } else if (key == "d_mode") {
    config.d_mode = parse_d_mode(value);
  } else if (key == "id_mode") {
    config.id_mode = parse_id_mode(value);
  } else if (key == "max_phases") {
    config.max_phases = parse_uint(key, value);
  } else if (key == "phase_mode") {
    config.phase_mode = parse_phase_mode(value);
  } else if (key == "format") {
    config.format = parse_format(value);
  } else if (key == "output") {
    config.output = value;
  } else if (key == "workers") {
    config.workers = parse_uint(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  base.validate();
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, std::move(base));
}

std::vector<double> delta_fractions(std::size_t levels, double delta) {
  if (levels == 2) return {1.0 - delta, delta};
  if (levels == 3) return {2.0 / 3.0 - delta, 1.0 / 3.0, delta};
  throw ConfigError("delta schedules are defined for k = 2 or k = 3");
}

std::vector<std::size_t> level_counts(std::size_t nodes, std::span<const double> fractions) {
  if (fractions.empty()) throw ConfigError("empty fraction vector");
  const double total = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("fractions must sum to 1");
  for (double f : fractions)
    if (f < 0.0) throw ConfigError("fractions must be non-negative");

  std::vector<std::size_t> counts(fractions.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    // The small offset keeps shares such as 0.7 * 100 from flooring to 69.
    counts[k] = static_cast<std::size_t>(std::floor(fractions[k] * static_cast<double>(nodes) + 1e-9));
    counts[k] = std::min(counts[k], nodes - assigned);
    assigned += counts[k];
  }
  const auto majority = static_cast<std::size_t>(
      std::max_element(fractions.begin(), fractions.end()) - fractions.begin());
  counts[majority] += nodes - assigned;

  const auto best = *std::max_element(counts.begin(), counts.end());
  if (std::count(counts.begin(), counts.end(), best) != 1 || counts[majority] != best)
    throw ConfigError("no strict plurality");
  return counts;
}

LevelAssignment make_assignment(std::size_t nodes, std::span<const double> fractions, Rng& rng) {
  const auto counts = level_counts(nodes, fractions);
  std::vector<Level> values;
  values.reserve(nodes);
  for (std::size_t k = 0; k < counts.size(); ++k)
    values.insert(values.end(), counts[k], static_cast<Level>(k + 1));
  rng.shuffle(std::span<Level>(values));
  return LevelAssignment(std::move(values), fractions.size());
}

LevelAssignment make_assignment(std::size_t nodes, std::size_t levels, double delta, Rng& rng) {
  if (levels == 2 && !(delta > 0.5 && delta <= 1.0)) throw ConfigError("binary delta must lie in (1/2, 1]");
  if (levels == 3 && !(delta >= 0.0 && delta < 1.0 / 3.0))
    throw ConfigError("ternary delta must lie in [0, 1/3)");
  const auto fractions = delta_fractions(levels, delta);
  return make_assignment(nodes, fractions, rng);
}

std::uint64_t trial_seed(std::uint64_t master_seed, Algo algo, TopologyKind kind, std::size_t nodes,
                         std::size_t levels, double delta, std::size_t trial_index) {
  return mix_seed(master_seed, {static_cast<std::uint64_t>(algo), static_cast<std::uint64_t>(kind),
                                nodes, levels, std::bit_cast<std::uint64_t>(delta), trial_index});
}

namespace {

struct PointGraph {
  Graph graph;
  std::size_t diameter = 1;
};

PointGraph point_graph(const ExperimentConfig& config, TopologyKind kind, std::size_t nodes,
                       std::uint64_t seed) {
  Rng graph_rng(mix_seed(seed, {stream::graph}));
  PointGraph pg;
  pg.graph = build(make_topology(kind, nodes), graph_rng);
  pg.diameter = scheduling_diameter(pg.graph, config.d_mode);
  return pg;
}

TrialSummary run_on(const ExperimentConfig& config, const PointGraph& pg, double delta,
                    std::uint64_t seed) {
  TrialSummary summary;
  Rng value_rng(mix_seed(seed, {stream::values}));
  const auto assignment = make_assignment(pg.graph.node_count(), config.k, delta, value_rng);
  const std::uint64_t protocol_seed = mix_seed(seed, {stream::protocol});

  TrialResult result;
  if (config.algo == Algo::dvb1) {
    auto params = Dvb1Params::make(pg.graph.node_count(), config.k, pg.diameter, config.c1);
    if (config.phase_mode == PhaseMode::one_phase)
      result = dvb1_single_phase(pg.graph, assignment, params, protocol_seed);
    else
      result = dvb1_run(pg.graph, assignment, params, protocol_seed, config.max_phases);
  } else {
    auto params = Dvb2Params::make(pg.graph.max_degree(), config.k, pg.diameter, config.c2,
                                   config.id_mode);
    result = dvb2_run(pg.graph, assignment, params, protocol_seed, config.max_phases);
  }
  summary.success = result.success;
  summary.error = result.status != RunStatus::terminated;
  summary.metrics = result.metrics;
  return summary;
}

TrialSummary guarded(auto&& body) {
  try {
    return body();
  } catch (const std::exception&) {
    TrialSummary failed;
    failed.error = true;
    return failed;
  }
}

}  // namespace

TrialSummary run_trial(const ExperimentConfig& config, TopologyKind kind, std::size_t nodes,
                       double delta, std::size_t trial_index) {
  const auto seed = trial_seed(config.master_seed, config.algo, kind, nodes, config.k, delta, trial_index);
  return guarded([&] { return run_on(config, point_graph(config, kind, nodes, seed), delta, seed); });
}

SweepRow summarize(const ExperimentConfig& config, TopologyKind kind, std::size_t nodes, double delta,
                   std::span<const TrialSummary> trials) {
  SweepRow row;
  row.algo = to_string(config.algo);
  row.topology = to_string(kind);
  row.n = nodes;
  row.k = config.k;
  row.delta = delta;
  row.trials = trials.size();

  std::size_t successes = 0, completed = 0;
  double phases = 0, slots = 0, beeps = 0;
  for (const auto& t : trials) {
    successes += t.success ? 1 : 0;
    if (t.error) {
      ++row.errors;
      continue;
    }
    ++completed;
    phases += static_cast<double>(t.metrics.phases_elapsed);
    slots += static_cast<double>(t.metrics.slots_elapsed);
    beeps += static_cast<double>(t.metrics.total_beeps);
  }
  if (!trials.empty()) row.success_rate = static_cast<double>(successes) / static_cast<double>(trials.size());
  if (completed > 0) {
    row.mean_phases = phases / static_cast<double>(completed);
    row.mean_slots = slots / static_cast<double>(completed);
    row.mean_beeps = beeps / static_cast<double>(completed);
  }
  const auto ci = analysis::wilson95(successes, trials.size());
  row.ci95_lo = ci.lo;
  row.ci95_hi = ci.hi;
  return row;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config) {
  config.validate();

  struct Point {
    TopologyKind kind;
    std::size_t nodes;
    double delta;
    std::optional<PointGraph> fixed;  // deterministic topologies are built once
  };
  std::vector<Point> points;
  for (auto kind : config.topology)
    for (auto nodes : config.nodes)
      for (auto delta : config.delta) points.push_back({kind, nodes, delta, std::nullopt});

  for (auto& p : points) {
    if (p.kind == TopologyKind::er) continue;
    try {
      p.fixed = point_graph(config, p.kind, p.nodes, config.master_seed);
    } catch (const std::exception&) {
      // Every trial at this point reports an error below.
    }
  }

  const std::size_t total = points.size() * config.trials;
  std::vector<TrialSummary> summaries(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const auto& p = points[job / config.trials];
      const std::size_t trial = job % config.trials;
      const auto seed = trial_seed(config.master_seed, config.algo, p.kind, p.nodes, config.k, p.delta, trial);
      summaries[job] = guarded([&] {
        if (p.kind == TopologyKind::er) return run_on(config, point_graph(config, p.kind, p.nodes, seed), p.delta, seed);
        if (!p.fixed) throw TopologyError("topology construction failed");
        return run_on(config, *p.fixed, p.delta, seed);
      });
    }
  };

  const std::size_t workers = std::min(config.workers, std::max<std::size_t>(1, total));
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();

  std::vector<SweepRow> rows;
  rows.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::span<const TrialSummary> slice(summaries.data() + i * config.trials, config.trials);
    rows.push_back(summarize(config, points[i].kind, points[i].nodes, points[i].delta, slice));
  }
  return rows;
}

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double round6(double v) { return std::stod(fmt6(v)); }

}  // namespace

void write_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.algo << ',' << r.topology << ',' << r.n << ',' << r.k << ',' << fmt6(r.delta) << ','
        << r.trials << ',' << fmt6(r.success_rate) << ',' << fmt6(r.mean_phases) << ','
        << fmt6(r.mean_slots) << ',' << fmt6(r.mean_beeps) << ',' << fmt6(r.ci95_lo) << ','
        << fmt6(r.ci95_hi) << ',' << r.errors << '\n';
  }
}

void write_json(std::ostream& out, std::span<const SweepRow> rows) {
  auto array = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json obj;
    obj["algo"] = r.algo;
    obj["topology"] = r.topology;
    obj["n"] = r.n;
    obj["k"] = r.k;
    obj["delta"] = round6(r.delta);
    obj["trials"] = r.trials;
    obj["success_rate"] = round6(r.success_rate);
    obj["mean_phases"] = round6(r.mean_phases);
    obj["mean_slots"] = round6(r.mean_slots);
    obj["mean_beeps"] = round6(r.mean_beeps);
    obj["ci95_lo"] = round6(r.ci95_lo);
    obj["ci95_hi"] = round6(r.ci95_hi);
    obj["errors"] = r.errors;
    array.push_back(std::move(obj));
  }
  out << array.dump(2) << '\n';
}

std::vector<SweepRow> parse_json_rows(const std::string& text) {
  std::vector<SweepRow> rows;
  for (const auto& obj : nlohmann::json::parse(text)) {
    SweepRow r;
    r.algo = obj.at("algo").get<std::string>();
    r.topology = obj.at("topology").get<std::string>();
    r.n = obj.at("n").get<std::size_t>();
    r.k = obj.at("k").get<std::size_t>();
    r.delta = obj.at("delta").get<double>();
    r.trials = obj.at("trials").get<std::size_t>();
    r.success_rate = obj.at("success_rate").get<double>();
    r.mean_phases = obj.at("mean_phases").get<double>();
    r.mean_slots = obj.at("mean_slots").get<double>();
    r.mean_beeps = obj.at("mean_beeps").get<double>();
    r.ci95_lo = obj.at("ci95_lo").get<double>();
    r.ci95_hi = obj.at("ci95_hi").get<double>();
    r.errors = obj.at("errors").get<std::size_t>();
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit(std::span<const SweepRow> rows, OutputFormat format, const std::string& path) {
  auto write = [&](std::ostream& out) {
    if (format == OutputFormat::csv)
      write_csv(out, rows);
    else
      write_json(out, rows);
  };
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  write(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed for output file " + path);
}

}  // namespace beepvote
