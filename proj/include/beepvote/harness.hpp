#pragma once

// Seeded experiment sweeps: initial-value generation, batched trials,
// aggregation and CSV/JSON output.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "beepvote/dvb1.hpp"
#include "beepvote/dvb2.hpp"
#include "beepvote/engine.hpp"
#include "beepvote/rng.hpp"
#include "beepvote/topology.hpp"

namespace beepvote {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algo : std::uint8_t { dvb1, dvb2 };
enum class TopologyKind : std::uint8_t { complete, mesh, er };
enum class OutputFormat : std::uint8_t { csv, json };
/// full: run to unanimous termination. one_phase: DVB1 success after a
/// single corrosion phase.
enum class PhaseMode : std::uint8_t { full, one_phase };

const char* to_string(Algo algo) noexcept;
const char* to_string(TopologyKind kind) noexcept;
const char* to_string(DiameterMode mode) noexcept;
const char* to_string(IdMode mode) noexcept;

Algo parse_algo(const std::string& text);
TopologyKind parse_topology_kind(const std::string& text);
DiameterMode parse_d_mode(const std::string& text);
IdMode parse_id_mode(const std::string& text);
OutputFormat parse_format(const std::string& text);
PhaseMode parse_phase_mode(const std::string& text);

/// Topology of the given kind and size. Meshes use the most square
/// factorization rows x cols of nodes with rows <= cols.
TopologySpec make_topology(TopologyKind kind, std::size_t nodes);

struct ExperimentConfig {
  Algo algo = Algo::dvb1;
  std::vector<TopologyKind> topology{TopologyKind::complete};
  std::vector<std::size_t> nodes{100};
  std::size_t k = 2;
  std::vector<double> delta{0.9};
  std::size_t trials = 1000;
  std::uint64_t master_seed = 1;
  double c1 = 20.0;
  double c2 = 20.0;
  DiameterMode d_mode = DiameterMode::exact;
  IdMode id_mode = IdMode::random;
  /// 0 selects the protocol default.
  std::size_t max_phases = 0;
  PhaseMode phase_mode = PhaseMode::full;
  OutputFormat format = OutputFormat::csv;
  /// Empty writes to stdout.
  std::string output;
  std::size_t workers = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses flat "key = value" text. Lists are comma separated; '#' starts a
/// comment. Unknown keys and malformed values throw ConfigError.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
/// Applies one key/value pair.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Level fractions for the delta-parameterized distributions: (1-d, d) for
/// K = 2 and (2/3-d, 1/3, d) for K = 3.
std::vector<double> delta_fractions(std::size_t levels, double delta);

/// Per-level node counts: floor of each share, remainder to the level with
/// the largest fraction. Throws ConfigError when the fractions do not sum to
/// 1 or the counts have no strict plurality.
std::vector<std::size_t> level_counts(std::size_t nodes, std::span<const double> fractions);

/// Random placement of level_counts(nodes, fractions) over the nodes.
LevelAssignment make_assignment(std::size_t nodes, std::span<const double> fractions, Rng& rng);
LevelAssignment make_assignment(std::size_t nodes, std::size_t levels, double delta, Rng& rng);

struct SweepRow {
  std::string algo;
  std::string topology;
  std::size_t n = 0;
  std::size_t k = 0;
  double delta = 0.0;
  std::size_t trials = 0;
  double success_rate = 0.0;
  double mean_phases = 0.0;
  double mean_slots = 0.0;
  double mean_beeps = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
  std::size_t errors = 0;

  bool operator==(const SweepRow&) const = default;
};

/// Summary of one trial as the sweep sees it.
struct TrialSummary {
  bool success = false;
  bool error = false;
  TrialMetrics metrics;
};

/// Seed of a trial: mixes the master seed with the point's identity
/// (algo, topology, N, K, delta) and the trial index, so inserting sweep
/// points leaves the other points' trials unchanged.
std::uint64_t trial_seed(std::uint64_t master_seed, Algo algo, TopologyKind kind, std::size_t nodes,
                         std::size_t levels, double delta, std::size_t trial_index);

/// Runs one seeded trial of the configured protocol at one sweep point.
TrialSummary run_trial(const ExperimentConfig& config, TopologyKind kind, std::size_t nodes,
                       double delta, std::size_t trial_index);

/// Runs every (topology, N, delta) point in config order. Output is
/// independent of config.workers.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config);

/// Aggregates trial summaries into a row.
SweepRow summarize(const ExperimentConfig& config, TopologyKind kind, std::size_t nodes, double delta,
                   std::span<const TrialSummary> trials);

inline constexpr const char* kCsvHeader =
    "algo,topology,n,k,delta,trials,success_rate,mean_phases,mean_slots,mean_beeps,ci95_lo,ci95_hi,errors";

void write_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_json(std::ostream& out, std::span<const SweepRow> rows);
std::vector<SweepRow> parse_json_rows(const std::string& text);

/// Writes rows to path (stdout when empty). I/O failures throw
/// std::runtime_error naming the path.
void emit(std::span<const SweepRow> rows, OutputFormat format, const std::string& path);

}  // namespace beepvote
