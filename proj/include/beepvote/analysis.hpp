#pragma once

// Closed-form and exact success predictions for one DVB1 phase on a fully
// connected network.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace beepvote::analysis {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Rounds after which every node is dead with probability >= 1 - eps:
/// ceil(log2(N / eps)).
std::size_t rounds_until_all_dead(std::size_t nodes, double eps);

/// Probability that at least two majority nodes survive r rounds while at
/// most one node of the other levels does, plus the probability that exactly
/// one majority node survives and all others are dead; maximized over
/// r = 0..r_max. The one-survivor sum runs over non-majority levels only.
/// Throws DomainError when the largest count is tied.
double lower_bound_two_event(std::span<const std::size_t> counts, double p, std::size_t r_max);

/// Same expression at a single r.
double two_event_at(std::span<const std::size_t> counts, double p, std::size_t r);

/// (1 - exp(-sqrt(a/b))) * exp(-(K-1) b / (sqrt(a b) - 1)) for the largest
/// count a and runner-up b.
double lower_bound_closed(std::size_t majority, std::size_t runner_up, std::size_t levels);

/// Minimum majority/runner-up ratio for success probability 1 - eps:
/// (1/4)(ln(1-eps) + sqrt(ln(1-eps)^2 + 4K))^2.
double majority_ratio_threshold(std::size_t levels, double eps);

/// Alive-node counts per level at the start of a round.
using AliveState = std::vector<std::size_t>;

enum class Halting : std::uint8_t { transient, win, draw };

struct Classification {
  Halting kind = Halting::transient;
  /// Zero-based winning level when kind == win.
  std::size_t level = 0;
  bool operator==(const Classification&) const = default;
};

Classification classify(std::span<const std::size_t> state);

/// One-round transition probability between alive states: product of
/// per-level binomial survival probabilities. Zero when any count grows.
/// Throws DomainError when from is a halting state.
double transition_prob(std::span<const std::size_t> from, std::span<const std::size_t> to,
                       double p);

struct MarkovResult {
  std::vector<double> win_prob;
  double draw_prob = 0.0;
};

/// Exact absorption probabilities of the alive/dead chain started at
/// initial. Dynamic programming over states in increasing total order, with
/// self-loop mass removed by dividing by 1 - p^total.
MarkovResult markov_success(std::span<const std::size_t> initial, double p);

/// Wilson score interval at 95% confidence.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval wilson95(std::size_t successes, std::size_t trials);

}  // namespace beepvote::analysis
