#include "beepvote/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace beepvote::analysis {

std::size_t rounds_until_all_dead(std::size_t nodes, double eps) {
  if (nodes < 1) throw DomainError("N must be at least 1");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  const double x = std::log2(static_cast<double>(nodes) / eps);
  return static_cast<std::size_t>(std::ceil(x - 1e-12));
}

namespace {

std::size_t unique_argmax(std::span<const std::size_t> counts) {
  if (counts.empty()) throw DomainError("empty count vector");
  auto best = std::max_element(counts.begin(), counts.end());
  if (std::count(counts.begin(), counts.end(), *best) != 1)
    throw DomainError("largest level count is tied");
  return static_cast<std::size_t>(best - counts.begin());
}

// Probability that exactly one of n nodes is alive after r rounds.
double one_alive(std::size_t n, double alive, double dead) {
  if (n == 0) return 0.0;
  return static_cast<double>(n) * alive * std::pow(dead, static_cast<double>(n - 1));
}

double all_dead(std::size_t n, double dead) { return std::pow(dead, static_cast<double>(n)); }

}  // namespace

double two_event_at(std::span<const std::size_t> counts, double p, std::size_t r) {
  const std::size_t m = unique_argmax(counts);
  const double alive = std::pow(p, static_cast<double>(r));
  const double dead = 1.0 - alive;

  const double majority_two = 1.0 - (all_dead(counts[m], dead) + one_alive(counts[m], alive, dead));

  double others_dead = 1.0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (k != m) others_dead *= all_dead(counts[k], dead);

  double one_other = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (k == m) continue;
    double term = one_alive(counts[k], alive, dead);
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (j != m && j != k) term *= all_dead(counts[j], dead);
    one_other += term;
  }

  const double lone_majority = one_alive(counts[m], alive, dead) * others_dead;
  return majority_two * (others_dead + one_other) + lone_majority;
}

double lower_bound_two_event(std::span<const std::size_t> counts, double p, std::size_t r_max) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0, 1)");
  unique_argmax(counts);
  double best = 0.0;
  for (std::size_t r = 0; r <= r_max; ++r) best = std::max(best, two_event_at(counts, p, r));
  return best;
}

double lower_bound_closed(std::size_t majority, std::size_t runner_up, std::size_t levels) {
  if (levels < 2) throw DomainError("K must be at least 2");
  if (runner_up < 1 || majority <= runner_up)
    throw DomainError("need majority > runner-up >= 1");
  const double a = static_cast<double>(majority);
  const double b = static_cast<double>(runner_up);
  const double geo = std::sqrt(a * b);
  if (geo <= 1.0) throw DomainError("sqrt(majority * runner-up) must exceed 1");
  return (1.0 - std::exp(-std::sqrt(a / b))) *
         std::exp(-static_cast<double>(levels - 1) * b / (geo - 1.0));
}

double majority_ratio_threshold(std::size_t levels, double eps) {
  if (levels < 2) throw DomainError("K must be at least 2");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  const double a = std::log1p(-eps);
  const double k4 = 4.0 * static_cast<double>(levels);
  // a + sqrt(a^2 + 4K) rewritten as 4K / (sqrt(a^2 + 4K) - a): no
  // cancellation when a is large and negative.
  const double y2 = k4 / (std::sqrt(a * a + k4) - a);
  return 0.25 * y2 * y2;
}

Classification classify(std::span<const std::size_t> state) {
  std::vector<std::size_t> nonzero;
  for (std::size_t k = 0; k < state.size(); ++k)
    if (state[k] > 0) nonzero.push_back(k);

  if (nonzero.empty()) return {Halting::draw, 0};
  if (nonzero.size() == 1) return {Halting::win, nonzero[0]};
  if (nonzero.size() == 2) {
    const std::size_t a = nonzero[0], b = nonzero[1];
    if (state[a] >= 2 && state[b] == 1) return {Halting::win, a};
    if (state[b] >= 2 && state[a] == 1) return {Halting::win, b};
  }
  return {Halting::transient, 0};
}

namespace {

double log_choose(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// P(exactly `survivors` of n alive nodes survive one round).
double survive_pmf(std::size_t n, std::size_t survivors, double p) {
  if (survivors > n) return 0.0;
  const double deaths = static_cast<double>(n - survivors);
  const double lived = static_cast<double>(survivors);
  double log_term = log_choose(n, survivors);
  if (deaths > 0) log_term += deaths * std::log1p(-p);
  if (lived > 0) log_term += lived * std::log(p);
  return std::exp(log_term);
}

}  // namespace

double transition_prob(std::span<const std::size_t> from, std::span<const std::size_t> to,
                       double p) {
  if (from.size() != to.size()) throw DomainError("state dimensions differ");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0, 1)");
  if (classify(from).kind != Halting::transient)
    throw DomainError("transitions are defined from transient states only");
  double prob = 1.0;
  for (std::size_t k = 0; k < from.size(); ++k) {
    if (to[k] > from[k]) return 0.0;
    prob *= survive_pmf(from[k], to[k], p);
  }
  return prob;
}

MarkovResult markov_success(std::span<const std::size_t> initial, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0, 1)");
  const std::size_t levels = initial.size();
  if (levels == 0 || std::all_of(initial.begin(), initial.end(), [](std::size_t c) { return c == 0; }))
    throw DomainError("initial state must be non-zero");

  // Mixed-radix indexing: a componentwise-smaller state has a smaller index,
  // so ascending index order visits every successor before its source.
  std::vector<std::size_t> radix(levels), stride(levels);
  std::size_t total_states = 1;
  for (std::size_t k = 0; k < levels; ++k) {
    radix[k] = initial[k] + 1;
    stride[k] = total_states;
    total_states *= radix[k];
  }

  const std::size_t max_count = *std::max_element(initial.begin(), initial.end());
  std::vector<std::vector<double>> pmf(max_count + 1);
  for (std::size_t n = 0; n <= max_count; ++n) {
    pmf[n].resize(n + 1);
    for (std::size_t s = 0; s <= n; ++s) pmf[n][s] = survive_pmf(n, s, p);
  }

  const std::size_t width = levels + 1;  // win per level, then draw
  std::vector<double> absorb(total_states * width, 0.0);
  std::vector<std::size_t> state(levels), sub(levels);

  for (std::size_t index = 0; index < total_states; ++index) {
    for (std::size_t k = 0, rest = index; k < levels; ++k) {
      state[k] = rest % radix[k];
      rest /= radix[k];
    }
    double* out = &absorb[index * width];
    const auto cls = classify(state);
    if (cls.kind == Halting::win) {
      out[cls.level] = 1.0;
      continue;
    }
    if (cls.kind == Halting::draw) {
      out[levels] = 1.0;
      continue;
    }

    double stay = 1.0;
    for (std::size_t k = 0; k < levels; ++k) stay *= pmf[state[k]][state[k]];

    // Enumerate every successor sub <= state, excluding state itself.
    std::fill(sub.begin(), sub.end(), 0);
    for (;;) {
      double prob = 1.0;
      std::size_t sub_index = 0;
      bool same = true;
      for (std::size_t k = 0; k < levels; ++k) {
        prob *= pmf[state[k]][sub[k]];
        sub_index += sub[k] * stride[k];
        same = same && sub[k] == state[k];
      }
      if (!same && prob > 0.0) {
        const double* next = &absorb[sub_index * width];
        for (std::size_t j = 0; j < width; ++j) out[j] += prob * next[j];
      }
      std::size_t k = 0;
      while (k < levels && sub[k] == state[k]) sub[k++] = 0;
      if (k == levels) break;
      ++sub[k];
    }
    for (std::size_t j = 0; j < width; ++j) out[j] /= 1.0 - stay;
  }

  MarkovResult result;
  const double* root = &absorb[(total_states - 1) * width];
  result.win_prob.assign(root, root + levels);
  result.draw_prob = root[levels];
  return result;
}

Interval wilson95(std::size_t successes, std::size_t trials) {
  if (trials == 0) throw DomainError("wilson95 needs at least one trial");
  if (successes > trials) throw DomainError("wilson95 successes exceed trials");
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (phat + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

}  // namespace beepvote::analysis
