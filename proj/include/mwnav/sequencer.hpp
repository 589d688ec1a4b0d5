#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "mwnav/geometry.hpp"
#include "mwnav/world.hpp"

namespace mwnav {

enum class SequencerMethod { GREEDY, BCP, PROBABILISTIC };

inline const char* to_string(SequencerMethod m) {
  switch (m) {
    case SequencerMethod::GREEDY: return "greedy";
    case SequencerMethod::BCP: return "bcp";
    case SequencerMethod::PROBABILISTIC: return "probabilistic";
  }
  return "?";
}

/// Retained fraction of the permutation search space, in (0, 1].
struct SearchFraction {
  double gamma = 1.0;
};

struct SequencerResult {
  Vec2 chosen;
  double tour_cost = 0.0;
  std::uint64_t permutations_evaluated = 0;
  double elapsed = 0.0;  // seconds
};

/// Sum of Euclidean legs over consecutive points; 0 for length <= 1.
inline double dist_metric(const std::vector<Vec2>& tour) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < tour.size(); ++i)
    total += euclidean_dist(tour[i], tour[i + 1]);
  return total;
}

namespace detail {

inline double now_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

inline std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Decode permutation `code` in [0, m!) of {0..m-1} via the factorial
/// number system, writing into `out`.
inline void decode_permutation(std::uint64_t code, std::size_t m, std::vector<int>& out) {
  static thread_local std::vector<int> pool;
  pool.resize(m);
  std::iota(pool.begin(), pool.end(), 0);
  out.resize(m);
  std::uint64_t f = factorial(m);
  for (std::size_t i = 0; i < m; ++i) {
    f /= (m - i);
    const std::size_t k = static_cast<std::size_t>(code / f);
    code %= f;
    out[i] = pool[k];
    pool.erase(pool.begin() + static_cast<long>(k));
  }
}

constexpr std::size_t kMaxFreeIntermediates = 10;  // 10! tours streamed

inline void check_enumeration_budget(std::size_t m) {
  if (m > kMaxFreeIntermediates)
    throw Error("sequencer: enumeration budget exceeded (" + std::to_string(m) +
                " free intermediates, cap " + std::to_string(kMaxFreeIntermediates) + ")");
}

}  // namespace detail

/// Nearest pending waypoint; ties broken by lowest index in `pending`.
inline SequencerResult greedy_next(const Vec2& current, const std::vector<Vec2>& pending) {
  if (pending.empty()) throw Error("greedy_next: empty pending list");
  const double t0 = detail::now_seconds();
  SequencerResult res;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : pending) {
    const double d = euclidean_dist(current, m);
    if (d < best) {
      best = d;
      res.chosen = m;
    }
  }
  res.tour_cost = best;
  res.permutations_evaluated = pending.size();
  res.elapsed = detail::now_seconds() - t0;
  return res;
}

/// Exhaustive best-cost search over tours [current, perm(intermediates), goal].
/// Permutations are streamed in lexicographic order; the first minimizer wins.
inline SequencerResult bcp_next(const Vec2& current, const std::vector<Vec2>& intermediates,
                                const Vec2& goal) {
  if (intermediates.empty()) throw Error("bcp_next: empty pending list");
  const std::size_t m = intermediates.size();
  detail::check_enumeration_budget(m);
  const double t0 = detail::now_seconds();

  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  SequencerResult res;
  res.tour_cost = std::numeric_limits<double>::infinity();
  std::uint64_t count = 0;
  do {
    double cost = euclidean_dist(current, intermediates[perm[0]]);
    for (std::size_t i = 0; i + 1 < m; ++i)
      cost += euclidean_dist(intermediates[perm[i]], intermediates[perm[i + 1]]);
    cost += euclidean_dist(intermediates[perm[m - 1]], goal);
    ++count;
    if (cost < res.tour_cost) {
      res.tour_cost = cost;
      res.chosen = intermediates[perm[0]];
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  res.permutations_evaluated = count;
  res.elapsed = detail::now_seconds() - t0;
  return res;
}

/// BCP on a shuffled fractional slice of the permutation space. Keeps
/// max(1, ceil(gamma * m!)) tours; deterministic for a fixed seed.
inline SequencerResult probabilistic_next(const Vec2& current,
                                          const std::vector<Vec2>& intermediates,
                                          const Vec2& goal, SearchFraction gamma,
                                          std::uint64_t seed) {
  if (intermediates.empty()) throw Error("probabilistic_next: empty pending list");
  if (!(gamma.gamma > 0.0 && gamma.gamma <= 1.0))
    throw Error("probabilistic_next: gamma must lie in (0, 1]");
  const std::size_t m = intermediates.size();
  detail::check_enumeration_budget(m);
  const double t0 = detail::now_seconds();

  const std::uint64_t total = detail::factorial(m);
  const std::uint64_t kept =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(gamma.gamma * static_cast<double>(total))));

  // Shuffle permutation codes rather than materialized tours; memory stays at
  // one word per code. Only the kept prefix is consumed, so the partial
  // Fisher-Yates stops there: the prefix has the same uniform
  // without-replacement distribution as a full shuffle's.
  std::vector<std::uint32_t> codes(total);
  std::iota(codes.begin(), codes.end(), 0u);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < kept && i + 1 < total; ++i) {
    const std::size_t j = static_cast<std::size_t>(uniform_u64(rng, i, total - 1));
    std::swap(codes[i], codes[j]);
  }

  // Walk the permutation space once in lexicographic order and cost only the
  // kept codes: cheaper than decoding each kept code from its factoradic.
  std::sort(codes.begin(), codes.begin() + static_cast<std::ptrdiff_t>(kept));
  SequencerResult res;
  res.tour_cost = std::numeric_limits<double>::infinity();
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t code = 0, next_kept = 0;
  do {
    if (next_kept < kept && codes[next_kept] == code) {
      ++next_kept;
      double cost = euclidean_dist(current, intermediates[perm[0]]);
      for (std::size_t i = 0; i + 1 < m; ++i)
        cost += euclidean_dist(intermediates[perm[i]], intermediates[perm[i + 1]]);
      cost += euclidean_dist(intermediates[perm[m - 1]], goal);
      if (cost < res.tour_cost) {
        res.tour_cost = cost;
        res.chosen = intermediates[perm[0]];
      }
    }
    ++code;
  } while (next_kept < kept && std::next_permutation(perm.begin(), perm.end()));
  res.permutations_evaluated = kept;
  res.elapsed = detail::now_seconds() - t0;
  return res;
}

struct TourResult {
  double cost = 0.0;
  double elapsed = 0.0;                     // sequencing time only
  std::uint64_t permutations_evaluated = 0; // summed over steps
};

/// Run a method to completion as a full tour. The permutation methods plan a
/// complete tour up front and walking that plan realizes exactly its cost, so
/// their realized tour cost is the first call's tour_cost. Greedy has no
/// full-tour plan: it chains nearest-neighbor steps, never considering the
/// goal while intermediates are pending.
inline TourResult run_full_tour(const Vec2& start, std::vector<Vec2> intermediates,
                                const Vec2& goal, SequencerMethod method, SearchFraction gamma,
                                std::uint64_t seed) {
  TourResult out;
  Vec2 current = start;
  std::mt19937_64 step_seeds(seed);
  if (method != SequencerMethod::GREEDY) {
    const SequencerResult r =
        method == SequencerMethod::BCP
            ? bcp_next(current, intermediates, goal)
            : probabilistic_next(current, intermediates, goal, gamma, step_seeds());
    out.cost = r.tour_cost;
    out.elapsed = r.elapsed;
    out.permutations_evaluated = r.permutations_evaluated;
    return out;
  }
  while (!intermediates.empty()) {
    SequencerResult r;
    switch (method) {
      case SequencerMethod::GREEDY:
        r = greedy_next(current, intermediates);
        break;
      case SequencerMethod::BCP:
        r = bcp_next(current, intermediates, goal);
        break;
      case SequencerMethod::PROBABILISTIC:
        r = probabilistic_next(current, intermediates, goal, gamma, step_seeds());
        break;
    }
    out.elapsed += r.elapsed;
    out.permutations_evaluated += r.permutations_evaluated;
    out.cost += euclidean_dist(current, r.chosen);
    current = r.chosen;
    auto it = std::find(intermediates.begin(), intermediates.end(), r.chosen);
    intermediates.erase(it);
  }
  out.cost += euclidean_dist(current, goal);
  return out;
}

struct AccuracyTrialRow {
  std::uint64_t map_seed = 0;
  SequencerMethod method = SequencerMethod::GREEDY;
  double gamma = 1.0;
  int repeat = 0;
  double tour_cost = 0.0;
  double best_cost = 0.0;
  bool match = false;
  double elapsed_s = 0.0;
  std::uint64_t perms_evaluated = 0;
};

struct AccuracyStats {
  double accuracy = 0.0;       // fraction of trials matching the BCP optimum
  double mean_elapsed = 0.0;   // seconds per trial
  double mean_perms = 0.0;
  std::vector<AccuracyTrialRow> rows;
};

constexpr double kCostMatchTol = 1e-9;

/// Fraction of full tours whose realized cost equals the BCP optimum.
inline AccuracyStats accuracy_trial(const std::vector<WorldMap>& maps, SequencerMethod method,
                                    SearchFraction gamma, int repeats, std::uint64_t seed) {
  AccuracyStats stats;
  std::size_t matches = 0, trials = 0;
  std::mt19937_64 trial_seeds(seed);
  for (const auto& map : maps) {
    std::vector<Vec2> inter;
    for (const auto& w : map.waypoints) inter.push_back(w.center());
    const Vec2 start = map.start.center();
    const Vec2 goal = map.goal.center();
    const TourResult best = run_full_tour(start, inter, goal, SequencerMethod::BCP, {1.0}, 0);
    const int reps = method == SequencerMethod::PROBABILISTIC ? repeats : 1;
    for (int r = 0; r < reps; ++r) {
      const TourResult t = run_full_tour(start, inter, goal, method, gamma, trial_seeds());
      AccuracyTrialRow row;
      row.map_seed = map.seed;
      row.method = method;
      row.gamma = gamma.gamma;
      row.repeat = r;
      row.tour_cost = t.cost;
      row.best_cost = best.cost;
      row.match = std::abs(t.cost - best.cost) <= kCostMatchTol;
      row.elapsed_s = t.elapsed;
      row.perms_evaluated = t.permutations_evaluated;
      stats.rows.push_back(row);
      stats.mean_elapsed += t.elapsed;
      stats.mean_perms += static_cast<double>(t.permutations_evaluated);
      ++trials;
      if (row.match) ++matches;
    }
  }
  if (trials > 0) {
    stats.accuracy = static_cast<double>(matches) / static_cast<double>(trials);
    stats.mean_elapsed /= static_cast<double>(trials);
    stats.mean_perms /= static_cast<double>(trials);
  }
  return stats;
}

}  // namespace mwnav
