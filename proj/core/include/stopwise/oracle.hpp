#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "stopwise/house_selling.hpp"
#include "stopwise/stopping.hpp"
#include "stopwise/utility.hpp"

namespace stopwise {

/// An adapted stopping rule: observation history -> stop. Histories are
/// observation indices after the initial state (x_1, ..., x_n); the empty
/// history is stage 0.
using History = std::vector<int>;
using StoppingRule = std::map<History, bool>;

struct BruteForceReport {
  double value = 0.0;
  StoppingRule rule;
  /// 2^(decision nodes) when every rule was enumerated; 0 when the optimum
  /// was taken by exact decomposition over the history tree.
  std::uint64_t rules_examined = 0;
  bool exhaustive = false;
  /// Positive-probability observation histories of full length N.
  std::size_t paths = 0;
};

struct BruteForceOptions {
  std::size_t max_paths = 100'000;
  /// Enumerate every rule when there are at most this many decision nodes.
  int max_exhaustive_nodes = 16;
};

/// Maximum over adapted stopping rules of E U(g(X_tau) + sum_{k<tau} c(X_k)),
/// with path probabilities summed over explicit hidden-state paths.
BruteForceReport brute_force_value(const PartiallyObservableModel& model, const Utility& u, int horizon,
                                   const BruteForceOptions& options = {});

/// Exact value of a given rule on the finite model. Histories missing from
/// the rule continue.
double rule_value(const PartiallyObservableModel& model, const Utility& u, int horizon,
                  const StoppingRule& rule);

/// House selling over finite offer families: maximum over rules of
/// E U(X_tau - tau c), path probabilities from the prior in closed form.
/// With `forbid_stop_at_zero` the rule must continue at stage 0 (this gives
/// d_N).
BruteForceReport brute_force_house(const HouseModel& model, const BruteForceOptions& options = {},
                                   bool forbid_stop_at_zero = false);

/// Exact value of a given rule on a finite house model; histories are offer
/// atom indices of X_1..X_n.
double rule_value(const HouseModel& model, const StoppingRule& rule);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
};

struct McOptions {
  std::uint64_t samples = 100'000;
  std::uint64_t seed = 0;
  /// 0 selects the hardware concurrency.
  int threads = 0;
  /// Samples per RNG substream; results do not depend on the thread count.
  std::uint64_t chunk = 4096;
  /// Infinite-horizon runs abort a path after this many stages.
  int max_stages = 1'000'000;
};

/// Simulates the reservation rule of `solver` under the joint law of
/// (theta, offers), drawing offers sequentially from the predictive law.
McEstimate monte_carlo_eval(ReservationSolver& solver, const McOptions& options);

/// Simulates `policy` on the finite model: y_0 ~ Q0, then (x', y') ~ q.
McEstimate monte_carlo_eval(const PartiallyObservableModel& model, const Utility& u, const PolicyTree& policy,
                            const McOptions& options);

}  // namespace stopwise
