#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "stopwise/utility.hpp"

namespace stopwise {

/// Jointly Markov process (X_n, Y_n) on finite spaces. X is observed, Y is
/// hidden. Rewards: running c(x) per continued step, terminal g(x) on stop.
struct PartiallyObservableModel {
  std::vector<std::string> observable_labels;  // EX
  std::vector<std::string> hidden_labels;      // EY
  /// q[x][y][x'][y'] = P(X'=x', Y'=y' | X=x, Y=y).
  std::vector<std::vector<std::vector<std::vector<double>>>> q;
  std::vector<double> running_reward;   // c(x)
  std::vector<double> stopping_reward;  // g(x)
  std::vector<double> prior;            // Q0 over EY
  int x0 = 0;

  std::size_t nx() const noexcept { return observable_labels.size(); }
  std::size_t ny() const noexcept { return hidden_labels.size(); }

  /// Throws InvalidArgument on shape or normalization problems.
  void validate() const;

  /// sup_x c(x) < 0.
  bool strictly_negative_cost() const;
};

/// q^X(x'|x,y) = sum_{y'} q(x',y'|x,y), indexed [x][y][x'].
std::vector<std::vector<std::vector<double>>> marginal_kernel(const PartiallyObservableModel& model);

/// Q^X(x'|x,mu) = sum_y mu(y) q^X(x'|x,y).
std::vector<double> observation_law(const PartiallyObservableModel& model, int x,
                                    const std::vector<double>& mu);

/// Bayes filter: mu'(y') proportional to sum_y q(x',y'|x,y) mu(y).
/// Throws ImpossibleObservation when x' has zero probability.
std::vector<double> filter_update(const PartiallyObservableModel& model, int x, int x_next,
                                  const std::vector<double>& mu);

/// Augmented state (x, mu, s); s is the accumulated running reward.
struct AugState {
  int x = 0;
  std::vector<double> mu;
  double s = 0.0;
};

struct PolicyChild {
  int x = 0;
  double prob = 0.0;
  std::size_t node = 0;
};

struct PolicyNode {
  int stage = 0;
  AugState state;
  bool stop = true;
  double stop_value = 0.0;
  /// -inf at the horizon, where stopping is forced.
  double continuation_value = -std::numeric_limits<double>::infinity();
  double value = 0.0;
  std::vector<PolicyChild> children;  // empty at the horizon
};

/// Optimal decisions on the reachable history DAG from (x0, Q0, 0). Node 0
/// is the root. Histories reaching the same (stage, x, mu, s) share a node.
struct PolicyTree {
  int horizon = 0;
  std::vector<PolicyNode> nodes;

  const PolicyNode& root() const { return nodes.front(); }
};

struct ValueReport {
  double value = 0.0;  // V_N(x0, Q0, 0)
  int horizon = 0;
  /// per_stage[n] lists V at every reachable node of stage n (remaining N-n).
  std::vector<std::vector<double>> per_stage;
  double integrability_bound = 0.0;
  std::size_t node_count = 0;
};

inline constexpr std::size_t kDefaultNodeBudget = 2'000'000;

struct SolveOptions {
  std::size_t node_budget = kDefaultNodeBudget;
};

struct SolveResult {
  ValueReport report;
  PolicyTree policy;
};

/// Backward induction V_n = max{U(g(x)+s), E V_{n-1}(x', Phi, s + c(x))}.
/// Ties resolve to stop.
SolveResult value_iteration(const PartiallyObservableModel& model, const Utility& u, int horizon,
                            const SolveOptions& options = {});

/// Same recursion rooted at an arbitrary augmented state.
SolveResult value_iteration_from(const PartiallyObservableModel& model, const Utility& u,
                                 int horizon, const AugState& root,
                                 const SolveOptions& options = {});

/// Memoized V_n(x, mu, s) for arbitrary remaining steps n; shares work
/// across queries. Not thread-safe.
class ValueEvaluator {
 public:
  ValueEvaluator(const PartiallyObservableModel& model, Utility u,
                 std::size_t node_budget = kDefaultNodeBudget);

  double value(int remaining, const AugState& state);
  double stop_value(const AugState& state) const;
  double continuation_value(int remaining, const AugState& state);
  std::size_t memo_size() const noexcept;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Exponential-utility reduction V_n(x, mu, s) = e^{gamma s} h_n(x, mu).
struct HNode {
  int stage = 0;
  int x = 0;
  std::vector<double> mu;
  double h = 0.0;
  bool stop = true;
};

struct HTable {
  double gamma = -1.0;
  int horizon = 0;
  std::vector<HNode> nodes;  // node 0 is (x0, Q0) at stage 0

  double root_value() const { return nodes.front().h; }
};

HTable exp_value_iteration(const PartiallyObservableModel& model, double gamma, int horizon,
                           const SolveOptions& options = {});

/// First stage at which the policy stops along `history` (x_0, x_1, ...),
/// capped at the horizon. Throws InvalidArgument when the history leaves
/// the reachable tree or ends before the policy stops.
int extract_stopping_time(const PolicyTree& policy, const std::vector<int>& history);

/// N max(c+) + max(g+).
double check_integrability(const PartiallyObservableModel& model, int horizon);

struct HorizonLimit {
  double value = 0.0;
  int horizon = 0;
  /// sup of |V_{N-k} - V_{N-1-k}| over nodes reachable in k <= depth steps.
  double last_increment = 0.0;
  bool converged = false;
};

/// Increases the horizon until the sup-norm increment on nodes within
/// `depth` steps of the root drops below tol, or max_horizon is reached.
HorizonLimit horizon_limit(const PartiallyObservableModel& model, const Utility& u, double tol,
                           int max_horizon, int depth = 2, const SolveOptions& options = {});

}  // namespace stopwise
