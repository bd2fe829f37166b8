#include "stopwise/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "detail.hpp"
#include "stopwise/errors.hpp"

namespace stopwise {

namespace {

constexpr double kTolerance = 1e-12;

using Key = std::vector<std::int64_t>;
using KeyMap = std::unordered_map<Key, std::size_t, detail::KeyHash>;

Key make_key(int stage, int x, const std::vector<double>& mu, double s) {
  Key key;
  key.reserve(mu.size() + 3);
  key.push_back(stage);
  key.push_back(x);
  for (double m : mu) key.push_back(detail::quantize(m));
  key.push_back(detail::quantize(s));
  return key;
}

void check_probability_vector(const std::vector<double>& v, std::size_t n, const std::string& what) {
  if (v.size() != n) throw InvalidArgument(what + ": wrong length");
  double total = 0.0;
  for (double p : v) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument(what + ": negative or non-finite entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kTolerance) throw InvalidArgument(what + ": does not sum to 1");
}

}  // namespace

void PartiallyObservableModel::validate() const {
  const std::size_t n_x = nx();
  const std::size_t n_y = ny();
  if (n_x == 0) throw InvalidArgument("model: no observable states");
  if (n_y == 0) throw InvalidArgument("model: no hidden states");
  if (running_reward.size() != n_x) throw InvalidArgument("model: running_reward has wrong length");
  if (stopping_reward.size() != n_x) throw InvalidArgument("model: stopping_reward has wrong length");
  for (std::size_t i = 0; i < n_x; ++i) {
    if (!std::isfinite(running_reward[i]) || !std::isfinite(stopping_reward[i])) {
      throw InvalidArgument("model: rewards must be finite");
    }
  }
  check_probability_vector(prior, n_y, "model prior");
  if (x0 < 0 || static_cast<std::size_t>(x0) >= n_x) throw InvalidArgument("model: x0 out of range");
  if (q.size() != n_x) throw InvalidArgument("model: q has wrong first dimension");
  for (std::size_t x = 0; x < n_x; ++x) {
    if (q[x].size() != n_y) throw InvalidArgument("model: q has wrong second dimension");
    for (std::size_t y = 0; y < n_y; ++y) {
      if (q[x][y].size() != n_x) throw InvalidArgument("model: q has wrong third dimension");
      double total = 0.0;
      for (std::size_t x2 = 0; x2 < n_x; ++x2) {
        if (q[x][y][x2].size() != n_y) throw InvalidArgument("model: q has wrong fourth dimension");
        for (double p : q[x][y][x2]) {
          if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("model: q has a negative entry");
          total += p;
        }
      }
      if (std::abs(total - 1.0) > kTolerance) {
        throw InvalidArgument("model: q(.|x=" + std::to_string(x) + ",y=" + std::to_string(y) +
                              ") does not sum to 1");
      }
    }
  }
}

bool PartiallyObservableModel::strictly_negative_cost() const {
  return !running_reward.empty() &&
         *std::max_element(running_reward.begin(), running_reward.end()) < 0.0;
}

std::vector<std::vector<std::vector<double>>> marginal_kernel(const PartiallyObservableModel& model) {
  const std::size_t n_x = model.nx();
  const std::size_t n_y = model.ny();
  std::vector<std::vector<std::vector<double>>> qx(
      n_x, std::vector<std::vector<double>>(n_y, std::vector<double>(n_x, 0.0)));
  for (std::size_t x = 0; x < n_x; ++x) {
    for (std::size_t y = 0; y < n_y; ++y) {
      for (std::size_t x2 = 0; x2 < n_x; ++x2) {
        double sum = 0.0;
        for (double p : model.q[x][y][x2]) sum += p;
        qx[x][y][x2] = sum;
      }
    }
  }
  return qx;
}

std::vector<double> observation_law(const PartiallyObservableModel& model, int x,
                                    const std::vector<double>& mu) {
  std::vector<double> law(model.nx(), 0.0);
  for (std::size_t y = 0; y < model.ny(); ++y) {
    if (mu[y] == 0.0) continue;
    for (std::size_t x2 = 0; x2 < model.nx(); ++x2) {
      double sum = 0.0;
      for (double p : model.q[x][y][x2]) sum += p;
      law[x2] += mu[y] * sum;
    }
  }
  return law;
}

std::vector<double> filter_update(const PartiallyObservableModel& model, int x, int x_next,
                                  const std::vector<double>& mu) {
  std::vector<double> next(model.ny(), 0.0);
  double total = 0.0;
  for (std::size_t y = 0; y < model.ny(); ++y) {
    if (mu[y] == 0.0) continue;
    const auto& row = model.q[x][y][x_next];
    for (std::size_t y2 = 0; y2 < model.ny(); ++y2) next[y2] += mu[y] * row[y2];
  }
  for (double v : next) total += v;
  if (!(total > 0.0)) {
    throw ImpossibleObservation("impossible observation: x'=" + std::to_string(x_next) +
                                " from x=" + std::to_string(x));
  }
  for (double& v : next) v /= total;
  return next;
}

// ---------------------------------------------------------------------------

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const PartiallyObservableModel& model, const Utility& u, int horizon,
              std::size_t budget)
      : model_(model), u_(u), horizon_(horizon), budget_(budget) {}

  PolicyTree build(const AugState& root) {
    tree_.horizon = horizon_;
    visit(0, root);
    return std::move(tree_);
  }

 private:
  std::size_t visit(int stage, const AugState& state) {
    Key key = make_key(stage, state.x, state.mu, state.s);
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    if (tree_.nodes.size() >= budget_) {
      throw BudgetExceeded("value_iteration: reachable tree exceeds node budget of " +
                           std::to_string(budget_));
    }
    const std::size_t id = tree_.nodes.size();
    index_.emplace(std::move(key), id);
    tree_.nodes.emplace_back();
    {
      PolicyNode& node = tree_.nodes[id];
      node.stage = stage;
      node.state = state;
      node.stop_value = u_(model_.stopping_reward[state.x] + state.s);
    }

    if (stage == horizon_) {
      PolicyNode& node = tree_.nodes[id];
      node.stop = true;
      node.value = node.stop_value;
      return id;
    }

    const std::vector<double> law = observation_law(model_, state.x, state.mu);
    const double s_next = state.s + model_.running_reward[state.x];
    std::vector<PolicyChild> children;
    double continuation = 0.0;
    for (std::size_t x2 = 0; x2 < law.size(); ++x2) {
      if (law[x2] <= 0.0) continue;
      AugState child{static_cast<int>(x2), filter_update(model_, state.x, static_cast<int>(x2), state.mu),
                     s_next};
      const std::size_t cid = visit(stage + 1, child);
      continuation += law[x2] * tree_.nodes[cid].value;
      children.push_back({static_cast<int>(x2), law[x2], cid});
    }

    PolicyNode& node = tree_.nodes[id];
    node.children = std::move(children);
    node.continuation_value = continuation;
    node.stop = node.stop_value >= continuation;
    node.value = node.stop ? node.stop_value : continuation;
    return id;
  }

  const PartiallyObservableModel& model_;
  const Utility& u_;
  int horizon_;
  std::size_t budget_;
  PolicyTree tree_;
  KeyMap index_;
};

}  // namespace

SolveResult value_iteration_from(const PartiallyObservableModel& model, const Utility& u,
                                 int horizon, const AugState& root, const SolveOptions& options) {
  model.validate();
  if (horizon < 0) throw InvalidArgument("value_iteration: horizon must be >= 0");
  if (root.x < 0 || static_cast<std::size_t>(root.x) >= model.nx()) {
    throw InvalidArgument("value_iteration: root state out of range");
  }
  check_probability_vector(root.mu, model.ny(), "value_iteration root belief");

  SolveResult result;
  result.policy = TreeBuilder(model, u, horizon, options.node_budget).build(root);

  ValueReport& report = result.report;
  report.horizon = horizon;
  report.value = result.policy.root().value;
  report.node_count = result.policy.nodes.size();
  report.integrability_bound = check_integrability(model, horizon);
  report.per_stage.assign(horizon + 1, {});
  for (const PolicyNode& node : result.policy.nodes) report.per_stage[node.stage].push_back(node.value);
  return result;
}

SolveResult value_iteration(const PartiallyObservableModel& model, const Utility& u, int horizon,
                            const SolveOptions& options) {
  model.validate();
  return value_iteration_from(model, u, horizon, AugState{model.x0, model.prior, 0.0}, options);
}

// ---------------------------------------------------------------------------

struct ValueEvaluator::Impl {
  const PartiallyObservableModel& model;
  Utility u;
  std::size_t budget;
  std::unordered_map<Key, double, detail::KeyHash> memo;

  double value(int remaining, const AugState& state) {
    const double stop = u(model.stopping_reward[state.x] + state.s);
    if (remaining == 0) return stop;
    Key key = make_key(remaining, state.x, state.mu, state.s);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const double cont = continuation(remaining, state);
    const double v = stop >= cont ? stop : cont;
    if (memo.size() >= budget) {
      throw BudgetExceeded("ValueEvaluator: memo exceeds node budget of " + std::to_string(budget));
    }
    memo.emplace(std::move(key), v);
    return v;
  }

  double continuation(int remaining, const AugState& state) {
    const std::vector<double> law = observation_law(model, state.x, state.mu);
    const double s_next = state.s + model.running_reward[state.x];
    double total = 0.0;
    for (std::size_t x2 = 0; x2 < law.size(); ++x2) {
      if (law[x2] <= 0.0) continue;
      const int xi = static_cast<int>(x2);
      total += law[x2] * value(remaining - 1, AugState{xi, filter_update(model, state.x, xi, state.mu), s_next});
    }
    return total;
  }
};

ValueEvaluator::ValueEvaluator(const PartiallyObservableModel& model, Utility u,
                               std::size_t node_budget)
    : impl_(std::make_shared<Impl>(Impl{model, u, node_budget, {}})) {
  model.validate();
}

double ValueEvaluator::value(int remaining, const AugState& state) {
  if (remaining < 0) throw InvalidArgument("ValueEvaluator: remaining steps must be >= 0");
  return impl_->value(remaining, state);
}

double ValueEvaluator::stop_value(const AugState& state) const {
  return impl_->u(impl_->model.stopping_reward[state.x] + state.s);
}

double ValueEvaluator::continuation_value(int remaining, const AugState& state) {
  if (remaining < 1) throw InvalidArgument("ValueEvaluator: continuation needs remaining >= 1");
  return impl_->continuation(remaining, state);
}

std::size_t ValueEvaluator::memo_size() const noexcept { return impl_->memo.size(); }

// ---------------------------------------------------------------------------

HTable exp_value_iteration(const PartiallyObservableModel& model, double gamma, int horizon,
                           const SolveOptions& options) {
  model.validate();
  if (!(gamma < 0.0)) throw InvalidArgument("exp_value_iteration: gamma must be negative");
  if (horizon < 0) throw InvalidArgument("exp_value_iteration: horizon must be >= 0");

  HTable table;
  table.gamma = gamma;
  table.horizon = horizon;
  KeyMap index;

  auto visit = [&](auto&& self, int stage, int x, const std::vector<double>& mu) -> std::size_t {
    Key key = make_key(stage, x, mu, 0.0);
    if (auto it = index.find(key); it != index.end()) return it->second;
    if (table.nodes.size() >= options.node_budget) {
      throw BudgetExceeded("exp_value_iteration: reachable tree exceeds node budget");
    }
    const std::size_t id = table.nodes.size();
    index.emplace(std::move(key), id);
    table.nodes.push_back(HNode{stage, x, mu, 0.0, true});

    const double stop = std::exp(gamma * model.stopping_reward[x]) / gamma;
    if (stage == horizon) {
      table.nodes[id].h = stop;
      return id;
    }
    const std::vector<double> law = observation_law(model, x, mu);
    double expectation = 0.0;
    for (std::size_t x2 = 0; x2 < law.size(); ++x2) {
      if (law[x2] <= 0.0) continue;
      const int xi = static_cast<int>(x2);
      const std::size_t cid = self(self, stage + 1, xi, filter_update(model, x, xi, mu));
      expectation += law[x2] * table.nodes[cid].h;
    }
    const double cont = std::exp(gamma * model.running_reward[x]) * expectation;
    HNode& node = table.nodes[id];
    node.stop = stop >= cont;
    node.h = node.stop ? stop : cont;
    return id;
  };
  visit(visit, 0, model.x0, model.prior);
  return table;
}

int extract_stopping_time(const PolicyTree& policy, const std::vector<int>& history) {
  if (policy.nodes.empty()) throw InvalidArgument("extract_stopping_time: empty policy");
  if (history.empty() || history.front() != policy.root().state.x) {
    throw InvalidArgument("extract_stopping_time: history must start at the root state");
  }
  std::size_t id = 0;
  for (int n = 0;; ++n) {
    const PolicyNode& node = policy.nodes[id];
    if (node.stop || n >= policy.horizon) return n;
    if (static_cast<std::size_t>(n + 1) >= history.size()) {
      throw InvalidArgument("extract_stopping_time: history ends before the policy stops");
    }
    const int x_next = history[n + 1];
    auto it = std::find_if(node.children.begin(), node.children.end(),
                           [&](const PolicyChild& c) { return c.x == x_next; });
    if (it == node.children.end()) {
      throw InvalidArgument("extract_stopping_time: history leaves the reachable tree at stage " +
                            std::to_string(n + 1));
    }
    id = it->node;
  }
}

double check_integrability(const PartiallyObservableModel& model, int horizon) {
  double c_plus = 0.0;
  double g_plus = 0.0;
  for (double c : model.running_reward) c_plus = std::max(c_plus, c);
  for (double g : model.stopping_reward) g_plus = std::max(g_plus, g);
  return horizon * c_plus + g_plus;
}

HorizonLimit horizon_limit(const PartiallyObservableModel& model, const Utility& u, double tol,
                           int max_horizon, int depth, const SolveOptions& options) {
  if (!(tol > 0.0)) throw InvalidArgument("horizon_limit: tol must be positive");
  if (max_horizon < 1) throw InvalidArgument("horizon_limit: max_horizon must be >= 1");
  if (depth < 0) throw InvalidArgument("horizon_limit: depth must be >= 0");
  ValueEvaluator evaluator(model, u, options.node_budget);
  const AugState root{model.x0, model.prior, 0.0};

  HorizonLimit out;
  for (int n = 1; n <= max_horizon; ++n) {
    // Nodes within min(depth, n-1) steps: V_{rem} from the (n-1)-horizon
    // problem against V_{rem+1} at the same state.
    const SolveResult shallow = value_iteration_from(model, u, std::min(depth, n - 1), root, options);
    double increment = 0.0;
    for (const PolicyNode& node : shallow.policy.nodes) {
      const int remaining = n - 1 - node.stage;
      increment = std::max(increment, std::abs(evaluator.value(remaining + 1, node.state) -
                                               evaluator.value(remaining, node.state)));
    }
    out.value = evaluator.value(n, root);
    out.horizon = n;
    out.last_increment = increment;
    if (increment < tol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace stopwise
