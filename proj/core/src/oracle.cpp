#include "stopwise/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "stopwise/errors.hpp"

namespace stopwise {

namespace {

/// One history node: probability of the observation prefix, stop reward
/// (probability-weighted utility) and children.
struct HNodeRaw {
  History history;
  double prob = 0.0;
  double stop_payoff = 0.0;  // prob * U(...)
  std::vector<std::size_t> children;
};

struct HistoryTree {
  std::vector<HNodeRaw> nodes;  // node 0 is the empty history
  std::size_t paths = 0;
  int horizon = 0;
};

double evaluate(const HistoryTree& tree, std::size_t id, const std::function<bool(std::size_t)>& stop) {
  const HNodeRaw& node = tree.nodes[id];
  if (static_cast<int>(node.history.size()) == tree.horizon || stop(id)) return node.stop_payoff;
  double total = 0.0;
  for (std::size_t c : node.children) total += evaluate(tree, c, stop);
  return total;
}

BruteForceReport solve_tree(const HistoryTree& tree, const BruteForceOptions& options, bool forbid_root_stop) {
  BruteForceReport report;
  report.paths = tree.paths;

  std::vector<std::size_t> decisions;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (static_cast<int>(tree.nodes[i].history.size()) < tree.horizon) decisions.push_back(i);
  }

  if (static_cast<int>(decisions.size()) <= options.max_exhaustive_nodes) {
    report.exhaustive = true;
    const std::uint64_t rules = std::uint64_t{1} << decisions.size();
    report.rules_examined = rules;
    std::vector<char> stop_flag(tree.nodes.size(), 0);
    double best = -std::numeric_limits<double>::infinity();
    std::uint64_t best_mask = 0;
    for (std::uint64_t mask = 0; mask < rules; ++mask) {
      for (std::size_t j = 0; j < decisions.size(); ++j) stop_flag[decisions[j]] = (mask >> j) & 1U;
      if (forbid_root_stop && !decisions.empty() && stop_flag[0]) continue;
      const double v = evaluate(tree, 0, [&](std::size_t id) { return stop_flag[id] != 0; });
      if (v > best) {
        best = v;
        best_mask = mask;
      }
    }
    report.value = best;
    for (std::size_t j = 0; j < decisions.size(); ++j) {
      report.rule[tree.nodes[decisions[j]].history] = (best_mask >> j) & 1U;
    }
    return report;
  }

  // Exact decomposition: the best rule below a history does not depend on
  // choices elsewhere, and path probabilities enter linearly.
  std::vector<double> best(tree.nodes.size(), 0.0);
  for (std::size_t i = tree.nodes.size(); i-- > 0;) {
    const HNodeRaw& node = tree.nodes[i];
    if (static_cast<int>(node.history.size()) == tree.horizon) {
      best[i] = node.stop_payoff;
      continue;
    }
    double cont = 0.0;
    for (std::size_t c : node.children) cont += best[c];
    const bool stop = !(forbid_root_stop && i == 0) && node.stop_payoff >= cont;
    best[i] = stop ? node.stop_payoff : cont;
    report.rule[node.history] = stop;
  }
  report.value = best[0];
  return report;
}

void check_paths(std::size_t paths, const BruteForceOptions& options) {
  if (paths > options.max_paths) {
    throw BudgetExceeded("brute force: more than " + std::to_string(options.max_paths) + " observation paths");
  }
}

// ---------------------------------------------------------------------------
// Finite partially observable model

/// P(X_1..X_n = history | X_0 = x0), summed over every hidden path.
double joint_probability(const PartiallyObservableModel& model, const History& history) {
  const std::size_t ny = model.ny();
  const std::size_t n = history.size();
  std::vector<std::size_t> ys(n + 1, 0);
  double total = 0.0;
  for (;;) {
    double p = model.prior[ys[0]];
    int x = model.x0;
    for (std::size_t k = 0; k < n && p > 0.0; ++k) {
      p *= model.q[x][ys[k]][history[k]][ys[k + 1]];
      x = history[k];
    }
    total += p;
    std::size_t j = 0;
    while (j <= n && ++ys[j] == ny) ys[j++] = 0;
    if (j > n) break;
  }
  return total;
}

HistoryTree build_tree(const PartiallyObservableModel& model, const Utility& u, int horizon,
                       const BruteForceOptions& options) {
  HistoryTree tree;
  tree.horizon = horizon;
  tree.nodes.push_back({{}, 1.0, u(model.stopping_reward[model.x0]), {}});
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (static_cast<int>(tree.nodes[i].history.size()) == horizon) {
      check_paths(++tree.paths, options);
      continue;
    }
    for (std::size_t x2 = 0; x2 < model.nx(); ++x2) {
      History h = tree.nodes[i].history;
      h.push_back(static_cast<int>(x2));
      const double p = joint_probability(model, h);
      if (!(p > 0.0)) continue;
      double s = model.running_reward[model.x0];
      for (std::size_t k = 0; k + 1 < h.size(); ++k) s += model.running_reward[h[k]];
      const double payoff = p * u(model.stopping_reward[x2] + s);
      tree.nodes[i].children.push_back(tree.nodes.size());
      tree.nodes.push_back({std::move(h), p, payoff, {}});
    }
  }
  return tree;
}

// ---------------------------------------------------------------------------
// House selling

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

/// P(X_1..X_n = atoms[history]) under the prior.
double house_probability(const HouseModel& model, const std::vector<double>& atoms, const History& history) {
  if (const auto* b = std::get_if<BetaBernoulli>(&model.prior)) {
    double ones = 0.0;
    for (int k : history) ones += atoms[k];
    const double zeros = static_cast<double>(history.size()) - ones;
    return std::exp(log_beta(b->alpha + ones, b->beta + zeros) - log_beta(b->alpha, b->beta));
  }
  const auto& d = std::get<DiscretePosterior>(model.prior);
  double total = 0.0;
  for (std::size_t i = 0; i < d.theta().size(); ++i) {
    double p = d.weights()[i];
    for (int k : history) p *= d.likelihood_at(i, atoms[k]);
    total += p;
  }
  return total;
}

HistoryTree build_house_tree(const HouseModel& model, const BruteForceOptions& options) {
  model.validate();
  if (!has_finite_support(model.offers)) throw InvalidArgument("brute_force_house: needs a finite offer family");
  const std::vector<double> atoms = offer_support(model.offers);
  const int horizon = model.finite_horizon();
  const Utility& u = model.utility;

  HistoryTree tree;
  tree.horizon = horizon;
  tree.nodes.push_back({{}, 1.0, u(model.initial_offer), {}});
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (static_cast<int>(tree.nodes[i].history.size()) == horizon) {
      check_paths(++tree.paths, options);
      continue;
    }
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      History h = tree.nodes[i].history;
      h.push_back(static_cast<int>(k));
      const double p = house_probability(model, atoms, h);
      if (!(p > 0.0)) continue;
      const double payoff = p * u(atoms[k] - static_cast<double>(h.size()) * model.cost);
      tree.nodes[i].children.push_back(tree.nodes.size());
      tree.nodes.push_back({std::move(h), p, payoff, {}});
    }
  }
  return tree;
}

double tree_rule_value(const HistoryTree& tree, const StoppingRule& rule) {
  return evaluate(tree, 0, [&](std::size_t id) {
    auto it = rule.find(tree.nodes[id].history);
    return it != rule.end() && it->second;
  });
}

}  // namespace

BruteForceReport brute_force_value(const PartiallyObservableModel& model, const Utility& u, int horizon,
                                   const BruteForceOptions& options) {
  model.validate();
  if (horizon < 0) throw InvalidArgument("brute_force_value: horizon must be >= 0");
  return solve_tree(build_tree(model, u, horizon, options), options, false);
}

double rule_value(const PartiallyObservableModel& model, const Utility& u, int horizon, const StoppingRule& rule) {
  model.validate();
  return tree_rule_value(build_tree(model, u, horizon, {}), rule);
}

BruteForceReport brute_force_house(const HouseModel& model, const BruteForceOptions& options,
                                   bool forbid_stop_at_zero) {
  const HistoryTree tree = build_house_tree(model, options);
  if (forbid_stop_at_zero && tree.horizon == 0) {
    throw InvalidArgument("brute_force_house: cannot continue at stage 0 with horizon 0");
  }
  return solve_tree(tree, options, forbid_stop_at_zero);
}

double rule_value(const HouseModel& model, const StoppingRule& rule) {
  return tree_rule_value(build_house_tree(model, {}), rule);
}

}  // namespace stopwise
