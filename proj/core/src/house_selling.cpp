#include "stopwise/house_selling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "house_impl.hpp"
#include "stopwise/quadrature.hpp"
#include "stopwise/errors.hpp"

namespace stopwise {

int HouseModel::finite_horizon() const {
  if (!horizon) throw InvalidArgument("house model: horizon is infinite");
  return *horizon;
}

void HouseModel::validate() const {
  stopwise::validate(offers);
  if (!(cost > 0.0) || !std::isfinite(cost)) throw InvalidArgument("house model: cost must be positive");
  if (!compatible(prior, offers)) {
    throw InvalidArgument("house model: prior of type " + variant_name(prior) +
                          " does not match offer family " + family_name(offers));
  }
  if (horizon && *horizon < 0) throw InvalidArgument("house model: horizon must be >= 0");
  if (!horizon && !has_finite_support(offers)) {
    throw InvalidArgument(
        "house model: the infinite horizon needs bounded offers; exponential offers are not supported");
  }
  if (!std::isfinite(initial_offer)) throw InvalidArgument("house model: initial offer must be finite");
}

HouseModel figure1_model(double gamma, double cost, int horizon) {
  HouseModel m;
  m.offers = BernoulliOffers{};
  m.prior = BetaBernoulli(1.0, 1.0);
  m.cost = cost;
  m.utility = Utility::exponential(gamma);
  m.horizon = horizon;
  m.initial_offer = 0.0;
  return m;
}

bool in_family_support(const OfferFamily& family, double x) {
  if (!std::isfinite(x)) return false;
  if (std::holds_alternative<ExponentialMeanOffers>(family)) return x >= 0.0;
  for (double a : offer_support(family)) {
    if (std::abs(a - x) <= 1e-12 * std::max(1.0, std::abs(a))) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

double SGrid::operator()(double x) const {
  if (x <= s.front()) return level.front();
  const std::size_t last = s.size() - 1;
  if (x >= s[last]) {
    const double slope = (level[last] - level[last - 1]) / (s[last] - s[last - 1]);
    return level[last] + slope * (x - s[last]);
  }
  const auto it = std::upper_bound(s.begin(), s.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - s.begin());
  const double t = (x - s[j - 1]) / (s[j] - s[j - 1]);
  return level[j - 1] + t * (level[j] - level[j - 1]);
}

DiscreteDist ReservationSolver::Impl::continuous_rule(const InvGammaExp& mu, const SGrid* next) const {
  const SecondOrderBeta sob{mu.shape(), mu.scale()};
  const int nodes = options.quadrature_nodes;
  if (!next) return predictive(mu, nodes).rule;

  // max{x, next(s + x)} has a kink where x crosses the continuation level.
  auto gap = [&](double x) { return x - (*next)(mu.s + x); };
  if (gap(0.0) >= 0.0) return predictive(mu, nodes).rule;
  double lo = 0.0;
  double hi = std::max(1.0, sob.scale);
  for (int i = 0; i < 200 && gap(hi) < 0.0; ++i) {
    lo = hi;
    hi *= 2.0;
  }
  if (gap(hi) < 0.0) return predictive(mu, nodes).rule;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  const double kink = hi;

  // Above the kink X - kink is second-order beta with scale + kink.
  const double upper_mass = std::pow(sob.scale / (sob.scale + kink), sob.shape);
  const DiscreteDist tail = predictive(InvGammaExp(mu.shape(), mu.scale() + kink), nodes).rule;
  const QuadratureRule gl = gauss_legendre(nodes, 0.0, kink);
  std::vector<double> atoms;
  std::vector<double> weights;
  double body = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) body += gl.weights[i] * sob.density(gl.nodes[i]);
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    atoms.push_back(gl.nodes[i]);
    weights.push_back((1.0 - upper_mass) * gl.weights[i] * sob.density(gl.nodes[i]) / body);
  }
  for (std::size_t i = 0; i < tail.size(); ++i) {
    atoms.push_back(kink + tail.atoms()[i]);
    weights.push_back(upper_mass * tail.weights()[i]);
  }
  return DiscreteDist(std::move(atoms), std::move(weights));
}

DiscreteDist ReservationSolver::Impl::offer_rule(const Belief& mu) const {
  const Predictive pred = predictive(mu, options.quadrature_nodes);
  std::vector<double> atoms;
  std::vector<double> weights;
  for (std::size_t i = 0; i < pred.rule.size(); ++i) {
    if (pred.rule.weights()[i] > 0.0) {
      atoms.push_back(pred.rule.atoms()[i]);
      weights.push_back(pred.rule.weights()[i]);
    }
  }
  return DiscreteDist(std::move(atoms), std::move(weights));
}

void ReservationSolver::Impl::check_budget() {
  if (memo.size() >= options.memo_budget) {
    throw BudgetExceeded("reservation solver: memo exceeds budget of " +
                         std::to_string(options.memo_budget) + " entries");
  }
}

const SGrid& ReservationSolver::Impl::grid(int mode, int index, int horizon, int count) {
  const Key key{mode, index, horizon, count};
  if (auto it = grids.find(key); it != grids.end()) return it->second;

  const auto& p = std::get<InvGammaExp>(model.prior);
  const double q = SecondOrderBeta{p.shape(), p.scale()}.quantile(options.grid_quantile);
  const double s_hi = p.s + std::max(1, count - p.n) * q;
  const double kappa = std::log1p(s_hi / p.scale());
  const int nodes = options.grid_nodes;

  SGrid g;
  g.s.resize(nodes);
  g.level.resize(nodes);
  for (int j = 0; j < nodes; ++j) {
    const double t = static_cast<double>(j) / (nodes - 1);
    g.s[j] = j == nodes - 1 ? s_hi : s_hi * std::expm1(kappa * t) / std::expm1(kappa);
  }
  for (int j = 0; j < nodes; ++j) {
    const Belief b = InvGammaExp(p.a, p.b, g.s[j], count);
    g.level[j] = mode == 0 ? finite(index, horizon, b) : to_go(index, b);
  }
  return grids.emplace(key, std::move(g)).first->second;
}

double ReservationSolver::Impl::finite(int stage, int horizon, const Belief& mu) {
  if (stage >= horizon) return kNoLevel;

  const double c = model.cost;
  const auto* g = std::get_if<InvGammaExp>(&mu);
  Key key;
  if (!g) {
    key = belief_key(mu);
    key.insert(key.begin(), {0, stage, horizon});
    if (auto it = memo.find(key); it != memo.end()) return it->second;
  }
  if (g) {
    const SGrid* next = stage + 1 < horizon ? &grid(0, stage + 1, horizon, g->n + 1) : nullptr;
    const DiscreteDist rule = continuous_rule(*g, next);
    std::vector<double> z(rule.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double x = rule.atoms()[i];
      const double cont = next ? (*next)(g->s + x) : kNoLevel;
      z[i] = std::max(x, cont) - (stage + 1) * c;
    }
    return stage * c + certainty_equivalent(model.utility, DiscreteDist(std::move(z), {rule.weights().begin(), rule.weights().end()}));
  }

  const DiscreteDist rule = offer_rule(mu);
  std::vector<double> z(rule.size());

  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x = rule.atoms()[i];
    const double cont = finite(stage + 1, horizon, update(mu, x));
    z[i] = std::max(x, cont) - (stage + 1) * c;
  }
  const double level =
      stage * c + certainty_equivalent(model.utility,
                                       DiscreteDist(std::move(z), {rule.weights().begin(), rule.weights().end()}));
  check_budget();
  memo.emplace(std::move(key), level);
  return level;
}

double ReservationSolver::Impl::to_go(int k, const Belief& mu) {
  if (k <= 0) return kNoLevel;
  const double gamma = model.utility.gamma();
  const auto* g = std::get_if<InvGammaExp>(&mu);
  Key key;
  if (!g) {
    key = belief_key(mu);
    key.insert(key.begin(), {1, k});
    if (auto it = memo.find(key); it != memo.end()) return it->second;
  }
  if (g) {
    const SGrid* next = k > 1 ? &grid(1, k - 1, 0, g->n + 1) : nullptr;
    const DiscreteDist rule = continuous_rule(*g, next);
    std::vector<double> z(rule.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double x = rule.atoms()[i];
      z[i] = std::max(x, next ? (*next)(g->s + x) : kNoLevel);
    }
    return -model.cost + entropic_ce(gamma, DiscreteDist(std::move(z), {rule.weights().begin(), rule.weights().end()}));
  }

  const DiscreteDist rule = offer_rule(mu);
  std::vector<double> z(rule.size());

  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x = rule.atoms()[i];
    z[i] = std::max(x, to_go(k - 1, update(mu, x)));
  }
  const double level =
      -model.cost + entropic_ce(gamma, DiscreteDist(std::move(z), {rule.weights().begin(), rule.weights().end()}));
  check_budget();
  memo.emplace(std::move(key), level);
  return level;
}

// ---------------------------------------------------------------------------

ReservationSolver::ReservationSolver(HouseModel model, ReservationOptions options)
    : model_(std::move(model)), options_(options) {
  model_.validate();
  if (options_.quadrature_nodes < 2) throw InvalidArgument("reservation solver: need >= 2 quadrature nodes");
  if (options_.grid_nodes < 2) throw InvalidArgument("reservation solver: need >= 2 grid nodes");
  if (!(options_.grid_quantile > 0.0 && options_.grid_quantile < 1.0)) {
    throw InvalidArgument("reservation solver: grid quantile must lie in (0,1)");
  }
  impl_ = std::make_shared<Impl>(model_, options_);
}

double ReservationSolver::level(int stage, const Belief& mu) {
  if (model_.infinite()) return level_infinite(stage, mu).level;
  return level_finite(stage, *model_.horizon, mu);
}

double ReservationSolver::level_finite(int stage, int horizon, const Belief& mu) {
  if (stage < 0 || horizon < stage) throw InvalidArgument("level_finite: need 0 <= stage <= horizon");
  if (!compatible(mu, model_.offers)) throw InvalidArgument("level_finite: belief does not match offer family");
  std::lock_guard lock(impl_->mutex);
  return impl_->finite(stage, horizon, mu);
}

double ReservationSolver::level_to_go(int steps_to_go, const Belief& mu) {
  if (model_.utility.family() != UtilityFamily::exponential) {
    throw InvalidArgument("level_to_go: needs exponential utility");
  }
  if (steps_to_go < 0) throw InvalidArgument("level_to_go: steps to go must be >= 0");
  if (!compatible(mu, model_.offers)) throw InvalidArgument("level_to_go: belief does not match offer family");
  std::lock_guard lock(impl_->mutex);
  return impl_->to_go(steps_to_go, mu);
}

// ---------------------------------------------------------------------------

std::vector<Belief> reachable_beliefs(const HouseModel& model, int depth) {
  if (!has_finite_support(model.offers)) {
    throw InvalidArgument("reachable_beliefs: continuous offers have uncountably many beliefs");
  }
  const std::vector<double> atoms = offer_support(model.offers);
  std::vector<Belief> layer{model.prior};
  for (int d = 0; d < depth; ++d) {
    std::vector<Belief> next;
    std::set<BeliefKey> seen;
    for (const Belief& b : layer) {
      for (double x : atoms) {
        if (!(predictive_mass(b, x) > 0.0)) continue;
        Belief nb = update(b, x);
        if (seen.insert(belief_key(nb)).second) next.push_back(std::move(nb));
      }
    }
    layer = std::move(next);
  }
  return layer;
}

namespace {

std::vector<Belief> continuous_stage_beliefs(const HouseModel& model, const ReservationOptions& options,
                                             int updates) {
  const auto& p = std::get<InvGammaExp>(model.prior);
  if (updates == 0) return {model.prior};
  // Same node placement as the solver's internal grid.
  const double q = SecondOrderBeta{p.shape(), p.scale()}.quantile(options.grid_quantile);
  const double s_hi = p.s + updates * q;
  const double kappa = std::log1p(s_hi / p.scale());
  std::vector<Belief> out;
  for (int j = 0; j < options.grid_nodes; ++j) {
    const double t = static_cast<double>(j) / (options.grid_nodes - 1);
    const double s = j == options.grid_nodes - 1 ? s_hi : s_hi * std::expm1(kappa * t) / std::expm1(kappa);
    out.push_back(InvGammaExp(p.a, p.b, s, p.n + updates));
  }
  return out;
}

std::vector<Belief> stage_beliefs(const HouseModel& model, const ReservationOptions& options, int updates) {
  if (has_finite_support(model.offers)) return reachable_beliefs(model, updates);
  return continuous_stage_beliefs(model, options, updates);
}

}  // namespace

ReservationTable reservation_levels_finite(const HouseModel& model, ReservationOptions options) {
  ReservationSolver solver(model, options);
  const int horizon = model.finite_horizon();
  ReservationTable table;
  table.indexing = TableIndexing::stage;
  table.horizon = horizon;
  table.quadrature_nodes = has_finite_support(model.offers) ? 0 : options.quadrature_nodes;
  table.grid_nodes = has_finite_support(model.offers) ? 0 : options.grid_nodes;
  for (int n = 0; n < horizon; ++n) {
    for (Belief& b : stage_beliefs(model, options, n)) {
      const double level = solver.level_finite(n, horizon, b);
      table.rows.push_back({n, std::move(b), level});
    }
  }
  return table;
}

ReservationTable reservation_levels_exp(const HouseModel& model, ReservationOptions options) {
  if (model.utility.family() != UtilityFamily::exponential) {
    throw InvalidArgument("reservation_levels_exp: needs exponential utility");
  }
  ReservationSolver solver(model, options);
  const int horizon = model.finite_horizon();
  ReservationTable table;
  table.indexing = TableIndexing::steps_to_go;
  table.horizon = horizon;
  table.quadrature_nodes = has_finite_support(model.offers) ? 0 : options.quadrature_nodes;
  table.grid_nodes = has_finite_support(model.offers) ? 0 : options.grid_nodes;
  for (int k = horizon; k >= 1; --k) {
    for (Belief& b : stage_beliefs(model, options, horizon - k)) {
      const double level = solver.level_to_go(k, b);
      table.rows.push_back({k, std::move(b), level});
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

std::string to_string(Advice advice) { return advice == Advice::stop ? "stop" : "continue"; }

double AdvisorState::accumulated_cost() const {
  if (steps.empty()) return 0.0;
  return steps.back().stage * model.cost;
}

std::optional<double> AdvisorState::realized_wealth() const {
  if (!stopped) return std::nullopt;
  return steps.back().offer - steps.back().stage * model.cost;
}

AdvisorState start_advisor(HouseModel model, ReservationOptions options) {
  model.validate();
  AdvisorState state;
  state.solver = std::make_shared<ReservationSolver>(model, options);
  state.belief = model.prior;
  state.model = std::move(model);
  return state;
}

double initial_level(const AdvisorState& state) {
  if (state.model.horizon && *state.model.horizon == 0) return kNoLevel;
  return state.solver->level(0, state.model.prior);
}

AdvisorState advise(const AdvisorState& state, double offer) {
  if (state.stopped) throw AdvisorStopped("advisor: session already stopped");
  if (!in_family_support(state.model.offers, offer)) {
    throw InvalidArgument("advisor: offer " + detail::fmt12(offer) + " is outside the support of " +
                          family_name(state.model.offers) + " offers");
  }
  const int n = state.next_stage();
  Belief mu = state.belief;
  if (n >= 1) {
    mu = update(state.belief, offer);
  } else if (!(predictive_mass(mu, offer) > 0.0)) {
    throw ImpossibleObservation("advisor: offer " + detail::fmt12(offer) + " has zero probability");
  }

  AdviceStep step;
  step.stage = n;
  step.offer = offer;
  step.belief = mu;
  const bool at_horizon = state.model.horizon && n >= *state.model.horizon;
  step.level = at_horizon ? kNoLevel : state.solver->level(n, mu);
  step.advice = (at_horizon || offer >= step.level) ? Advice::stop : Advice::continue_;

  AdvisorState next = state;
  next.belief = std::move(mu);
  next.stopped = step.advice == Advice::stop;
  next.steps.push_back(std::move(step));
  return next;
}

// ---------------------------------------------------------------------------

LowerBoundReport check_lower_bound(ReservationSolver& solver, int stage, const Belief& mu) {
  const HouseModel& m = solver.model();
  const int horizon = m.finite_horizon();
  if (stage < 0 || stage > horizon - 2) throw InvalidArgument("check_lower_bound: need 0 <= n <= N-2");
  const DiscreteDist rule = predictive(mu, solver.options().quadrature_nodes).rule;
  std::vector<double> atoms;
  std::vector<double> weights;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    if (!(rule.weights()[i] > 0.0)) continue;
    const double next = solver.level_finite(stage + 1, horizon, update(mu, rule.atoms()[i]));
    atoms.push_back(next - (stage + 1) * m.cost);
    weights.push_back(rule.weights()[i]);
  }
  LowerBoundReport r;
  r.lhs = solver.level_finite(stage, horizon, mu);
  r.rhs = stage * m.cost + certainty_equivalent(m.utility, DiscreteDist(std::move(atoms), std::move(weights)));
  r.margin = r.lhs - r.rhs;
  return r;
}

namespace {

double rule_value(ReservationSolver& solver, int stage, double offer, const Belief& mu) {
  const HouseModel& m = solver.model();
  const int horizon = m.finite_horizon();
  if (stage >= horizon || offer >= solver.level_finite(stage, horizon, mu)) {
    return m.utility(offer - stage * m.cost);
  }
  double total = 0.0;
  for (double x : offer_support(m.offers)) {
    const double p = predictive_mass(mu, x);
    if (!(p > 0.0)) continue;
    total += p * rule_value(solver, stage + 1, x, update(mu, x));
  }
  return total;
}

void require_finite_offers(const HouseModel& m, const char* what) {
  if (!has_finite_support(m.offers)) {
    throw InvalidArgument(std::string(what) + ": needs a finite offer family");
  }
}

}  // namespace

double policy_value(ReservationSolver& solver) {
  const HouseModel& m = solver.model();
  require_finite_offers(m, "policy_value");
  return rule_value(solver, 0, m.initial_offer, m.prior);
}

double d_value(ReservationSolver& solver) {
  const HouseModel& m = solver.model();
  require_finite_offers(m, "d_value");
  if (m.finite_horizon() < 1) throw InvalidArgument("d_value: needs horizon >= 1");
  double total = 0.0;
  for (double x : offer_support(m.offers)) {
    const double p = predictive_mass(m.prior, x);
    if (!(p > 0.0)) continue;
    total += p * rule_value(solver, 1, x, update(m.prior, x));
  }
  return total;
}

PartiallyObservableModel encode_as_pomdp(const HouseModel& model, int grid_nodes) {
  model.validate();
  require_finite_offers(model, "encode_as_pomdp");
  const std::vector<double> atoms = offer_support(model.offers);

  std::vector<double> theta;
  std::vector<double> weights;
  // likelihood[i][k] = q(atom k | theta_i)
  std::vector<std::vector<double>> likelihood;
  if (const auto* d = std::get_if<DiscretePosterior>(&model.prior)) {
    theta = d->theta();
    weights = d->weights();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      std::vector<double> row;
      for (double a : atoms) row.push_back(d->likelihood_at(i, a));
      likelihood.push_back(std::move(row));
    }
  } else {
    const auto& b = std::get<BetaBernoulli>(model.prior);
    const QuadratureRule gl = gauss_legendre(grid_nodes, 0.0, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = gl.nodes[i];
      const double w = gl.weights[i] * std::pow(t, b.alpha - 1.0) * std::pow(1.0 - t, b.beta - 1.0);
      theta.push_back(t);
      weights.push_back(w);
      total += w;
      likelihood.push_back({1.0 - t, t});
    }
    for (double& w : weights) w /= total;
  }

  PartiallyObservableModel pomdp;
  for (double a : atoms) pomdp.observable_labels.push_back(detail::fmt12(a));
  for (double t : theta) pomdp.hidden_labels.push_back(detail::fmt12(t));
  const std::size_t nx = atoms.size();
  const std::size_t ny = theta.size();
  pomdp.q.assign(nx, std::vector<std::vector<std::vector<double>>>(
                         ny, std::vector<std::vector<double>>(nx, std::vector<double>(ny, 0.0))));
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x2 = 0; x2 < nx; ++x2) pomdp.q[x][y][x2][y] = likelihood[y][x2];
    }
  }
  pomdp.running_reward.assign(nx, -model.cost);
  pomdp.stopping_reward = atoms;
  pomdp.prior = weights;
  const auto it = std::find_if(atoms.begin(), atoms.end(), [&](double a) {
    return std::abs(a - model.initial_offer) <= 1e-12 * std::max(1.0, std::abs(a));
  });
  if (it == atoms.end()) throw InvalidArgument("encode_as_pomdp: initial offer is not an offer atom");
  pomdp.x0 = static_cast<int>(it - atoms.begin());
  return pomdp;
}

}  // namespace stopwise
