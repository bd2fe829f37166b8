#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stopwise/belief.hpp"
#include "stopwise/stopping.hpp"
#include "stopwise/utility.hpp"

namespace stopwise {

/// Bayesian house selling: offers X_0, X_1, ... arrive i.i.d. from Q_theta
/// with theta unknown; each rejected offer costs c. Stopping at stage n
/// yields U(X_n - n c). The belief at stage n incorporates X_1..X_n.
struct HouseModel {
  OfferFamily offers = BernoulliOffers{};
  Belief prior = BetaBernoulli{};
  double cost = 0.1;
  Utility utility = Utility::linear();
  /// Empty for the infinite horizon.
  std::optional<int> horizon = 10;
  /// X_0, used when evaluating J_N(x0) and in simulation.
  double initial_offer = 0.0;

  bool infinite() const noexcept { return !horizon.has_value(); }
  /// Throws InvalidArgument for the infinite horizon.
  int finite_horizon() const;

  void validate() const;
};

/// Bernoulli offers, Beta(1,1) prior, exponential utility.
HouseModel figure1_model(double gamma, double cost = 0.1, int horizon = 10);

inline constexpr double kNoLevel = -std::numeric_limits<double>::infinity();

struct ReservationOptions {
  int quadrature_nodes = kDefaultQuadratureNodes;
  /// Continuous offers: s-grid nodes per (stage, count).
  int grid_nodes = 160;
  /// Continuous offers: the grid spans [0, stage-count multiple of this
  /// quantile of the prior predictive].
  double grid_quantile = 0.9999;
  std::size_t memo_budget = kDefaultNodeBudget;
};

struct InfiniteOptions {
  double tol = 1e-10;
  int max_iterations = 100'000;
  /// Consecutive sub-tolerance increments required before accepting.
  int patience = 3;
};

struct InfiniteLevel {
  double level = 0.0;
  /// Horizon (or steps to go) at which the iteration was accepted.
  int iterations = 0;
  double last_increment = 0.0;
  /// |x - (-c + rho(max{X, x(Phi(X, mu))}))| for exponential utility, else
  /// the last increment.
  double residual = 0.0;
};

/// Reservation levels x*_{n,N}(mu) for one model. Results are memoized;
/// public methods are thread-safe and deterministic.
class ReservationSolver {
 public:
  explicit ReservationSolver(HouseModel model, ReservationOptions options = {});

  const HouseModel& model() const noexcept { return model_; }
  const ReservationOptions& options() const noexcept { return options_; }

  /// x*_{n,N}(mu) under the model horizon; x*_{n,inf}(mu) for infinite
  /// models. kNoLevel at n == N.
  double level(int stage, const Belief& mu);

  /// x*_{n,N}(mu) for an explicit horizon N >= n.
  double level_finite(int stage, int horizon, const Belief& mu);

  /// Exponential utility only: x*_k(mu) with k steps to go; kNoLevel at k=0.
  double level_to_go(int steps_to_go, const Belief& mu);

  /// lim_N x*_{n,N}(mu); bounded (finite-support) offers only.
  InfiniteLevel level_infinite(int stage, const Belief& mu, const InfiniteOptions& options = {});

 private:
  struct Impl;
  HouseModel model_;
  ReservationOptions options_;
  std::shared_ptr<Impl> impl_;
};

struct ReservationRow {
  /// Stage n (finite tables) or steps to go k (exponential tables).
  int index = 0;
  Belief belief = BetaBernoulli{};
  double level = 0.0;
};

enum class TableIndexing { stage, steps_to_go };

struct ReservationTable {
  TableIndexing indexing = TableIndexing::stage;
  std::optional<int> horizon;
  std::vector<ReservationRow> rows;
  double tolerance = 0.0;
  int quadrature_nodes = 0;
  int grid_nodes = 0;
  /// Infinite tables: iterations used and the final sup-norm increment.
  int iterations = 0;
  double last_increment = 0.0;
};

/// Beliefs reachable from `prior` after exactly `depth` updates (finite
/// families only), in a deterministic order.
std::vector<Belief> reachable_beliefs(const HouseModel& model, int depth);

/// Rows for every stage n < N and every belief reachable in n updates
/// (finite offers), or for every node of the per-stage s-grid (continuous).
ReservationTable reservation_levels_finite(const HouseModel& model, ReservationOptions options = {});

/// Exponential utility: rows x*_k for k = 1..N over beliefs reachable in
/// N - k updates.
ReservationTable reservation_levels_exp(const HouseModel& model, ReservationOptions options = {});

/// Infinite horizon: x*_{n,inf} over beliefs reachable within `depth`
/// updates, iterated until the sup-norm increment over those rows drops
/// below options.tol `patience` times in a row. Exponential utility yields
/// stationary levels (index 0). Throws ConvergenceError at the cap.
ReservationTable reservation_level_infinite(const HouseModel& model, const InfiniteOptions& options = {},
                                            int depth = 2, ReservationOptions solver_options = {});

/// Exponential utility with a point-mass offer law: the stationary fixed
/// point x = -c + rho_gamma(max{X, x}) by bisection.
double exp_fixed_point_known(double gamma, double cost, const DiscreteDist& offers, double tol = 1e-14);

/// |x - (-c + rho_gamma(max{X, x}))| for a known offer law.
double exp_fixed_point_residual(double gamma, double cost, const DiscreteDist& offers, double x);

// ---------------------------------------------------------------------------
// Live advice

enum class Advice { stop, continue_ };

std::string to_string(Advice advice);

struct AdviceStep {
  int stage = 0;
  double offer = 0.0;
  double level = kNoLevel;
  Advice advice = Advice::continue_;
  Belief belief = BetaBernoulli{};  // mu_n used for the level
};

struct AdvisorState {
  HouseModel model;
  std::shared_ptr<ReservationSolver> solver;
  std::vector<AdviceStep> steps;
  /// Belief after the offers received so far (prior before any offer).
  Belief belief = BetaBernoulli{};
  bool stopped = false;

  /// Stage of the next offer.
  int next_stage() const noexcept { return static_cast<int>(steps.size()); }
  /// Cost of the offers rejected so far.
  double accumulated_cost() const;
  /// X_tau - tau c once stopped.
  std::optional<double> realized_wealth() const;
};

AdvisorState start_advisor(HouseModel model, ReservationOptions options = {});

/// Level that the first offer (stage 0) is compared against.
double initial_level(const AdvisorState& state);

/// Receives the offer for the next stage, updates the belief (from stage 1
/// on), and advises stop iff offer >= x*_{n,N}(mu_n) or n = N.
/// Throws AdvisorStopped after a stop, InvalidArgument or
/// ImpossibleObservation for infeasible offers.
AdvisorState advise(const AdvisorState& state, double offer);

// ---------------------------------------------------------------------------
// Figure-style experiments (Bernoulli offers, exponential utility)

/// Zero offers rejected along the all-zeros path before a zero is accepted,
/// at most N.
int rejection_count(const HouseModel& model, double gamma);

struct GammaBracket {
  double lo = -64.0;
  double hi = -1e-9;
};

/// Bisection for the gamma at which rejection_count first reaches k.
/// Requires count(lo) < k <= count(hi). The width tolerance is absolute for
/// |gamma| >= 1 and relative below.
double gamma_threshold(const HouseModel& model, int k, GammaBracket bracket, double tol = 1e-4);

struct GammaBand {
  double lower = 0.0;  // -inf for the first band
  double upper = 0.0;
  int count = 0;
};

struct Figure1Result {
  std::vector<GammaBand> bands;
  /// switches[k-1] is the gamma where the count becomes k; NaN when the
  /// scan never reaches k.
  std::vector<double> switches;
};

struct Figure1Options {
  GammaBracket scan{-64.0, -1e-9};
  int points_per_decade = 40;
  double tol = 1e-4;
  int max_count = 9;
};

Figure1Result figure1(const HouseModel& model, const Figure1Options& options = {});

// ---------------------------------------------------------------------------
// Checks and exact evaluation (finite offer families)

struct LowerBoundReport {
  double lhs = 0.0;  // x*_{n,N}(mu)
  double rhs = 0.0;  // n c + rho_U(x*_{n+1,N}(Phi(X, mu)) - (n+1) c)
  double margin = 0.0;
};

/// Requires n <= N - 2.
LowerBoundReport check_lower_bound(ReservationSolver& solver, int stage, const Belief& mu);

/// Exact expected utility of the reservation rule from (initial_offer, prior).
double policy_value(ReservationSolver& solver);

/// d_N(Q0, U): optimal expected utility over stopping times 1 <= tau <= N.
double d_value(ReservationSolver& solver);

/// Finite model over a parameter grid equivalent to the house model.
/// DiscretePosterior priors map exactly; Beta priors are discretized on a
/// Gauss-Legendre grid of `grid_nodes` points.
PartiallyObservableModel encode_as_pomdp(const HouseModel& model, int grid_nodes = 64);

}  // namespace stopwise
