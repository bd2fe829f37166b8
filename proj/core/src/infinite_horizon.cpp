#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "stopwise/errors.hpp"
#include "stopwise/house_selling.hpp"

namespace stopwise {

namespace {

void check_options(const InfiniteOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("infinite horizon: tol must be positive");
  if (options.max_iterations < 1) throw InvalidArgument("infinite horizon: max_iterations must be >= 1");
  if (options.patience < 1) throw InvalidArgument("infinite horizon: patience must be >= 1");
}

void require_bounded(const HouseModel& model) {
  if (!has_finite_support(model.offers)) {
    throw InvalidArgument("infinite horizon: needs bounded offers; exponential offers are not supported");
  }
}

}  // namespace

InfiniteLevel ReservationSolver::level_infinite(int stage, const Belief& mu, const InfiniteOptions& options) {
  check_options(options);
  require_bounded(model_);
  if (stage < 0) throw InvalidArgument("level_infinite: stage must be >= 0");
  const bool exponential = model_.utility.family() == UtilityFamily::exponential;

  auto iterate = [&](int it) {
    return exponential ? level_to_go(it, mu) : level_finite(stage, stage + it, mu);
  };

  double prev = iterate(1);
  double increment = std::numeric_limits<double>::infinity();
  int streak = 0;
  for (int it = 2; it <= options.max_iterations; ++it) {
    const double x = iterate(it);
    increment = std::abs(x - prev);
    streak = increment < options.tol ? streak + 1 : 0;
    if (streak >= options.patience) {
      InfiniteLevel out;
      out.level = x;
      out.iterations = it;
      out.last_increment = increment;
      out.residual = exponential ? std::abs(x - iterate(it + 1)) : increment;
      return out;
    }
    prev = x;
  }
  throw ConvergenceError("level_infinite: no convergence within " + std::to_string(options.max_iterations) +
                             " iterations (last increment " + detail::fmt12(increment) + ")",
                         increment);
}

ReservationTable reservation_level_infinite(const HouseModel& model, const InfiniteOptions& options, int depth,
                                            ReservationOptions solver_options) {
  check_options(options);
  require_bounded(model);
  if (!model.infinite()) throw InvalidArgument("reservation_level_infinite: model horizon is finite");
  if (depth < 0) throw InvalidArgument("reservation_level_infinite: depth must be >= 0");

  ReservationSolver solver(model, solver_options);
  const bool exponential = model.utility.family() == UtilityFamily::exponential;

  ReservationTable table;
  table.indexing = TableIndexing::stage;
  table.tolerance = options.tol;
  for (int d = 0; d <= depth; ++d) {
    for (Belief& b : reachable_beliefs(model, d)) {
      table.rows.push_back({exponential ? 0 : d, std::move(b), 0.0});
    }
  }

  auto iterate = [&](int it, const ReservationRow& row) {
    return exponential ? solver.level_to_go(it, row.belief)
                       : solver.level_finite(row.index, row.index + it, row.belief);
  };

  for (ReservationRow& row : table.rows) row.level = iterate(1, row);
  double increment = std::numeric_limits<double>::infinity();
  int streak = 0;
  for (int it = 2; it <= options.max_iterations; ++it) {
    increment = 0.0;
    for (ReservationRow& row : table.rows) {
      const double x = iterate(it, row);
      increment = std::max(increment, std::abs(x - row.level));
      row.level = x;
    }
    streak = increment < options.tol ? streak + 1 : 0;
    if (streak >= options.patience) {
      table.iterations = it;
      table.last_increment = increment;
      return table;
    }
  }
  throw ConvergenceError("reservation_level_infinite: no convergence within " +
                             std::to_string(options.max_iterations) + " iterations (last increment " +
                             detail::fmt12(increment) + ")",
                         increment);
}

namespace {

double fixed_point_map(double gamma, double cost, const DiscreteDist& offers, double x) {
  std::vector<double> z(offers.atoms().begin(), offers.atoms().end());
  for (double& v : z) v = std::max(v, x);
  return -cost + entropic_ce(gamma, DiscreteDist(std::move(z), {offers.weights().begin(), offers.weights().end()}));
}

}  // namespace

double exp_fixed_point_residual(double gamma, double cost, const DiscreteDist& offers, double x) {
  return std::abs(x - fixed_point_map(gamma, cost, offers, x));
}

double exp_fixed_point_known(double gamma, double cost, const DiscreteDist& offers, double tol) {
  if (!(gamma < 0.0)) throw InvalidArgument("exp_fixed_point_known: gamma must be negative");
  if (!(cost > 0.0)) throw InvalidArgument("exp_fixed_point_known: cost must be positive");
  // x - map(x) is increasing and changes sign on [min X - c, max X - c].
  double lo = offers.min_support() - cost;
  double hi = offers.max_support() - cost;
  for (int it = 0; it < 400 && hi - lo > tol * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid - fixed_point_map(gamma, cost, offers, mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace stopwise
