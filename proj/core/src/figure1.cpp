#include <cmath>
#include <limits>

#include "stopwise/errors.hpp"
#include "stopwise/house_selling.hpp"

namespace stopwise {

int rejection_count(const HouseModel& model, double gamma) {
  if (!std::holds_alternative<BernoulliOffers>(model.offers)) {
    throw InvalidArgument("rejection_count: needs Bernoulli offers");
  }
  HouseModel m = model;
  m.utility = Utility::exponential(gamma);
  const int horizon = m.finite_horizon();
  ReservationSolver solver(m);
  Belief mu = m.prior;
  for (int n = 0; n < horizon; ++n) {
    if (n >= 1) mu = update(mu, 0.0);
    if (0.0 >= solver.level_to_go(horizon - n, mu)) return n;
  }
  return horizon;
}

double gamma_threshold(const HouseModel& model, int k, GammaBracket bracket, double tol) {
  if (!(bracket.lo < bracket.hi && bracket.hi < 0.0)) {
    throw InvalidArgument("gamma_threshold: need lo < hi < 0");
  }
  if (!(tol > 0.0)) throw InvalidArgument("gamma_threshold: tol must be positive");
  double lo = bracket.lo;
  double hi = bracket.hi;
  if (!(rejection_count(model, lo) < k && rejection_count(model, hi) >= k)) {
    throw InvalidArgument("gamma_threshold: bracket does not straddle the switch to " + std::to_string(k));
  }
  while (hi - lo > tol * std::min(1.0, std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (rejection_count(model, mid) >= k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Figure1Result figure1(const HouseModel& model, const Figure1Options& options) {
  const double lo = options.scan.lo;
  const double hi = options.scan.hi;
  if (!(lo < hi && hi < 0.0)) throw InvalidArgument("figure1: scan range must satisfy lo < hi < 0");
  if (options.points_per_decade < 1) throw InvalidArgument("figure1: points_per_decade must be >= 1");

  // Log-spaced in |gamma|, ordered from lo up to hi.
  const double decades = std::log10(lo / hi);
  const int points = static_cast<int>(std::ceil(decades * options.points_per_decade)) + 1;
  std::vector<double> grid(points);
  std::vector<int> counts(points);
  for (int i = 0; i < points; ++i) {
    grid[i] = i == points - 1 ? hi : lo * std::pow(10.0, -decades * i / (points - 1));
    counts[i] = rejection_count(model, grid[i]);
  }

  Figure1Result result;
  result.switches.assign(options.max_count, std::numeric_limits<double>::quiet_NaN());
  for (int k = 1; k <= options.max_count; ++k) {
    for (int i = 0; i + 1 < points; ++i) {
      if (counts[i] < k && counts[i + 1] >= k) {
        result.switches[k - 1] = gamma_threshold(model, k, {grid[i], grid[i + 1]}, options.tol);
        break;
      }
    }
  }

  GammaBand band{-std::numeric_limits<double>::infinity(), 0.0, counts.front()};
  for (int k = counts.front() + 1; k <= options.max_count; ++k) {
    const double s = result.switches[k - 1];
    if (std::isnan(s)) continue;
    band.upper = s;
    result.bands.push_back(band);
    band = GammaBand{s, 0.0, k};
  }
  band.upper = 0.0;
  result.bands.push_back(band);
  return result;
}

}  // namespace stopwise
