#pragma once

#include <map>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "detail.hpp"
#include "stopwise/house_selling.hpp"

namespace stopwise {

/// Level on a geometric s-grid at fixed count, linearly interpolated and
/// linearly extrapolated past the last node.
struct SGrid {
  std::vector<double> s;
  std::vector<double> level;

  double operator()(double x) const;
};

struct ReservationSolver::Impl {
  using Key = std::vector<std::int64_t>;

  Impl(HouseModel m, const ReservationOptions& o) : model(std::move(m)), options(o) {}

  HouseModel model;
  ReservationOptions options;
  std::mutex mutex;

  std::unordered_map<Key, double, detail::KeyHash> memo;
  std::map<Key, SGrid> grids;

  // Callers hold `mutex`.
  double finite(int stage, int horizon, const Belief& mu);
  double to_go(int k, const Belief& mu);

  /// The offer rule X ~ Q(.|mu) restricted to positive-weight atoms.
  DiscreteDist offer_rule(const Belief& mu) const;
  /// Predictive rule for continuous offers, split at the kink of
  /// max{x, next(s + x)} when there is one.
  DiscreteDist continuous_rule(const InvGammaExp& mu, const SGrid* next) const;

  void check_budget();

 private:
  const SGrid& grid(int mode, int index, int horizon, int count);
};

bool in_family_support(const OfferFamily& family, double x);

}  // namespace stopwise
