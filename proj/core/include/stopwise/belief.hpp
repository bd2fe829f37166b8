#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "stopwise/quadrature.hpp"
#include "stopwise/utility.hpp"

namespace stopwise {

// ---------------------------------------------------------------------------
// Offer families q(x | theta)

/// Offers in {0, 1}; theta is the probability of a 1.
struct BernoulliOffers {
  friend bool operator==(const BernoulliOffers&, const BernoulliOffers&) = default;
};

/// Offers on a finite set of atoms; row i of `probs` is the offer law under
/// the i-th parameter value of whichever belief carries this family.
struct FiniteTableOffers {
  std::vector<double> atoms;
  std::vector<std::vector<double>> probs;

  friend bool operator==(const FiniteTableOffers&, const FiniteTableOffers&) = default;
};

/// Exponential offers with mean theta: q(x|theta) = e^{-x/theta} / theta, x >= 0.
struct ExponentialMeanOffers {
  friend bool operator==(const ExponentialMeanOffers&, const ExponentialMeanOffers&) = default;
};

using OfferFamily = std::variant<BernoulliOffers, FiniteTableOffers, ExponentialMeanOffers>;

std::string family_name(const OfferFamily& family);
void validate(const OfferFamily& family);
bool has_finite_support(const OfferFamily& family);
/// Offer atoms of a finite family; throws for continuous families.
std::vector<double> offer_support(const OfferFamily& family);
double offer_lower_bound(const OfferFamily& family);
/// +inf for unbounded families.
double offer_upper_bound(const OfferFamily& family);

// ---------------------------------------------------------------------------
// Beliefs over the unknown parameter

class DiscretePosterior {
 public:
  DiscretePosterior(std::vector<double> theta, std::vector<double> weights, OfferFamily likelihood);

  const std::vector<double>& theta() const noexcept { return theta_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const OfferFamily& likelihood() const noexcept { return likelihood_; }

  /// q(x | theta_i); zero when x is not a support point.
  double likelihood_at(std::size_t i, double x) const;

  friend bool operator==(const DiscretePosterior&, const DiscretePosterior&) = default;

 private:
  std::vector<double> theta_;
  std::vector<double> weights_;
  OfferFamily likelihood_;
};

/// Beta(alpha, beta) prior on a Bernoulli success probability.
struct BetaBernoulli {
  double alpha = 1.0;
  double beta = 1.0;

  BetaBernoulli() = default;
  BetaBernoulli(double alpha, double beta);

  friend bool operator==(const BetaBernoulli&, const BetaBernoulli&) = default;
};

/// Inverse-Gamma(a, b) prior on the mean of exponential offers, carried with
/// the sufficient statistic (s, n) = (sum of offers, count).
struct InvGammaExp {
  double a = 2.0;
  double b = 1.0;
  double s = 0.0;
  int n = 0;

  InvGammaExp() = default;
  InvGammaExp(double a, double b, double s = 0.0, int n = 0);

  double shape() const noexcept { return a + n; }
  double scale() const noexcept { return b + s; }

  friend bool operator==(const InvGammaExp&, const InvGammaExp&) = default;
};

using Belief = std::variant<DiscretePosterior, BetaBernoulli, InvGammaExp>;

std::string variant_name(const Belief& belief);

/// Offer family a belief predicts for.
OfferFamily offer_family_of(const Belief& belief);

/// Whether `belief` can serve as prior for offers of `family`.
bool compatible(const Belief& belief, const OfferFamily& family);

// ---------------------------------------------------------------------------
// Predictive laws Q(. | mu)

/// Density (n+a) (s+b)^{n+a} / (x+s+b)^{n+a+1} on x >= 0.
struct SecondOrderBeta {
  double shape = 2.0;
  double scale = 1.0;

  double density(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;
  double mean() const;
};

double second_order_beta_density(double shape, double scale, double x);

struct Predictive {
  std::variant<DiscreteDist, SecondOrderBeta> law;
  /// The law itself for finite families; a quadrature discretization
  /// (Gauss-Legendre under x = m t / (1 - t), m the median) for continuous ones.
  DiscreteDist rule;

  bool is_discrete() const noexcept { return std::holds_alternative<DiscreteDist>(law); }
  /// Probability mass (finite families) or density (continuous) at x.
  double mass_or_density(double x) const;
};

inline constexpr int kDefaultQuadratureNodes = 128;

Predictive predictive(const Belief& belief, int quadrature_nodes = kDefaultQuadratureNodes);

/// Probability mass (finite) or density (continuous) of observing x next.
double predictive_mass(const Belief& belief, double x);

bool is_feasible_offer(const Belief& belief, double x);

/// Bayes update. Throws InvalidArgument for offers outside the family's
/// support and ImpossibleObservation for zero predictive mass.
Belief update(const Belief& belief, double x);

// ---------------------------------------------------------------------------
// Orders and keys

enum class LrOrdering { less, greater, equal, incomparable };

std::string to_string(LrOrdering ordering);

/// Likelihood-ratio comparison of two beliefs of the same variant.
/// `less` means mu1 <=_lr mu2.
LrOrdering lr_compare(const Belief& mu1, const Belief& mu2);

/// Canonical key for memoization: parameters quantized to 1e-12.
using BeliefKey = std::vector<std::int64_t>;
BeliefKey belief_key(const Belief& belief);

/// Short human-readable label, stable across runs.
std::string describe(const Belief& belief);

/// Mean of the next offer under the belief.
double predictive_mean(const Belief& belief);

}  // namespace stopwise
