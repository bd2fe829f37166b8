#include "stopwise/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "detail.hpp"
#include "stopwise/errors.hpp"

namespace stopwise {

namespace {

constexpr double kAtomMatchTolerance = 1e-12;
constexpr double kLrTolerance = 1e-10;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

/// Index of the atom matching x, or -1.
int find_atom(const std::vector<double>& atoms, double x) {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (std::abs(atoms[i] - x) <= kAtomMatchTolerance * std::max(1.0, std::abs(atoms[i]))) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

int bernoulli_outcome(double x) {
  if (std::abs(x) <= kAtomMatchTolerance) return 0;
  if (std::abs(x - 1.0) <= kAtomMatchTolerance) return 1;
  return -1;
}

using detail::quantize;

std::string fmt(double v) { return detail::fmt12(v); }

bool nondecreasing_ratio(const std::vector<double>& w1, const std::vector<double>& w2) {
  // ratio_i = w2[i] / w1[i] on the extended half-line; 0/0 entries are skipped.
  int prev = -1;
  for (std::size_t j = 0; j < w1.size(); ++j) {
    if (w1[j] == 0.0 && w2[j] == 0.0) continue;
    if (prev >= 0) {
      const double lhs = w2[prev] * w1[j];
      const double rhs = w2[j] * w1[prev];
      if (lhs > rhs + kLrTolerance * std::max(lhs, rhs)) return false;
    }
    prev = static_cast<int>(j);
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string family_name(const OfferFamily& family) {
  return std::visit(overloaded{
                        [](const BernoulliOffers&) { return std::string("bernoulli"); },
                        [](const FiniteTableOffers&) { return std::string("finite_table"); },
                        [](const ExponentialMeanOffers&) { return std::string("exponential_mean"); },
                    },
                    family);
}

void validate(const OfferFamily& family) {
  if (const auto* table = std::get_if<FiniteTableOffers>(&family)) {
    if (table->atoms.empty()) throw InvalidArgument("finite_table: no offer atoms");
    for (double a : table->atoms) {
      if (!std::isfinite(a)) throw InvalidArgument("finite_table: non-finite offer atom");
    }
    if (table->probs.empty()) throw InvalidArgument("finite_table: no parameter rows");
    for (const auto& row : table->probs) {
      if (row.size() != table->atoms.size()) {
        throw InvalidArgument("finite_table: row length differs from number of atoms");
      }
      // Reuses the DiscreteDist checks on each row.
      DiscreteDist(table->atoms, row);
    }
  }
}

bool has_finite_support(const OfferFamily& family) {
  return !std::holds_alternative<ExponentialMeanOffers>(family);
}

std::vector<double> offer_support(const OfferFamily& family) {
  if (std::holds_alternative<BernoulliOffers>(family)) return {0.0, 1.0};
  if (const auto* table = std::get_if<FiniteTableOffers>(&family)) return table->atoms;
  throw InvalidArgument("offer_support: continuous family has no finite support");
}

double offer_lower_bound(const OfferFamily& family) {
  if (const auto* table = std::get_if<FiniteTableOffers>(&family)) {
    return *std::min_element(table->atoms.begin(), table->atoms.end());
  }
  return 0.0;
}

double offer_upper_bound(const OfferFamily& family) {
  if (std::holds_alternative<BernoulliOffers>(family)) return 1.0;
  if (const auto* table = std::get_if<FiniteTableOffers>(&family)) {
    return *std::max_element(table->atoms.begin(), table->atoms.end());
  }
  return std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------

DiscretePosterior::DiscretePosterior(std::vector<double> theta, std::vector<double> weights,
                                     OfferFamily likelihood)
    : theta_(std::move(theta)), weights_(std::move(weights)), likelihood_(std::move(likelihood)) {
  if (theta_.empty()) throw InvalidArgument("DiscretePosterior: empty parameter grid");
  if (theta_.size() != weights_.size()) {
    throw InvalidArgument("DiscretePosterior: grid and weights differ in length");
  }
  for (std::size_t i = 1; i < theta_.size(); ++i) {
    if (!(theta_[i] > theta_[i - 1])) {
      throw InvalidArgument("DiscretePosterior: parameter grid must be strictly increasing");
    }
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("DiscretePosterior: bad weight");
    total += w;
  }
  if (std::abs(total - 1.0) > DiscreteDist::kNormalizationTolerance) {
    throw InvalidArgument("DiscretePosterior: weights must sum to 1");
  }
  validate(likelihood_);
  std::visit(overloaded{
                 [&](const BernoulliOffers&) {
                   for (double t : theta_) {
                     if (!(t >= 0.0 && t <= 1.0)) {
                       throw InvalidArgument("DiscretePosterior: Bernoulli parameter outside [0,1]");
                     }
                   }
                 },
                 [&](const FiniteTableOffers& table) {
                   if (table.probs.size() != theta_.size()) {
                     throw InvalidArgument(
                         "DiscretePosterior: finite_table needs one row per parameter value");
                   }
                 },
                 [&](const ExponentialMeanOffers&) {
                   throw InvalidArgument(
                       "DiscretePosterior: exponential offers need the conjugate inv_gamma_exp belief");
                 },
             },
             likelihood_);
}

double DiscretePosterior::likelihood_at(std::size_t i, double x) const {
  return std::visit(overloaded{
                        [&](const BernoulliOffers&) {
                          const int k = bernoulli_outcome(x);
                          if (k < 0) return 0.0;
                          return k == 1 ? theta_[i] : 1.0 - theta_[i];
                        },
                        [&](const FiniteTableOffers& table) {
                          const int k = find_atom(table.atoms, x);
                          return k < 0 ? 0.0 : table.probs[i][k];
                        },
                        [](const ExponentialMeanOffers&) { return 0.0; },
                    },
                    likelihood_);
}

BetaBernoulli::BetaBernoulli(double a, double b) : alpha(a), beta(b) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw InvalidArgument("BetaBernoulli: alpha and beta must be positive");
  }
}

InvGammaExp::InvGammaExp(double a_, double b_, double s_, int n_) : a(a_), b(b_), s(s_), n(n_) {
  if (!(a > 1.0) || !std::isfinite(a)) throw InvalidArgument("InvGammaExp: need a > 1");
  if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("InvGammaExp: need b > 0");
  if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("InvGammaExp: need s >= 0");
  if (n < 0) throw InvalidArgument("InvGammaExp: need n >= 0");
}

std::string variant_name(const Belief& belief) {
  return std::visit(overloaded{
                        [](const DiscretePosterior&) { return std::string("discrete"); },
                        [](const BetaBernoulli&) { return std::string("beta_bernoulli"); },
                        [](const InvGammaExp&) { return std::string("inv_gamma_exp"); },
                    },
                    belief);
}

OfferFamily offer_family_of(const Belief& belief) {
  return std::visit(overloaded{
                        [](const DiscretePosterior& d) { return d.likelihood(); },
                        [](const BetaBernoulli&) { return OfferFamily{BernoulliOffers{}}; },
                        [](const InvGammaExp&) { return OfferFamily{ExponentialMeanOffers{}}; },
                    },
                    belief);
}

bool compatible(const Belief& belief, const OfferFamily& family) {
  return offer_family_of(belief) == family;
}

// ---------------------------------------------------------------------------

double SecondOrderBeta::density(double x) const {
  return second_order_beta_density(shape, scale, x);
}

double SecondOrderBeta::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  return -std::expm1(shape * std::log(scale / (x + scale)));
}

double SecondOrderBeta::quantile(double p) const {
  if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("SecondOrderBeta::quantile: p outside [0,1)");
  return scale * std::expm1(-std::log1p(-p) / shape);
}

double SecondOrderBeta::mean() const { return scale / (shape - 1.0); }

double second_order_beta_density(double shape, double scale, double x) {
  if (!(shape > 1.0)) throw InvalidArgument("second_order_beta_density: need shape > 1");
  if (!(scale > 0.0)) throw InvalidArgument("second_order_beta_density: need scale > 0");
  if (!(x >= 0.0)) throw InvalidArgument("second_order_beta_density: need x >= 0");
  // shape * scale^shape / (x+scale)^{shape+1}, in log form to avoid overflow.
  return shape / (x + scale) * std::exp(shape * std::log(scale / (x + scale)));
}

double Predictive::mass_or_density(double x) const {
  return std::visit(overloaded{
                        [&](const DiscreteDist& d) {
                          double m = 0.0;
                          for (std::size_t i = 0; i < d.size(); ++i) {
                            if (std::abs(d.atoms()[i] - x) <=
                                kAtomMatchTolerance * std::max(1.0, std::abs(x))) {
                              m += d.weights()[i];
                            }
                          }
                          return m;
                        },
                        [&](const SecondOrderBeta& sob) { return x < 0.0 ? 0.0 : sob.density(x); },
                    },
                    law);
}

Predictive predictive(const Belief& belief, int quadrature_nodes) {
  return std::visit(
      overloaded{
          [&](const DiscretePosterior& d) {
            const std::vector<double> atoms = offer_support(d.likelihood());
            std::vector<double> weights(atoms.size(), 0.0);
            for (std::size_t k = 0; k < atoms.size(); ++k) {
              for (std::size_t i = 0; i < d.theta().size(); ++i) {
                weights[k] += d.weights()[i] * d.likelihood_at(i, atoms[k]);
              }
            }
            DiscreteDist dist(atoms, weights);
            return Predictive{dist, dist};
          },
          [&](const BetaBernoulli& b) {
            const double p = b.alpha / (b.alpha + b.beta);
            DiscreteDist dist({0.0, 1.0}, {1.0 - p, p});
            return Predictive{dist, dist};
          },
          [&](const InvGammaExp& g) {
            SecondOrderBeta sob{g.shape(), g.scale()};
            // Gauss-Legendre on t in (0,1) with x = m t / (1 - t), m the
            // median. Power tails of the density become polynomial in 1 - t.
            const double m = sob.scale * std::expm1(std::log(2.0) / sob.shape);
            const QuadratureRule gl = gauss_legendre(quadrature_nodes, 0.0, 1.0);
            std::vector<double> atoms(gl.nodes.size());
            std::vector<double> weights(gl.nodes.size());
            double total = 0.0;
            for (std::size_t i = 0; i < atoms.size(); ++i) {
              const double t = gl.nodes[i];
              atoms[i] = m * t / (1.0 - t);
              weights[i] = gl.weights[i] * sob.density(atoms[i]) * m / ((1.0 - t) * (1.0 - t));
              total += weights[i];
            }
            for (double& w : weights) w /= total;
            return Predictive{sob, DiscreteDist(std::move(atoms), std::move(weights))};
          },
      },
      belief);
}

double predictive_mass(const Belief& belief, double x) {
  return std::visit(overloaded{
                        [&](const DiscretePosterior& d) {
                          double m = 0.0;
                          for (std::size_t i = 0; i < d.theta().size(); ++i) {
                            m += d.weights()[i] * d.likelihood_at(i, x);
                          }
                          return m;
                        },
                        [&](const BetaBernoulli& b) {
                          const int k = bernoulli_outcome(x);
                          if (k < 0) return 0.0;
                          const double p = b.alpha / (b.alpha + b.beta);
                          return k == 1 ? p : 1.0 - p;
                        },
                        [&](const InvGammaExp& g) {
                          if (!(x >= 0.0) || !std::isfinite(x)) return 0.0;
                          return second_order_beta_density(g.shape(), g.scale(), x);
                        },
                    },
                    belief);
}

bool is_feasible_offer(const Belief& belief, double x) {
  return std::isfinite(x) && predictive_mass(belief, x) > 0.0;
}

Belief update(const Belief& belief, double x) {
  if (!std::isfinite(x)) throw InvalidArgument("update: observation must be finite");
  return std::visit(
      overloaded{
          [&](const DiscretePosterior& d) -> Belief {
            if (const auto* table = std::get_if<FiniteTableOffers>(&d.likelihood())) {
              if (find_atom(table->atoms, x) < 0) {
                throw InvalidArgument("update: offer " + fmt(x) + " is not an atom of the table");
              }
            } else if (bernoulli_outcome(x) < 0) {
              throw InvalidArgument("update: Bernoulli offers must be 0 or 1, got " + fmt(x));
            }
            std::vector<double> w(d.weights().size());
            double total = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
              w[i] = d.weights()[i] * d.likelihood_at(i, x);
              total += w[i];
            }
            if (!(total > 0.0)) throw ImpossibleObservation("impossible observation " + fmt(x));
            for (double& v : w) v /= total;
            return DiscretePosterior(d.theta(), std::move(w), d.likelihood());
          },
          [&](const BetaBernoulli& b) -> Belief {
            const int k = bernoulli_outcome(x);
            if (k < 0) throw InvalidArgument("update: Bernoulli offers must be 0 or 1, got " + fmt(x));
            return BetaBernoulli(b.alpha + k, b.beta + (1 - k));
          },
          [&](const InvGammaExp& g) -> Belief {
            if (!(x >= 0.0)) throw InvalidArgument("update: exponential offers must be >= 0");
            return InvGammaExp(g.a, g.b, g.s + x, g.n + 1);
          },
      },
      belief);
}

// ---------------------------------------------------------------------------

std::string to_string(LrOrdering ordering) {
  switch (ordering) {
    case LrOrdering::less: return "less";
    case LrOrdering::greater: return "greater";
    case LrOrdering::equal: return "equal";
    case LrOrdering::incomparable: return "incomparable";
  }
  return "unknown";
}

LrOrdering lr_compare(const Belief& mu1, const Belief& mu2) {
  if (mu1.index() != mu2.index()) throw InvalidArgument("lr_compare: beliefs of different variants");

  auto classify = [](bool up, bool down) {
    if (up && down) return LrOrdering::equal;
    if (up) return LrOrdering::less;
    if (down) return LrOrdering::greater;
    return LrOrdering::incomparable;
  };

  if (const auto* d1 = std::get_if<DiscretePosterior>(&mu1)) {
    const auto& d2 = std::get<DiscretePosterior>(mu2);
    if (d1->theta() != d2.theta()) throw InvalidArgument("lr_compare: parameter grids differ");
    return classify(nondecreasing_ratio(d1->weights(), d2.weights()),
                    nondecreasing_ratio(d2.weights(), d1->weights()));
  }
  if (const auto* b1 = std::get_if<BetaBernoulli>(&mu1)) {
    const auto& b2 = std::get<BetaBernoulli>(mu2);
    // Beta(a,b) <=_lr Beta(a',b') iff a <= a' and b >= b'.
    return classify(b1->alpha <= b2.alpha && b1->beta >= b2.beta,
                    b2.alpha <= b1->alpha && b2.beta >= b1->beta);
  }
  const auto& g1 = std::get<InvGammaExp>(mu1);
  const auto& g2 = std::get<InvGammaExp>(mu2);
  // Posterior density ~ theta^{-(A+1)} e^{-B/theta}; the ratio g2/g1 is
  // nondecreasing iff A1 >= A2 and B1 <= B2.
  return classify(g1.shape() >= g2.shape() && g1.scale() <= g2.scale(),
                  g2.shape() >= g1.shape() && g2.scale() <= g1.scale());
}

BeliefKey belief_key(const Belief& belief) {
  return std::visit(overloaded{
                        [](const DiscretePosterior& d) {
                          BeliefKey key{0};
                          for (double w : d.weights()) key.push_back(quantize(w));
                          return key;
                        },
                        [](const BetaBernoulli& b) {
                          return BeliefKey{1, quantize(b.alpha), quantize(b.beta)};
                        },
                        [](const InvGammaExp& g) {
                          return BeliefKey{2, quantize(g.a), quantize(g.b), quantize(g.s), g.n};
                        },
                    },
                    belief);
}

std::string describe(const Belief& belief) {
  return std::visit(overloaded{
                        [](const DiscretePosterior& d) {
                          std::string out = "discrete[";
                          for (std::size_t i = 0; i < d.weights().size(); ++i) {
                            if (i) out += ' ';
                            out += fmt(d.theta()[i]) + ":" + fmt(d.weights()[i]);
                          }
                          return out + "]";
                        },
                        [](const BetaBernoulli& b) {
                          return "beta(" + fmt(b.alpha) + "," + fmt(b.beta) + ")";
                        },
                        [](const InvGammaExp& g) {
                          return "igexp(a=" + fmt(g.a) + ",b=" + fmt(g.b) + ",s=" + fmt(g.s) +
                                 ",n=" + std::to_string(g.n) + ")";
                        },
                    },
                    belief);
}

double predictive_mean(const Belief& belief) {
  if (const auto* g = std::get_if<InvGammaExp>(&belief)) {
    return SecondOrderBeta{g->shape(), g->scale()}.mean();
  }
  return predictive(belief).rule.mean();
}

}  // namespace stopwise
