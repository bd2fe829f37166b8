#include "stopwise/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "stopwise/errors.hpp"
#include "stopwise/quadrature.hpp"

namespace stopwise {

std::string to_string(UtilityFamily family) {
  switch (family) {
    case UtilityFamily::linear: return "linear";
    case UtilityFamily::exponential: return "exponential";
    case UtilityFamily::power: return "power";
    case UtilityFamily::log: return "log";
  }
  return "unknown";
}

UtilityFamily utility_family_from_string(const std::string& name) {
  if (name == "linear") return UtilityFamily::linear;
  if (name == "exponential") return UtilityFamily::exponential;
  if (name == "power") return UtilityFamily::power;
  if (name == "log") return UtilityFamily::log;
  throw InvalidArgument("unknown utility family '" + name + "'");
}

Utility Utility::linear() { return Utility(UtilityFamily::linear, 0.0, 1.0, 0.0); }

Utility Utility::exponential(double gamma) {
  if (!(gamma < 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("exponential utility requires gamma < 0");
  }
  return Utility(UtilityFamily::exponential, gamma, 0.0, 0.0);
}

Utility Utility::power(double exponent, double shift) {
  if (!(exponent > 0.0 && exponent < 1.0)) {
    throw InvalidArgument("power utility requires exponent in (0,1)");
  }
  if (!std::isfinite(shift)) throw InvalidArgument("power utility shift must be finite");
  return Utility(UtilityFamily::power, 0.0, exponent, shift);
}

Utility Utility::log(double shift) {
  if (!std::isfinite(shift)) throw InvalidArgument("log utility shift must be finite");
  return Utility(UtilityFamily::log, 0.0, 0.0, shift);
}

double Utility::domain_lower() const noexcept {
  switch (family_) {
    case UtilityFamily::power:
    case UtilityFamily::log: return -shift_;
    default: return -std::numeric_limits<double>::infinity();
  }
}

bool Utility::in_domain(double x) const noexcept {
  if (std::isnan(x)) return false;
  return x > domain_lower();
}

void Utility::check_domain(double x) const {
  if (!in_domain(x)) {
    std::ostringstream msg;
    msg << describe() << ": wealth " << x << " outside domain (" << domain_lower() << ", inf)";
    throw DomainError(msg.str());
  }
}

double Utility::operator()(double x) const {
  check_domain(x);
  switch (family_) {
    case UtilityFamily::linear: return x;
    case UtilityFamily::exponential: return std::exp(gamma_ * x) / gamma_;
    case UtilityFamily::power: return std::pow(x + shift_, exponent_);
    case UtilityFamily::log: return std::log(x + shift_);
  }
  return x;
}

double Utility::inverse(double u) const {
  switch (family_) {
    case UtilityFamily::linear: return u;
    case UtilityFamily::exponential:
      if (!(u < 0.0)) throw DomainError(describe() + ": inverse needs a negative utility value");
      return std::log(gamma_ * u) / gamma_;
    case UtilityFamily::power:
      if (!(u > 0.0)) throw DomainError(describe() + ": inverse needs a positive utility value");
      return std::pow(u, 1.0 / exponent_) - shift_;
    case UtilityFamily::log:
      if (!std::isfinite(u)) throw DomainError(describe() + ": inverse needs a finite utility value");
      return std::exp(u) - shift_;
  }
  return u;
}

double Utility::derivative(double x) const {
  check_domain(x);
  switch (family_) {
    case UtilityFamily::linear: return 1.0;
    case UtilityFamily::exponential: return std::exp(gamma_ * x);
    case UtilityFamily::power: return exponent_ * std::pow(x + shift_, exponent_ - 1.0);
    case UtilityFamily::log: return 1.0 / (x + shift_);
  }
  return 1.0;
}

double Utility::second_derivative(double x) const {
  check_domain(x);
  switch (family_) {
    case UtilityFamily::linear: return 0.0;
    case UtilityFamily::exponential: return gamma_ * std::exp(gamma_ * x);
    case UtilityFamily::power:
      return exponent_ * (exponent_ - 1.0) * std::pow(x + shift_, exponent_ - 2.0);
    case UtilityFamily::log: return -1.0 / ((x + shift_) * (x + shift_));
  }
  return 0.0;
}

double Utility::arrow_pratt(double x) const {
  check_domain(x);
  switch (family_) {
    case UtilityFamily::linear: return 0.0;
    case UtilityFamily::exponential: return -gamma_;
    case UtilityFamily::power: return (1.0 - exponent_) / (x + shift_);
    case UtilityFamily::log: return 1.0 / (x + shift_);
  }
  return 0.0;
}

bool Utility::is_dara() const noexcept {
  return family_ == UtilityFamily::power || family_ == UtilityFamily::log;
}

std::string Utility::describe() const {
  std::ostringstream out;
  out << to_string(family_);
  switch (family_) {
    case UtilityFamily::exponential: out << "(gamma=" << gamma_ << ")"; break;
    case UtilityFamily::power: out << "(exponent=" << exponent_ << ", shift=" << shift_ << ")"; break;
    case UtilityFamily::log: out << "(shift=" << shift_ << ")"; break;
    default: break;
  }
  return out.str();
}

// ---------------------------------------------------------------------------

DiscreteDist::DiscreteDist(std::vector<double> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty()) throw InvalidArgument("DiscreteDist: no atoms");
  if (atoms_.size() != weights_.size()) {
    throw InvalidArgument("DiscreteDist: atoms and weights differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (!std::isfinite(atoms_[i])) throw InvalidArgument("DiscreteDist: non-finite atom");
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
      throw InvalidArgument("DiscreteDist: weights must be finite and nonnegative");
    }
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > kNormalizationTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "DiscreteDist: weights sum to " << total << ", not 1";
    throw InvalidArgument(msg.str());
  }
}

DiscreteDist DiscreteDist::point_mass(double value) { return DiscreteDist({value}, {1.0}); }

DiscreteDist DiscreteDist::uniform(std::vector<double> atoms) {
  const std::size_t n = atoms.size();
  if (n == 0) throw InvalidArgument("DiscreteDist::uniform: no atoms");
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  return DiscreteDist(std::move(atoms), std::move(weights));
}

double DiscreteDist::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) m += weights_[i] * atoms_[i];
  return m;
}

double DiscreteDist::min_support() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (weights_[i] > 0.0) m = std::min(m, atoms_[i]);
  }
  return m;
}

double DiscreteDist::max_support() const {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (weights_[i] > 0.0) m = std::max(m, atoms_[i]);
  }
  return m;
}

double DiscreteDist::cdf(double x) const {
  double p = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i] <= x) p += weights_[i];
  }
  return p;
}

DiscreteDist DiscreteDist::shifted(double offset) const {
  std::vector<double> atoms = atoms_;
  for (double& a : atoms) a += offset;
  return DiscreteDist(std::move(atoms), weights_);
}

DiscreteDist DiscreteDist::scaled(double factor) const {
  std::vector<double> atoms = atoms_;
  for (double& a : atoms) a *= factor;
  return DiscreteDist(std::move(atoms), weights_);
}

// ---------------------------------------------------------------------------

double expected_utility(const Utility& u, const DiscreteDist& x) {
  double eu = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.weights()[i] > 0.0) eu += x.weights()[i] * u(x.atoms()[i]);
  }
  return eu;
}

double entropic_ce(double gamma, const DiscreteDist& x) {
  if (!(gamma < 0.0)) throw InvalidArgument("entropic_ce: gamma must be negative");
  const double lo = x.min_support();
  const double hi = x.max_support();
  // Shift by the smallest atom so every exponent is <= 0.
  if (-gamma * (hi - lo) <= 1.0) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = x.weights()[i];
      if (w > 0.0) s += w * std::expm1(gamma * (x.atoms()[i] - lo));
    }
    return lo + std::log1p(s) / gamma;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = x.weights()[i];
    if (w > 0.0) s += w * std::exp(gamma * (x.atoms()[i] - lo));
  }
  return lo + std::log(s) / gamma;
}

double certainty_equivalent(const Utility& u, const DiscreteDist& x) {
  switch (u.family()) {
    case UtilityFamily::linear: return x.mean();
    case UtilityFamily::exponential: return entropic_ce(u.gamma(), x);
    default: break;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.weights()[i] > 0.0 && !u.in_domain(x.atoms()[i])) {
      std::ostringstream msg;
      msg << "certainty_equivalent: atom " << x.atoms()[i] << " outside domain of " << u.describe();
      throw DomainError(msg.str());
    }
  }
  return u.inverse(expected_utility(u, x));
}

double entropic_ce_normal(double gamma, double mu, double sigma2) {
  if (!(sigma2 >= 0.0)) throw InvalidArgument("entropic_ce_normal: sigma2 must be >= 0");
  return mu + 0.5 * gamma * sigma2;
}

DiscreteDist normal_discretization(double mu, double sigma2, int nodes) {
  if (!(sigma2 >= 0.0)) throw InvalidArgument("normal_discretization: sigma2 must be >= 0");
  const QuadratureRule rule = gauss_hermite(nodes);
  const double scale = std::sqrt(2.0 * sigma2);
  std::vector<double> atoms(rule.nodes.size());
  std::vector<double> weights(rule.nodes.size());
  const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    atoms[i] = mu + scale * rule.nodes[i];
    weights[i] = rule.weights[i] / total;
  }
  return DiscreteDist(std::move(atoms), std::move(weights));
}

bool stochastically_leq(const DiscreteDist& x, const DiscreteDist& y, double tol) {
  std::vector<double> points(x.atoms().begin(), x.atoms().end());
  points.insert(points.end(), y.atoms().begin(), y.atoms().end());
  for (double t : points) {
    if (x.cdf(t) + tol < y.cdf(t)) return false;
  }
  return true;
}

std::string to_string(RiskOrdering ordering) {
  switch (ordering) {
    case RiskOrdering::u_more_averse: return "U_more_averse";
    case RiskOrdering::w_more_averse: return "W_more_averse";
    case RiskOrdering::incomparable: return "incomparable";
    case RiskOrdering::equal: return "equal";
  }
  return "unknown";
}

RiskAversionReport compare_risk_aversion(const Utility& u, const Utility& w,
                                         std::span<const double> grid) {
  if (grid.empty()) throw InvalidArgument("compare_risk_aversion: empty grid");
  constexpr double kTol = 1e-12;

  RiskAversionReport report;
  report.grid.assign(grid.begin(), grid.end());
  bool all_ge = true;
  bool all_le = true;
  for (double x : grid) {
    const double lu = u.arrow_pratt(x);
    const double lw = w.arrow_pratt(x);
    report.l_u.push_back(lu);
    report.l_w.push_back(lw);
    if (lu < lw - kTol) all_ge = false;
    if (lu > lw + kTol) all_le = false;
  }
  if (all_ge && all_le) {
    report.ordering = RiskOrdering::equal;
  } else if (all_ge) {
    report.ordering = RiskOrdering::u_more_averse;
  } else if (all_le) {
    report.ordering = RiskOrdering::w_more_averse;
  } else {
    report.ordering = RiskOrdering::incomparable;
  }
  return report;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 1) throw InvalidArgument("linear_grid: need at least one point");
  if (points == 1) return {lo};
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  }
  return grid;
}

}  // namespace stopwise
