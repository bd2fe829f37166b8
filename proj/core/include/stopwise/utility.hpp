#pragma once

#include <span>
#include <string>
#include <vector>

namespace stopwise {

enum class UtilityFamily { linear, exponential, power, log };

std::string to_string(UtilityFamily family);
UtilityFamily utility_family_from_string(const std::string& name);

/// Concave, strictly increasing utility with closed-form inverse and
/// Arrow-Pratt function.
///
/// Families:
///   linear       U(x) = x
///   exponential  U(x) = e^{gamma x} / gamma,   gamma < 0
///   power        U(x) = (x + shift)^exponent,  exponent in (0,1), x > -shift
///   log          U(x) = ln(x + shift),         x > -shift
class Utility {
 public:
  static Utility linear();
  static Utility exponential(double gamma);
  static Utility power(double exponent, double shift = 0.0);
  static Utility log(double shift = 0.0);

  UtilityFamily family() const noexcept { return family_; }
  double gamma() const noexcept { return gamma_; }
  double exponent() const noexcept { return exponent_; }
  double shift() const noexcept { return shift_; }

  /// Open lower end of the domain; -inf for linear and exponential.
  double domain_lower() const noexcept;
  bool in_domain(double x) const noexcept;

  double operator()(double x) const;
  double inverse(double u) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  /// l_U(x) = -U''(x) / U'(x).
  double arrow_pratt(double x) const;

  /// Decreasing absolute risk aversion that is not constant (log, power).
  bool is_dara() const noexcept;

  std::string describe() const;

  friend bool operator==(const Utility&, const Utility&) = default;

 private:
  Utility(UtilityFamily family, double gamma, double exponent, double shift)
      : family_(family), gamma_(gamma), exponent_(exponent), shift_(shift) {}

  void check_domain(double x) const;

  UtilityFamily family_ = UtilityFamily::linear;
  double gamma_ = 0.0;
  double exponent_ = 0.0;
  double shift_ = 0.0;
};

/// Finite distribution on the real line. Duplicate atoms are allowed.
class DiscreteDist {
 public:
  static constexpr double kNormalizationTolerance = 1e-12;

  DiscreteDist(std::vector<double> atoms, std::vector<double> weights);

  static DiscreteDist point_mass(double value);
  static DiscreteDist uniform(std::vector<double> atoms);

  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  double mean() const;
  /// Smallest / largest atom carrying positive weight.
  double min_support() const;
  double max_support() const;
  double cdf(double x) const;

  DiscreteDist shifted(double offset) const;
  DiscreteDist scaled(double factor) const;

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

double expected_utility(const Utility& u, const DiscreteDist& x);

/// rho_U(X) = U^{-1}(E[U(X)]). Zero-weight atoms are ignored.
double certainty_equivalent(const Utility& u, const DiscreteDist& x);

/// (1/gamma) ln E[e^{gamma X}], evaluated without cancellation for |gamma|
/// down to the subnormal range.
double entropic_ce(double gamma, const DiscreteDist& x);

/// Closed form mu + gamma sigma^2 / 2 for X ~ N(mu, sigma^2).
double entropic_ce_normal(double gamma, double mu, double sigma2);

/// Gauss-Hermite discretization of N(mu, sigma^2).
DiscreteDist normal_discretization(double mu, double sigma2, int nodes = 64);

/// X <=_st Y, checked by comparing CDFs at the union of both supports.
bool stochastically_leq(const DiscreteDist& x, const DiscreteDist& y,
                        double tol = 1e-12);

enum class RiskOrdering { u_more_averse, w_more_averse, incomparable, equal };

std::string to_string(RiskOrdering ordering);

struct RiskAversionReport {
  std::vector<double> grid;
  std::vector<double> l_u;
  std::vector<double> l_w;
  RiskOrdering ordering = RiskOrdering::incomparable;
};

RiskAversionReport compare_risk_aversion(const Utility& u, const Utility& w,
                                         std::span<const double> grid);

/// Evenly spaced grid with `points` nodes on [lo, hi].
std::vector<double> linear_grid(double lo, double hi, int points = 256);

}  // namespace stopwise
