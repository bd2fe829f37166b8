#include "stopwise/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "stopwise/errors.hpp"

namespace stopwise {

namespace {

/// Nodes and weights on [-1, 1].
QuadratureRule legendre_reference(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi's initial guess, then Newton on P_n.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

const QuadratureRule& cached_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<const QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<const QuadratureRule>(legendre_reference(n));
  return *slot;
}

}  // namespace

QuadratureRule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw InvalidArgument("gauss_legendre: need at least one node");
  if (!(hi > lo)) throw InvalidArgument("gauss_legendre: empty interval");

  const QuadratureRule& ref = cached_legendre(n);
  const double mid = 0.5 * (hi + lo);
  const double half = 0.5 * (hi - lo);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * ref.nodes[i];
    rule.weights[i] = half * ref.weights[i];
  }
  return rule;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw InvalidArgument("gauss_hermite: need at least one node");

  // pi^{-1/4}
  constexpr double kPim4 = 0.7511255444649425;

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    double pp = 0.0;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      // Orthonormal Hermite recurrence.
      double p1 = kPim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-14 * std::max(1.0, std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) throw ConvergenceError("gauss_hermite: Newton iteration failed", 0.0);
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

}  // namespace stopwise
