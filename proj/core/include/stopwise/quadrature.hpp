#pragma once

#include <vector>

namespace stopwise {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [lo, hi].
QuadratureRule gauss_legendre(int n, double lo = -1.0, double hi = 1.0);

/// Gauss-Hermite rule for the weight e^{-x^2}.
QuadratureRule gauss_hermite(int n);

}  // namespace stopwise
