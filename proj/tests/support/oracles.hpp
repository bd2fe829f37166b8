#pragma once

#include <vector>

#include <stopwise/belief.hpp>
#include <stopwise/stopping.hpp>

// Reference computations written directly from the model definitions. They
// share no code with the library beyond its data types.
namespace stopwise::testing {

/// P(Y_n = . | X_0 = x0, X_1..X_n = history) by summing over every hidden
/// path y_0..y_n. Returns an empty vector for zero-probability histories.
std::vector<double> conditional_law_by_paths(const PartiallyObservableModel& model, const std::vector<int>& history);

/// Posterior weights w_i prod_k q(x_k | theta_i), renormalized.
std::vector<double> posterior_by_bayes(const DiscretePosterior& prior, const std::vector<double>& offers);

/// Exponential-utility reservation level with k steps to go for Bernoulli
/// offers under a Beta(a, b) belief, by direct recursion in long double.
long double bernoulli_level(double gamma, double cost, int k, int a, int b);

/// Zeros rejected along the all-zeros path for the uniform-prior model.
int bernoulli_rejection_count(double gamma, double cost, int horizon);

/// Fixed point of x = -c + (1/gamma) ln(p e^{gamma max(1,x)} + (1-p) e^{gamma max(0,x)})
/// by bisection on [-c, 1 - c].
double known_bernoulli_fixed_point(double gamma, double cost, double p);

/// E f(X) for X ~ SecondOrderBeta(shape, scale): midpoint rule in the
/// survival coordinate u = (scale / (x + scale))^shape, with u = v^4.
double integrate_second_order_beta(double shape, double scale, double (*f)(double, void*), void* ctx);

}  // namespace stopwise::testing
