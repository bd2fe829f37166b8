#include "oracles.hpp"

#include <cmath>
#include <algorithm>
#include <map>
#include <tuple>
#include <numeric>
#include <utility>

namespace stopwise::testing {

std::vector<double> conditional_law_by_paths(const PartiallyObservableModel& model, const std::vector<int>& history) {
  const std::size_t ny = model.hidden_labels.size();
  const std::size_t n = history.size();
  std::vector<double> law(ny, 0.0);
  std::vector<std::size_t> ys(n + 1, 0);
  for (;;) {
    double p = model.prior[ys[0]];
    int x = model.x0;
    for (std::size_t k = 0; k < n; ++k) {
      p *= model.q[std::size_t(x)][ys[k]][std::size_t(history[k])][ys[k + 1]];
      x = history[k];
    }
    law[ys[n]] += p;
    std::size_t j = 0;
    while (j <= n && ++ys[j] == ny) ys[j++] = 0;
    if (j > n) break;
  }
  const double total = std::accumulate(law.begin(), law.end(), 0.0);
  if (!(total > 0.0)) return {};
  for (double& v : law) v /= total;
  return law;
}

std::vector<double> posterior_by_bayes(const DiscretePosterior& prior, const std::vector<double>& offers) {
  std::vector<double> w = prior.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (double x : offers) {
      double q = 0.0;
      if (const auto* t = std::get_if<FiniteTableOffers>(&prior.likelihood())) {
        for (std::size_t k = 0; k < t->atoms.size(); ++k) {
          if (t->atoms[k] == x) q = t->probs[i][k];
        }
      } else {
        const double theta = prior.theta()[i];
        q = x == 1.0 ? theta : (x == 0.0 ? 1.0 - theta : 0.0);
      }
      w[i] *= q;
    }
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

namespace {

long double level_rec(long double gamma, long double cost, int k, int a, int b,
                      std::map<std::tuple<int, int, int>, long double>& memo) {
  if (k == 0) return -INFINITY;
  const auto key = std::make_tuple(k, a, b);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  const long double p = static_cast<long double>(a) / (a + b);
  const long double z1 = std::max(1.0L, level_rec(gamma, cost, k - 1, a + 1, b, memo));
  const long double z0 = std::max(0.0L, level_rec(gamma, cost, k - 1, a, b + 1, memo));
  // (1/gamma) ln(p e^{gamma z1} + (1-p) e^{gamma z0}) around z0.
  const long double ce = z0 + std::log1p(p * std::expm1(gamma * (z1 - z0))) / gamma;
  const long double level = -cost + ce;
  memo[key] = level;
  return level;
}

}  // namespace

long double bernoulli_level(double gamma, double cost, int k, int a, int b) {
  std::map<std::tuple<int, int, int>, long double> memo;
  return level_rec(gamma, cost, k, a, b, memo);
}

int bernoulli_rejection_count(double gamma, double cost, int horizon) {
  std::map<std::tuple<int, int, int>, long double> memo;
  for (int n = 0; n < horizon; ++n) {
    const int zeros = n;  // stage n has seen x_1..x_n, all zero
    if (0.0L >= level_rec(gamma, cost, horizon - n, 1, 1 + zeros, memo)) return n;
  }
  return horizon;
}

double known_bernoulli_fixed_point(double gamma, double cost, double p) {
  auto f = [&](double x) {
    const double rhs = -cost + std::log(p * std::exp(gamma * std::max(1.0, x)) +
                                        (1.0 - p) * std::exp(gamma * std::max(0.0, x))) / gamma;
    return x - rhs;
  };
  double lo = -cost, hi = 1.0 - cost;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double integrate_second_order_beta(double shape, double scale, double (*f)(double, void*), void* ctx) {
  // x = scale * (u^{-1/shape} - 1) maps the survival probability u in (0,1]
  // onto [0, inf) with dQ = du. The substitution u = v^4 flattens the
  // singularity at u = 0 for integrands growing like x.
  const int n = 200000;
  const double h = 1.0 / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = (i + 0.5) * h;
    total += f(scale * (std::pow(v, -4.0 / shape) - 1.0), ctx) * 4.0 * v * v * v;
  }
  return total * h;
}

}  // namespace stopwise::testing
