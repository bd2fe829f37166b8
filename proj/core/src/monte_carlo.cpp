#include <algorithm>
#include <cmath>
#include <thread>

#include "stopwise/errors.hpp"
#include "stopwise/oracle.hpp"
#include "stopwise/rng.hpp"

namespace stopwise {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53U;
constexpr std::uint32_t kM1 = 0xCD9E8D57U;
constexpr std::uint32_t kW0 = 0x9E3779B9U;
constexpr std::uint32_t kW1 = 0xBB67AE85U;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

PhiloxStream::PhiloxStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0U, 0U, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

std::uint32_t PhiloxStream::next_u32() noexcept {
  if (used_ == 4) {
    buf_ = Philox4x32::block(ctr_, key_);
    if (++ctr_[0] == 0) ++ctr_[1];
    used_ = 0;
  }
  return buf_[used_++];
}

double PhiloxStream::next_double() noexcept {
  const std::uint32_t a = next_u32() >> 5;
  const std::uint32_t b = next_u32() >> 6;
  return (a * 67108864.0 + b) * (1.0 / 9007199254740992.0);
}

// ---------------------------------------------------------------------------

namespace {

struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
};

/// Runs sample(stream) for every sample, one Philox substream per chunk, and
/// merges chunk moments in chunk order.
template <class Sampler>
McEstimate run_chunks(const McOptions& options, Sampler&& sample) {
  if (options.samples < 1) throw InvalidArgument("monte_carlo_eval: samples must be >= 1");
  if (options.chunk < 1) throw InvalidArgument("monte_carlo_eval: chunk must be >= 1");
  const std::uint64_t chunks = (options.samples + options.chunk - 1) / options.chunk;
  std::vector<Moments> parts(chunks);

  int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = static_cast<int>(std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::max(threads, 1)), 1, chunks));

  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](int t) {
    try {
      for (std::uint64_t c = static_cast<std::uint64_t>(t); c < chunks; c += static_cast<std::uint64_t>(threads)) {
        PhiloxStream stream(options.seed, c);
        const std::uint64_t begin = c * options.chunk;
        const std::uint64_t end = std::min(options.samples, begin + options.chunk);
        for (std::uint64_t i = begin; i < end; ++i) parts[c].add(sample(stream));
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Moments total;
  for (const Moments& m : parts) total.merge(m);
  McEstimate est;
  est.mean = total.mean;
  est.count = total.n;
  est.seed = options.seed;
  est.std_error = total.n > 1 ? std::sqrt(total.m2 / static_cast<double>(total.n - 1) / static_cast<double>(total.n)) : 0.0;
  return est;
}

double sample_offer(const Belief& mu, double u) {
  if (const auto* b = std::get_if<BetaBernoulli>(&mu)) return u < b->alpha / (b->alpha + b->beta) ? 1.0 : 0.0;
  if (const auto* g = std::get_if<InvGammaExp>(&mu)) return SecondOrderBeta{g->shape(), g->scale()}.quantile(u);
  const DiscreteDist law = std::get<DiscreteDist>(predictive(mu).law);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < law.size(); ++i) {
    if (!(law.weights()[i] > 0.0)) continue;
    last = i;
    acc += law.weights()[i];
    if (u < acc) return law.atoms()[i];
  }
  return law.atoms()[last];
}

}  // namespace

McEstimate monte_carlo_eval(ReservationSolver& solver, const McOptions& options) {
  const HouseModel& m = solver.model();
  const std::optional<int> horizon = m.horizon;
  return run_chunks(options, [&](PhiloxStream& rng) {
    Belief mu = m.prior;
    double offer = m.initial_offer;
    for (int n = 0;; ++n) {
      if (horizon && n >= *horizon) return m.utility(offer - n * m.cost);
      if (offer >= solver.level(n, mu)) return m.utility(offer - n * m.cost);
      if (n >= options.max_stages) {
        throw BudgetExceeded("monte_carlo_eval: path exceeded " + std::to_string(options.max_stages) + " stages");
      }
      offer = sample_offer(mu, rng.next_double());
      mu = update(mu, offer);
    }
  });
}

McEstimate monte_carlo_eval(const PartiallyObservableModel& model, const Utility& u, const PolicyTree& policy,
                            const McOptions& options) {
  model.validate();
  if (policy.nodes.empty()) throw InvalidArgument("monte_carlo_eval: empty policy");
  const std::size_t ny = model.ny();
  const std::size_t nx = model.nx();

  auto draw_index = [](const std::vector<double>& w, double r) {
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!(w[i] > 0.0)) continue;
      last = i;
      acc += w[i];
      if (r < acc) return i;
    }
    return last;
  };

  return run_chunks(options, [&](PhiloxStream& rng) {
    std::size_t y = draw_index(model.prior, rng.next_double());
    std::size_t id = 0;
    for (;;) {
      const PolicyNode& node = policy.nodes[id];
      if (node.stop || node.children.empty()) {
        return u(model.stopping_reward[node.state.x] + node.state.s);
      }
      // Joint draw of (x', y') from the flattened row q(., . | x, y).
      const auto& row = model.q[node.state.x][y];
      const double r = rng.next_double();
      double acc = 0.0;
      std::size_t x2 = 0, y2 = 0;
      bool found = false;
      for (std::size_t a = 0; a < nx && !found; ++a) {
        for (std::size_t b = 0; b < ny; ++b) {
          if (!(row[a][b] > 0.0)) continue;
          x2 = a;
          y2 = b;
          acc += row[a][b];
          if (r < acc) {
            found = true;
            break;
          }
        }
      }
      y = y2;
      auto it = std::find_if(node.children.begin(), node.children.end(),
                             [&](const PolicyChild& c) { return c.x == static_cast<int>(x2); });
      if (it == node.children.end()) throw Error("monte_carlo_eval: sampled transition left the policy tree");
      id = it->node;
    }
  });
}

}  // namespace stopwise
