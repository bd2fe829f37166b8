#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include <stopwise/errors.hpp>
#include <stopwise/house_selling.hpp>
#include <stopwise/io.hpp>
#include <stopwise/oracle.hpp>
#include <stopwise/stopping.hpp>

#include "http_server.hpp"

namespace stopwise::cli {

namespace {

struct Common {
  std::string model_path;
  int horizon = -1;
  std::string utility;
  std::string format;
  std::string output;
};

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// "linear" | "exponential:G" | "power:E[:shift]" | "log[:shift]".
Utility parse_utility(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.empty()) throw InvalidArgument("--utility: empty");
  auto num = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      const double v = std::stod(parts.at(i), &used);
      if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
      return v;
    } catch (const std::exception&) {
      throw InvalidArgument("--utility: bad number in '" + text + "'");
    }
  };
  const std::string& f = parts[0];
  if (f == "linear" && parts.size() == 1) return Utility::linear();
  if (f == "exponential" && parts.size() == 2) return Utility::exponential(num(1));
  if (f == "power" && (parts.size() == 2 || parts.size() == 3)) {
    return Utility::power(num(1), parts.size() == 3 ? num(2) : 0.0);
  }
  if (f == "log" && parts.size() <= 2) return Utility::log(parts.size() == 2 ? num(1) : 0.0);
  throw InvalidArgument("--utility: expected linear, exponential:G, power:E[:shift] or log[:shift], got '" + text + "'");
}

ModelFile load(const Common& c) {
  if (!std::filesystem::exists(c.model_path)) throw InvalidArgument("model file not found: " + c.model_path);
  ModelFile file = load_model_file(c.model_path);
  if (auto* h = std::get_if<HouseModel>(&file)) {
    if (c.horizon >= 0) h->horizon = c.horizon;
    if (!c.utility.empty()) h->utility = parse_utility(c.utility);
    h->validate();
  } else {
    auto& p = std::get<PomdpFile>(file);
    if (!c.utility.empty()) p.utility = parse_utility(c.utility);
    if (!p.utility) p.utility = Utility::linear();
  }
  return file;
}

int pomdp_horizon(const Common& c, const char* command) {
  if (c.horizon < 0) throw InvalidArgument(std::string(command) + ": --N is required for pomdp models");
  return c.horizon;
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw InvalidArgument("cannot write " + path);
      out_ = &file_;
    }
  }
  std::ostream& operator*() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

void write_csv(const Common& c, const std::string& command, const std::string& body, std::ostream& out) {
  Sink sink(c.output, out);
  *sink << "# stopwise " << command << " generated " << timestamp() << '\n' << body;
}

void write_json(const Common& c, const json& j, std::ostream& out) {
  Sink sink(c.output, out);
  *sink << j.dump(2) << '\n';
}

void write_scalar(const Common& c, double v, std::ostream& out) {
  Sink sink(c.output, out);
  *sink << format_number(v) << '\n';
}

int thread_count(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("STOPWISE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    throw InvalidArgument("STOPWISE_THREADS must be a positive integer");
  }
  return 0;
}

void add_common(CLI::App* app, Common& c, bool model_required, const std::string& default_format,
                std::vector<std::string> formats) {
  auto* m = app->add_option("--model", c.model_path, "Model JSON file");
  if (model_required) m->required();
  app->add_option("--N", c.horizon, "Horizon override")->check(CLI::NonNegativeNumber);
  app->add_option("--utility", c.utility, "Utility override: linear | exponential:G | power:E[:shift] | log[:shift]");
  c.format = default_format;
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember(std::move(formats)));
  app->add_option("--output,-o", c.output, "Output file (default stdout)");
}

// ---------------------------------------------------------------------------

int cmd_solve(const Common& c, int budget, std::ostream& out) {
  ModelFile file = load(c);
  PartiallyObservableModel model;
  Utility u = Utility::linear();
  int horizon = 0;
  if (const auto* h = std::get_if<HouseModel>(&file)) {
    if (!has_finite_support(h->offers)) {
      throw InvalidArgument("solve: house models need a finite offer family; use 'reservation'");
    }
    model = encode_as_pomdp(*h);
    u = h->utility;
    horizon = h->finite_horizon();
  } else {
    const auto& p = std::get<PomdpFile>(file);
    model = p.model;
    u = *p.utility;
    horizon = pomdp_horizon(c, "solve");
  }
  SolveOptions options;
  options.node_budget = static_cast<std::size_t>(budget);
  const SolveResult result = value_iteration(model, u, horizon, options);
  if (c.format == "json") {
    json j = to_json(result.report);
    j["policy"] = to_json(result.policy);
    write_json(c, j, out);
  } else if (c.format == "csv") {
    write_csv(c, "solve", to_csv(result.policy), out);
  } else {
    write_scalar(c, result.report.value, out);
  }
  return 0;
}

int cmd_oracle(const Common& c, std::ostream& out) {
  ModelFile file = load(c);
  BruteForceReport report;
  if (const auto* h = std::get_if<HouseModel>(&file)) {
    report = brute_force_house(*h);
  } else {
    const auto& p = std::get<PomdpFile>(file);
    report = brute_force_value(p.model, *p.utility, pomdp_horizon(c, "oracle"));
  }
  if (c.format == "json") {
    write_json(c, to_json(report), out);
  } else {
    write_scalar(c, report.value, out);
  }
  return 0;
}

int cmd_reservation(const Common& c, bool steps_to_go, std::ostream& out) {
  ModelFile file = load(c);
  const auto* h = std::get_if<HouseModel>(&file);
  if (!h) throw InvalidArgument("reservation: needs a house model");
  ReservationTable table;
  if (h->infinite()) {
    table = reservation_level_infinite(*h);
  } else if (steps_to_go) {
    table = reservation_levels_exp(*h);
  } else {
    table = reservation_levels_finite(*h);
  }
  if (c.format == "json") {
    write_json(c, to_json(table), out);
  } else {
    write_csv(c, "reservation", to_csv(table), out);
  }
  return 0;
}

struct InfiniteArgs {
  double tol = 1e-10;
  int max_iterations = 100'000;
  int depth = 2;
};

int cmd_infinite(const Common& c, const InfiniteArgs& a, std::ostream& out) {
  ModelFile file = load(c);
  if (auto* h = std::get_if<HouseModel>(&file)) {
    h->horizon.reset();
    InfiniteOptions options;
    options.tol = a.tol;
    options.max_iterations = a.max_iterations;
    const ReservationTable table = reservation_level_infinite(*h, options, a.depth);
    if (c.format == "json") {
      write_json(c, to_json(table), out);
    } else {
      write_csv(c, "infinite", to_csv(table), out);
    }
    return 0;
  }
  const auto& p = std::get<PomdpFile>(file);
  const HorizonLimit limit = horizon_limit(p.model, *p.utility, a.tol, a.max_iterations, a.depth);
  if (!limit.converged) {
    throw ConvergenceError("infinite: value did not settle within " + std::to_string(a.max_iterations) + " stages",
                           limit.last_increment);
  }
  json j{{"value", limit.value}, {"horizon", limit.horizon}, {"last_increment", limit.last_increment}};
  if (c.format == "csv") {
    write_csv(c, "infinite", "value,horizon,last_increment\n" + format_number(limit.value) + ',' +
                                 std::to_string(limit.horizon) + ',' + format_number(limit.last_increment) + '\n',
              out);
  } else {
    write_json(c, j, out);
  }
  return 0;
}

struct SimulateArgs {
  std::uint64_t samples = 100'000;
  std::uint64_t seed = 1;
  int threads = 0;
  int max_stages = 100'000;
};

int cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out) {
  ModelFile file = load(c);
  McOptions options;
  options.samples = a.samples;
  options.seed = a.seed;
  options.threads = thread_count(a.threads);
  options.max_stages = a.max_stages;
  McEstimate est;
  double exact = 0.0;
  json model_json;
  if (const auto* h = std::get_if<HouseModel>(&file)) {
    ReservationSolver solver(*h);
    est = monte_carlo_eval(solver, options);
    exact = has_finite_support(h->offers) && !h->infinite() ? policy_value(solver)
                                                             : std::numeric_limits<double>::quiet_NaN();
    model_json = to_json(*h);
  } else {
    const auto& p = std::get<PomdpFile>(file);
    const SolveResult solved = value_iteration(p.model, *p.utility, pomdp_horizon(c, "simulate"));
    est = monte_carlo_eval(p.model, *p.utility, solved.policy, options);
    exact = solved.report.value;
    model_json = to_json(p.model, p.utility);
  }
  json j = to_json(est);
  j["dp_value"] = number_or_null(exact);
  j["model_hash"] = model_hash(model_json);
  if (c.format == "json") {
    write_json(c, j, out);
  } else if (c.format == "csv") {
    write_csv(c, "simulate",
              "mean,std_error,count,seed,dp_value,model_hash\n" + format_number(est.mean) + ',' +
                  format_number(est.std_error) + ',' + std::to_string(est.count) + ',' + std::to_string(est.seed) +
                  ',' + format_number(exact) + ',' + j["model_hash"].get<std::string>() + '\n',
              out);
  } else {
    Sink sink(c.output, out);
    *sink << format_number(est.mean) << " +- " << format_number(est.std_error) << '\n';
  }
  return 0;
}

struct Figure1Args {
  double cost = 0.1;
  int horizon = 10;
  std::string prior = "uniform";
  double tol = 1e-4;
  double scan_lo = -64.0;
  int points_per_decade = 40;
};

int cmd_figure1(const Common& c, const Figure1Args& a, std::ostream& out) {
  if (!(a.tol > 0.0)) throw InvalidArgument("--tol must be positive");
  HouseModel model = figure1_model(-1.0, a.cost, a.horizon);
  if (a.prior != "uniform") {
    double alpha = 0.0, beta = 0.0;
    char tail = 0;
    if (std::sscanf(a.prior.c_str(), "beta:%lf,%lf%c", &alpha, &beta, &tail) != 2) {
      throw InvalidArgument("--prior: expected 'uniform' or 'beta:A,B'");
    }
    model.prior = BetaBernoulli{alpha, beta};
  }
  model.validate();
  Figure1Options options;
  options.tol = a.tol;
  options.scan.lo = a.scan_lo;
  options.points_per_decade = a.points_per_decade;
  const Figure1Result result = figure1(model, options);
  if (c.format == "json") {
    write_json(c, to_json(result), out);
  } else {
    write_csv(c, "figure1", to_csv(result), out);
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"stopwise: risk-sensitive optimal stopping"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common solve_c, oracle_c, res_c, inf_c, sim_c, fig_c;
  int budget = static_cast<int>(kDefaultNodeBudget);
  bool steps_to_go = false;
  InfiniteArgs inf_a;
  SimulateArgs sim_a;
  Figure1Args fig_a;
  advisor::ServeOptions serve_o;

  auto* solve = app.add_subcommand("solve", "Optimal value by backward induction");
  add_common(solve, solve_c, true, "text", {"text", "csv", "json"});
  solve->add_option("--budget", budget, "Node budget")->check(CLI::PositiveNumber);

  auto* oracle = app.add_subcommand("oracle", "Optimal value by exhaustive enumeration");
  add_common(oracle, oracle_c, true, "text", {"text", "json"});

  auto* reservation = app.add_subcommand("reservation", "Reservation level table for a house model");
  add_common(reservation, res_c, true, "csv", {"csv", "json"});
  reservation->add_flag("--steps-to-go", steps_to_go, "Index exponential tables by steps to go");

  auto* infinite = app.add_subcommand("infinite", "Infinite-horizon levels (house) or value limit (pomdp)");
  add_common(infinite, inf_c, true, "csv", {"csv", "json"});
  infinite->add_option("--tol", inf_a.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
  infinite->add_option("--max-iter", inf_a.max_iterations, "Iteration cap")->check(CLI::PositiveNumber);
  infinite->add_option("--depth", inf_a.depth, "Belief depth of the reported table")->check(CLI::NonNegativeNumber);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo evaluation of the optimal rule");
  add_common(simulate, sim_c, true, "text", {"text", "csv", "json"});
  simulate->add_option("--samples", sim_a.samples, "Sample count")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_a.seed, "Philox seed");
  simulate->add_option("--threads", sim_a.threads, "Worker threads (default STOPWISE_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--max-stages", sim_a.max_stages, "Path length cap")->check(CLI::PositiveNumber);

  auto* fig = app.add_subcommand("figure1", "Rejected-zeros bands over gamma for Bernoulli offers");
  add_common(fig, fig_c, false, "csv", {"csv", "json"});
  fig->remove_option(fig->get_option("--model"));
  fig->remove_option(fig->get_option("--N"));
  fig->remove_option(fig->get_option("--utility"));
  fig->add_option("--c", fig_a.cost, "Cost per rejected offer")->check(CLI::NonNegativeNumber);
  fig->add_option("--N", fig_a.horizon, "Horizon")->check(CLI::PositiveNumber);
  fig->add_option("--prior", fig_a.prior, "uniform | beta:A,B");
  fig->add_option("--tol", fig_a.tol, "Bisection tolerance")->check(CLI::PositiveNumber);
  fig->add_option("--scan-lo", fig_a.scan_lo, "Most negative gamma scanned");
  fig->add_option("--points-per-decade", fig_a.points_per_decade, "Scan density")->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Run the advisor HTTP service");
  serve->add_option("--bind", serve_o.bind, "Listen address");
  serve->add_option("--port", serve_o.port, "Listen port")->check(CLI::Range(0, 65535));
  serve->add_option("--persist", serve_o.persist, "Load sessions from and save them to this file");
  serve->add_option("--threads", serve_o.threads, "Request worker threads")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*solve) return cmd_solve(solve_c, budget, out);
    if (*oracle) return cmd_oracle(oracle_c, out);
    if (*reservation) return cmd_reservation(res_c, steps_to_go, out);
    if (*infinite) return cmd_infinite(inf_c, inf_a, out);
    if (*simulate) return cmd_simulate(sim_c, sim_a, out);
    if (*fig) return cmd_figure1(fig_c, fig_a, out);
    if (*serve) {
      serve_o.threads = serve_o.threads > 0 ? serve_o.threads : thread_count(0);
      return advisor::serve(serve_o);
    }
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " (last increment " << format_number(e.last_increment()) << ")\n";
    return 2;
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace stopwise::cli
