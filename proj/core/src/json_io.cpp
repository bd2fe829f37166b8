#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stopwise/errors.hpp"
#include "stopwise/io.hpp"

namespace stopwise {

namespace {

const json& field(const json& j, const char* name, const char* where) {
  if (!j.is_object()) throw InvalidArgument(std::string(where) + ": expected a JSON object");
  auto it = j.find(name);
  if (it == j.end()) throw InvalidArgument(std::string(where) + ": missing field '" + name + "'");
  return *it;
}

double number(const json& j, const char* name, const char* where) {
  const json& v = field(j, name, where);
  if (!v.is_number()) throw InvalidArgument(std::string(where) + ": field '" + name + "' must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* name, double fallback, const char* where) {
  if (!j.contains(name)) return fallback;
  return number(j, name, where);
}

int integer(const json& j, const char* name, const char* where) {
  const json& v = field(j, name, where);
  if (!v.is_number_integer()) throw InvalidArgument(std::string(where) + ": field '" + name + "' must be an integer");
  return v.get<int>();
}

std::string string_field(const json& j, const char* name, const char* where) {
  const json& v = field(j, name, where);
  if (!v.is_string()) throw InvalidArgument(std::string(where) + ": field '" + name + "' must be a string");
  return v.get<std::string>();
}

template <class T>
T array_of(const json& j, const char* name, const char* where) {
  const json& v = field(j, name, where);
  if (!v.is_array()) throw InvalidArgument(std::string(where) + ": field '" + name + "' must be an array");
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string(where) + ": field '" + name + "' has the wrong element type");
  }
}

}  // namespace

json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

// ---------------------------------------------------------------------------

json to_json(const Utility& u) {
  json j{{"family", to_string(u.family())}};
  switch (u.family()) {
    case UtilityFamily::linear: break;
    case UtilityFamily::exponential: j["gamma"] = u.gamma(); break;
    case UtilityFamily::power:
      j["exponent"] = u.exponent();
      j["shift"] = u.shift();
      break;
    case UtilityFamily::log: j["shift"] = u.shift(); break;
  }
  return j;
}

Utility utility_from_json(const json& j) {
  const char* where = "utility";
  const UtilityFamily family = utility_family_from_string(string_field(j, "family", where));
  switch (family) {
    case UtilityFamily::linear: return Utility::linear();
    case UtilityFamily::exponential: return Utility::exponential(number(j, "gamma", where));
    case UtilityFamily::power:
      return Utility::power(number(j, "exponent", where), number_or(j, "shift", 0.0, where));
    case UtilityFamily::log: return Utility::log(number_or(j, "shift", 0.0, where));
  }
  throw InvalidArgument("utility: unknown family");
}

json to_json(const DiscreteDist& d) {
  return json{{"atoms", std::vector<double>(d.atoms().begin(), d.atoms().end())},
              {"weights", std::vector<double>(d.weights().begin(), d.weights().end())}};
}

DiscreteDist dist_from_json(const json& j) {
  return DiscreteDist(array_of<std::vector<double>>(j, "atoms", "distribution"),
                      array_of<std::vector<double>>(j, "weights", "distribution"));
}

json to_json(const OfferFamily& family) {
  json j{{"family", family_name(family)}};
  if (const auto* t = std::get_if<FiniteTableOffers>(&family)) {
    j["atoms"] = t->atoms;
    j["probs"] = t->probs;
  }
  return j;
}

OfferFamily offer_family_from_json(const json& j) {
  const char* where = "offers";
  const std::string name = string_field(j, "family", where);
  OfferFamily family;
  if (name == "bernoulli") {
    family = BernoulliOffers{};
  } else if (name == "exponential_mean") {
    family = ExponentialMeanOffers{};
  } else if (name == "finite_table") {
    family = FiniteTableOffers{array_of<std::vector<double>>(j, "atoms", where),
                               array_of<std::vector<std::vector<double>>>(j, "probs", where)};
  } else {
    throw InvalidArgument("offers: unknown family '" + name + "'");
  }
  validate(family);
  return family;
}

json to_json(const Belief& belief, bool with_likelihood) {
  if (const auto* d = std::get_if<DiscretePosterior>(&belief)) {
    json j{{"type", "discrete"}, {"theta", d->theta()}, {"weights", d->weights()}};
    if (with_likelihood) j["likelihood"] = to_json(d->likelihood());
    return j;
  }
  if (const auto* b = std::get_if<BetaBernoulli>(&belief)) {
    return json{{"type", "beta_bernoulli"}, {"alpha", b->alpha}, {"beta", b->beta}};
  }
  const auto& g = std::get<InvGammaExp>(belief);
  return json{{"type", "inv_gamma_exp"}, {"a", g.a}, {"b", g.b}, {"s", g.s}, {"n", g.n}};
}

Belief belief_from_json(const json& j, const std::optional<OfferFamily>& family) {
  const char* where = "belief";
  const std::string type = string_field(j, "type", where);
  if (type == "beta_bernoulli") return BetaBernoulli(number(j, "alpha", where), number(j, "beta", where));
  if (type == "inv_gamma_exp") {
    return InvGammaExp(number(j, "a", where), number(j, "b", where), number_or(j, "s", 0.0, where),
                       j.contains("n") ? integer(j, "n", where) : 0);
  }
  if (type == "discrete") {
    OfferFamily likelihood;
    if (j.contains("likelihood")) {
      likelihood = offer_family_from_json(j["likelihood"]);
    } else if (family) {
      likelihood = *family;
    } else {
      throw InvalidArgument("belief: discrete belief needs a likelihood");
    }
    return DiscretePosterior(array_of<std::vector<double>>(j, "theta", where),
                             array_of<std::vector<double>>(j, "weights", where), std::move(likelihood));
  }
  throw InvalidArgument("belief: unknown type '" + type + "'");
}

json to_json(const HouseModel& model) {
  json j{{"kind", "house"},
         {"offers", to_json(model.offers)},
         {"prior", to_json(model.prior, false)},
         {"cost", model.cost},
         {"utility", to_json(model.utility)},
         {"initial_offer", model.initial_offer}};
  if (model.horizon) {
    j["horizon"] = *model.horizon;
  } else {
    j["horizon"] = "infinite";
  }
  return j;
}

HouseModel house_model_from_json(const json& j) {
  const char* where = "house model";
  HouseModel m;
  m.offers = offer_family_from_json(field(j, "offers", where));
  m.prior = belief_from_json(field(j, "prior", where), m.offers);
  m.cost = number(j, "cost", where);
  m.utility = j.contains("utility") ? utility_from_json(j["utility"]) : Utility::linear();
  const json& h = field(j, "horizon", where);
  if (h.is_string() && h.get<std::string>() == "infinite") {
    m.horizon.reset();
  } else if (h.is_number_integer()) {
    m.horizon = h.get<int>();
  } else {
    throw InvalidArgument("house model: horizon must be an integer or \"infinite\"");
  }
  m.initial_offer = number_or(j, "initial_offer", 0.0, where);
  m.validate();
  return m;
}

json to_json(const PartiallyObservableModel& model, const std::optional<Utility>& utility) {
  json j{{"kind", "pomdp"},
         {"observable_states", model.observable_labels},
         {"hidden_states", model.hidden_labels},
         {"q", model.q},
         {"running_reward", model.running_reward},
         {"stopping_reward", model.stopping_reward},
         {"prior", model.prior},
         {"x0", model.x0}};
  if (utility) j["utility"] = to_json(*utility);
  return j;
}

PomdpFile pomdp_from_json(const json& j) {
  const char* where = "pomdp model";
  PomdpFile file;
  PartiallyObservableModel& m = file.model;
  m.observable_labels = array_of<std::vector<std::string>>(j, "observable_states", where);
  m.hidden_labels = array_of<std::vector<std::string>>(j, "hidden_states", where);
  m.q = array_of<std::vector<std::vector<std::vector<std::vector<double>>>>>(j, "q", where);
  m.running_reward = array_of<std::vector<double>>(j, "running_reward", where);
  m.stopping_reward = array_of<std::vector<double>>(j, "stopping_reward", where);
  m.prior = array_of<std::vector<double>>(j, "prior", where);
  m.x0 = integer(j, "x0", where);
  m.validate();
  if (j.contains("utility")) file.utility = utility_from_json(j["utility"]);
  return file;
}

ModelFile model_from_json(const json& j) {
  const std::string kind = string_field(j, "kind", "model");
  if (kind == "pomdp") return pomdp_from_json(j);
  if (kind == "house") return house_model_from_json(j);
  throw InvalidArgument("model: unknown kind '" + kind + "' (expected \"pomdp\" or \"house\")");
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidArgument("model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

std::string model_hash(const json& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : model.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

json to_json(const ValueReport& report) {
  return json{{"value", report.value},
              {"horizon", report.horizon},
              {"per_stage", report.per_stage},
              {"integrability_bound", report.integrability_bound},
              {"node_count", report.node_count}};
}

json to_json(const PolicyTree& policy) {
  json nodes = json::array();
  for (const PolicyNode& n : policy.nodes) {
    json children = json::array();
    for (const PolicyChild& c : n.children) children.push_back({{"x", c.x}, {"prob", c.prob}, {"node", c.node}});
    nodes.push_back({{"stage", n.stage},
                     {"x", n.state.x},
                     {"mu", n.state.mu},
                     {"s", n.state.s},
                     {"decision", n.stop ? "stop" : "continue"},
                     {"stop_value", n.stop_value},
                     {"continuation_value", number_or_null(n.continuation_value)},
                     {"value", n.value},
                     {"children", std::move(children)}});
  }
  return json{{"horizon", policy.horizon}, {"nodes", std::move(nodes)}};
}

json to_json(const HTable& table) {
  json nodes = json::array();
  for (const HNode& n : table.nodes) {
    nodes.push_back({{"stage", n.stage}, {"x", n.x}, {"mu", n.mu}, {"h", n.h}, {"decision", n.stop ? "stop" : "continue"}});
  }
  return json{{"gamma", table.gamma}, {"horizon", table.horizon}, {"nodes", std::move(nodes)}};
}

json to_json(const ReservationTable& table) {
  json rows = json::array();
  for (const ReservationRow& r : table.rows) {
    rows.push_back({{table.indexing == TableIndexing::stage ? "stage" : "steps_to_go", r.index},
                    {"belief", to_json(r.belief, false)},
                    {"key", describe(r.belief)},
                    {"level", number_or_null(r.level)}});
  }
  json j{{"indexing", table.indexing == TableIndexing::stage ? "stage" : "steps_to_go"},
         {"rows", std::move(rows)},
         {"quadrature_nodes", table.quadrature_nodes},
         {"grid_nodes", table.grid_nodes}};
  if (table.horizon) {
    j["horizon"] = *table.horizon;
  } else {
    j["horizon"] = "infinite";
    j["tolerance"] = table.tolerance;
    j["iterations"] = table.iterations;
    j["last_increment"] = table.last_increment;
  }
  return j;
}

json to_json(const BruteForceReport& report) {
  json rule = json::array();
  for (const auto& [history, stop] : report.rule) rule.push_back({{"history", history}, {"decision", stop ? "stop" : "continue"}});
  return json{{"value", report.value},
              {"rules_examined", report.rules_examined},
              {"exhaustive", report.exhaustive},
              {"paths", report.paths},
              {"rule", std::move(rule)}};
}

json to_json(const McEstimate& estimate) {
  return json{{"mean", estimate.mean},
              {"std_error", estimate.std_error},
              {"count", estimate.count},
              {"seed", estimate.seed}};
}

json to_json(const InfiniteLevel& level) {
  return json{{"level", level.level},
              {"iterations", level.iterations},
              {"last_increment", level.last_increment},
              {"residual", level.residual}};
}

json to_json(const Figure1Result& result) {
  json bands = json::array();
  for (const GammaBand& b : result.bands) {
    bands.push_back({{"lower", number_or_null(b.lower)}, {"upper", number_or_null(b.upper)}, {"count", b.count}});
  }
  json switches = json::array();
  for (std::size_t k = 0; k < result.switches.size(); ++k) {
    switches.push_back({{"count", k + 1}, {"gamma", number_or_null(result.switches[k])}});
  }
  return json{{"bands", std::move(bands)}, {"switches", std::move(switches)}};
}

json to_json(const LowerBoundReport& report) {
  return json{{"lhs", report.lhs}, {"rhs", report.rhs}, {"margin", report.margin}};
}

json to_json(const AdviceStep& step) {
  return json{{"stage", step.stage},
              {"offer", step.offer},
              {"level", number_or_null(step.level)},
              {"advice", to_string(step.advice)},
              {"posterior", to_json(step.belief, false)},
              {"posterior_mean", predictive_mean(step.belief)}};
}

json advisor_summary(const AdvisorState& state) {
  json j{{"stage", state.next_stage()},
         {"status", state.stopped ? "stopped" : "active"},
         {"accumulated_cost", state.accumulated_cost()},
         {"posterior", to_json(state.belief, false)},
         {"posterior_mean", predictive_mean(state.belief)}};
  if (auto w = state.realized_wealth()) {
    j["realized_wealth"] = *w;
    j["realized_utility"] = state.model.utility(*w);
  }
  return j;
}

// ---------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

std::string to_csv(const PolicyTree& policy) {
  std::ostringstream out;
  out << "stage,node,x,s,stop_value,continuation_value,value,decision\n";
  for (std::size_t i = 0; i < policy.nodes.size(); ++i) {
    const PolicyNode& n = policy.nodes[i];
    out << n.stage << ',' << i << ',' << n.state.x << ',' << format_number(n.state.s) << ','
        << format_number(n.stop_value) << ',' << format_number(n.continuation_value) << ','
        << format_number(n.value) << ',' << (n.stop ? "stop" : "continue") << '\n';
  }
  return out.str();
}

std::string to_csv(const ReservationTable& table) {
  std::ostringstream out;
  out << (table.indexing == TableIndexing::stage ? "stage" : "steps_to_go") << ",belief,level\n";
  for (const ReservationRow& r : table.rows) {
    out << r.index << ",\"" << describe(r.belief) << "\"," << format_number(r.level) << '\n';
  }
  return out.str();
}

std::string to_csv(const Figure1Result& result) {
  std::ostringstream out;
  out << "gamma_lower,gamma_upper,rejected_zeros\n";
  for (const GammaBand& b : result.bands) {
    out << format_number(b.lower) << ',' << format_number(b.upper) << ',' << b.count << '\n';
  }
  return out.str();
}

}  // namespace stopwise
