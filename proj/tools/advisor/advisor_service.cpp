#include "advisor_service.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>

#include <stopwise/errors.hpp>

namespace stopwise::advisor {

namespace {

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

/// Maps library exceptions onto status codes. Anything else propagates.
template <class F>
Response guarded(F&& f) {
  try {
    return f();
  } catch (const AdvisorStopped& e) {
    return error(409, "session_stopped", e.what());
  } catch (const ImpossibleObservation& e) {
    return error(422, "infeasible_offer", e.what());
  } catch (const DomainError& e) {
    return error(422, "domain_error", e.what());
  } catch (const ConvergenceError& e) {
    return error(422, "no_convergence", e.what());
  } catch (const BudgetExceeded& e) {
    return error(422, "budget_exceeded", e.what());
  }
}

double parse_offer(const std::string& body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw InvalidArgument("request body is not valid JSON");
  if (!j.is_object() || !j.contains("offer") || !j["offer"].is_number()) {
    throw InvalidArgument("request body needs a numeric \"offer\"");
  }
  return j["offer"].get<double>();
}

}  // namespace

Response error(int status, const std::string& code, const std::string& message) {
  return {status, json{{"code", code}, {"message", message}}};
}

std::string AdvisorService::next_id() {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  char buf[40];
  std::snprintf(buf, sizeof buf, "s%04llx%012llx", static_cast<unsigned long long>(sequence_ & 0xffff),
                static_cast<unsigned long long>(gen() & 0xffffffffffffULL));
  return buf;
}

std::shared_ptr<AdvisorService::Session> AdvisorService::open(HouseModel model, const std::string& id,
                                                              const std::string& created) {
  if (model.horizon && *model.horizon == 0) throw InvalidArgument("horizon N = 0 leaves no decision to advise");
  auto session = std::make_shared<Session>();
  session->state = start_advisor(std::move(model));
  // Solving the stage-0 level fills the solver memo for every reachable
  // belief (finite N) or runs the fixed-point iteration (infinite).
  session->initial_level = initial_level(session->state);
  session->created = created;
  session->updated = created;
  session->id = id;
  return session;
}

std::shared_ptr<AdvisorService::Session> AdvisorService::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

json AdvisorService::offer_view(const AdvisorState& state) {
  const AdviceStep& step = state.steps.back();
  json j = to_json(step);
  j["accumulated_cost"] = state.accumulated_cost();
  j["status"] = state.stopped ? "stopped" : "active";
  if (auto w = state.realized_wealth()) {
    j["realized_wealth"] = *w;
    j["realized_utility"] = state.model.utility(*w);
  }
  return j;
}

json AdvisorService::session_view(const Session& s) {
  json steps = json::array();
  json offers = json::array();
  for (const AdviceStep& step : s.state.steps) {
    steps.push_back(to_json(step));
    offers.push_back(step.offer);
  }
  json j = advisor_summary(s.state);
  j["id"] = s.id;
  j["created"] = s.created;
  j["updated"] = s.updated;
  j["model"] = to_json(s.state.model);
  j["initial_level"] = number_or_null(s.initial_level);
  j["prior"] = to_json(s.state.model.prior, false);
  j["offers"] = std::move(offers);
  j["steps"] = std::move(steps);
  return j;
}

Response AdvisorService::create_session(const std::string& body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) return error(400, "malformed_json", "request body is not valid JSON");
  HouseModel model;
  try {
    model = house_model_from_json(j);
    model.validate();
  } catch (const InvalidArgument& e) {
    return error(400, "invalid_model", e.what());
  } catch (const json::exception& e) {
    return error(400, "invalid_model", e.what());
  }
  return guarded([&]() -> Response {
    std::shared_ptr<Session> session;
    try {
      std::string id;
      {
        std::unique_lock lock(mutex_);
        ++sequence_;
        id = next_id();
      }
      session = open(std::move(model), id, now_utc());
    } catch (const InvalidArgument& e) {
      return error(400, "invalid_model", e.what());
    }
    {
      std::unique_lock lock(mutex_);
      session->sequence = sequence_;
      sessions_[session->id] = session;
    }
    json out{{"id", session->id},
             {"stage", 0},
             {"level", number_or_null(session->initial_level)},
             {"status", "active"},
             {"created", session->created},
             {"prior", json{{"belief", to_json(session->state.model.prior, false)},
                            {"predictive_mean", predictive_mean(session->state.model.prior)}}}};
    return {201, std::move(out)};
  });
}

Response AdvisorService::list_sessions() const {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a->sequence < b->sequence; });
  json list = json::array();
  for (const auto& s : all) {
    std::lock_guard lock(s->mutex);
    list.push_back(json{{"id", s->id},
                        {"status", s->state.stopped ? "stopped" : "active"},
                        {"stage", s->state.next_stage()},
                        {"created", s->created},
                        {"updated", s->updated}});
  }
  return {200, json{{"sessions", std::move(list)}}};
}

Response AdvisorService::get_session(const std::string& id) const {
  auto s = find(id);
  if (!s) return error(404, "not_found", "no session " + id);
  std::lock_guard lock(s->mutex);
  return {200, session_view(*s)};
}

Response AdvisorService::post_offer(const std::string& id, const std::string& body) {
  auto s = find(id);
  if (!s) return error(404, "not_found", "no session " + id);
  double offer = 0.0;
  try {
    offer = parse_offer(body);
  } catch (const InvalidArgument& e) {
    return error(400, "bad_request", e.what());
  }
  std::lock_guard lock(s->mutex);
  return guarded([&]() -> Response {
    try {
      AdvisorState next = advise(s->state, offer);
      s->state = std::move(next);
    } catch (const InvalidArgument& e) {
      return error(422, "infeasible_offer", e.what());
    }
    s->updated = now_utc();
    return {200, offer_view(s->state)};
  });
}

Response AdvisorService::what_if(const std::string& id, const std::string& body) {
  auto s = find(id);
  if (!s) return error(404, "not_found", "no session " + id);
  double offer = 0.0;
  try {
    offer = parse_offer(body);
  } catch (const InvalidArgument& e) {
    return error(400, "bad_request", e.what());
  }
  std::lock_guard lock(s->mutex);
  return guarded([&]() -> Response {
    try {
      return {200, offer_view(advise(s->state, offer))};
    } catch (const InvalidArgument& e) {
      return error(422, "infeasible_offer", e.what());
    }
  });
}

Response AdvisorService::delete_session(const std::string& id) {
  std::unique_lock lock(mutex_);
  if (sessions_.erase(id) == 0) return error(404, "not_found", "no session " + id);
  return {200, json{{"id", id}, {"deleted", true}}};
}

std::size_t AdvisorService::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

json AdvisorService::snapshot() const {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a->sequence < b->sequence; });
  json list = json::array();
  for (const auto& s : all) {
    std::lock_guard lock(s->mutex);
    json offers = json::array();
    for (const AdviceStep& step : s->state.steps) offers.push_back(step.offer);
    list.push_back(json{{"id", s->id},
                        {"created", s->created},
                        {"updated", s->updated},
                        {"model", to_json(s->state.model)},
                        {"offers", std::move(offers)}});
  }
  return json{{"sessions", std::move(list)}};
}

void AdvisorService::restore(const json& snapshot) {
  if (!snapshot.is_object() || !snapshot.contains("sessions") || !snapshot["sessions"].is_array()) {
    throw InvalidArgument("snapshot: expected {\"sessions\": [...]}");
  }
  for (const json& rec : snapshot["sessions"]) {
    auto s = open(house_model_from_json(rec.at("model")), rec.at("id").get<std::string>(),
                  rec.at("created").get<std::string>());
    for (const json& offer : rec.at("offers")) s->state = advise(s->state, offer.get<double>());
    s->updated = rec.at("updated").get<std::string>();
    std::unique_lock lock(mutex_);
    s->sequence = ++sequence_;
    sessions_[s->id] = s;
  }
}

void AdvisorService::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << snapshot().dump(2) << '\n';
}

void AdvisorService::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) return;
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InvalidArgument(path + " is not valid JSON");
  restore(j);
}

}  // namespace stopwise::advisor
