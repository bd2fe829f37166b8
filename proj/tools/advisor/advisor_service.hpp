#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <stopwise/house_selling.hpp>
#include <stopwise/io.hpp>

namespace stopwise::advisor {

struct Response {
  int status = 200;
  json body;
};

/// Live advisor sessions over house-selling models. Handlers are
/// thread-safe: requests on one session serialize, different sessions run
/// in parallel. The service adds no numerics beyond `advise`.
class AdvisorService {
 public:
  AdvisorService() = default;

  Response create_session(const std::string& body);
  Response list_sessions() const;
  Response get_session(const std::string& id) const;
  Response post_offer(const std::string& id, const std::string& body);
  Response what_if(const std::string& id, const std::string& body);
  Response delete_session(const std::string& id);

  /// Sessions as {model, offers} records; restore() replays the offers.
  json snapshot() const;
  void restore(const json& snapshot);
  void save(const std::string& path) const;
  /// No-op when the file does not exist.
  void load(const std::string& path);

  std::size_t size() const;

 private:
  struct Session {
    std::string id;
    std::uint64_t sequence = 0;
    std::string created;
    std::string updated;
    AdvisorState state;
    double initial_level = 0.0;
    mutable std::mutex mutex;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  std::shared_ptr<Session> open(HouseModel model, const std::string& id, const std::string& created);
  std::string next_id();
  static json session_view(const Session& s);
  static json offer_view(const AdvisorState& state);

  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t sequence_ = 0;
};

/// {code, message} error body.
Response error(int status, const std::string& code, const std::string& message);

}  // namespace stopwise::advisor
