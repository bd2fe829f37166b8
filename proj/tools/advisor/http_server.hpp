#pragma once

#include <string>

#include "advisor_service.hpp"

namespace httplib {
class Server;
}

namespace stopwise::advisor {

/// Registers the session routes on `server`.
void mount(httplib::Server& server, AdvisorService& service);

struct ServeOptions {
  std::string bind = "127.0.0.1";
  int port = 8080;
  /// Sessions are loaded from and saved to this file when set.
  std::string persist;
  int threads = 0;
};

/// Blocks until SIGINT/SIGTERM, then saves sessions if requested.
int serve(const ServeOptions& options);

}  // namespace stopwise::advisor
