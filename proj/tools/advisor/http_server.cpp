#include "http_server.hpp"

#include <csignal>
#include <iostream>

#include <httplib.h>

namespace stopwise::advisor {

namespace {

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

httplib::Server* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

void mount(httplib::Server& server, AdvisorService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/sessions.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.create_session(req.body));
  });
  server.Get("/sessions", [&](const httplib::Request&, httplib::Response& res) { reply(res, service.list_sessions()); });
  server.Get(R"(/sessions/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_session(req.matches[1]));
  });
  server.Delete(R"(/sessions/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.delete_session(req.matches[1]));
  });
  server.Post(R"(/sessions/([^/]+)/offers)", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.post_offer(req.matches[1], req.body));
  });
  server.Post(R"(/sessions/([^/]+)/whatif)", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.what_if(req.matches[1], req.body));
  });

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    reply(res, error(500, "internal", message));
  });
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty()) reply(res, error(res.status, res.status == 404 ? "not_found" : "http_error", req.path));
  });
}

int serve(const ServeOptions& options) {
  AdvisorService service;
  if (!options.persist.empty()) service.load(options.persist);

  httplib::Server server;
  if (options.threads > 0) {
    const auto n = static_cast<std::size_t>(options.threads);
    server.new_task_queue = [n] { return new httplib::ThreadPool(n); };
  }
  mount(server, service);
  if (!server.bind_to_port(options.bind, options.port)) {
    std::cerr << "serve: cannot bind " << options.bind << ':' << options.port << '\n';
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "advisor listening on http://" << options.bind << ':' << options.port << '\n';
  server.listen_after_bind();
  g_server = nullptr;

  if (!options.persist.empty()) service.save(options.persist);
  return 0;
}

}  // namespace stopwise::advisor
