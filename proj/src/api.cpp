#include "adme/api.hpp"

#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace adme::api {

using nlohmann::json;

struct ApiServer::Impl {
  madme::Manager& manager;
  httplib::Server server;
  std::mutex mutex;
  std::thread thread;
  int port = -1;

  explicit Impl(madme::Manager& m) : manager(m) { install_routes(); }

  void install_routes() {
    server.Get("/resources", [this](const httplib::Request&, httplib::Response& res) {
      std::scoped_lock lock(mutex);
      res.set_content(manager.resources_text(), "text/plain");
    });
    server.Get("/constraints", [this](const httplib::Request&, httplib::Response& res) {
      std::scoped_lock lock(mutex);
      res.set_content(manager.constraints_text(), "text/plain");
    });
    server.Get("/deployment", [this](const httplib::Request&, httplib::Response& res) {
      std::scoped_lock lock(mutex);
      try {
        res.set_content(manager.deployment_ddd(), "application/xml");
      } catch (const madme::NoDeployment&) {
        res.status = 404;
        res.set_content("no deployment", "text/plain");
      }
    });
    server.Post("/satisfy", [this](const httplib::Request& req, httplib::Response& res) {
      std::scoped_lock lock(mutex);
      handle_satisfy(req, res);
    });
    server.Post("/enact", [this](const httplib::Request& req, httplib::Response& res) {
      std::scoped_lock lock(mutex);
      handle_enact(req, res);
    });
  }

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void handle_satisfy(const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      reply(res, 400, {{"error", "body must be a JSON object"}});
      return;
    }
    if (!body.contains("constraints") || !body.contains("resources")) {
      reply(res, 400, {{"error", "constraints and resources are required"}});
      return;
    }
    std::optional<std::string> config;
    if (body.contains("config") && !body["config"].is_null()) {
      if (!body["config"].is_string()) {
        reply(res, 400, {{"error", "config must be a DDD XML string or null"}});
        return;
      }
      config = body["config"].get<std::string>();
    }
    int maxSolutions = body.value("maxSolutions", 1);
    if (maxSolutions < 0) {
      reply(res, 400, {{"error", "maxSolutions must be >= 0"}});
      return;
    }
    try {
      madme::SatisfyResult result = manager.satisfy(
          body["constraints"].get<std::string>(),
          body["resources"].get<std::string>(), config, maxSolutions);
      json ddds = json::array();
      for (const auto& ddd : result.ddds) ddds.push_back(ddd);
      reply(res, 200,
            {{"status", std::string(solver::status_text(result.status))},
             {"ddds", std::move(ddds)}});
    } catch (const madme::ConstraintError& e) {
      json removed = json::array();
      for (const auto& b : e.removed_bindings())
        removed.push_back({{"type", b.typeName}, {"host", b.host}, {"instance", b.instanceId}});
      reply(res, 409,
            {{"error", "constraint error"},
             {"reason", e.reason()},
             {"removedBindings", std::move(removed)},
             {"lastStatus", std::string(solver::status_text(e.last_status()))}});
    } catch (const madme::GoalError& e) {
      reply(res, 400, {{"error", e.what()}});
    }
  }

  void handle_enact(const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("ddd") ||
        !body["ddd"].is_string()) {
      reply(res, 400, {{"error", "body must be {\"ddd\": \"<xml>\"}"}});
      return;
    }
    try {
      madme::EnactmentReport report = manager.enact(body["ddd"].get<std::string>());
      reply(res, 200, {{"status", "OK"}, {"actions", report.actions}});
    } catch (const madme::EnactError& e) {
      reply(res, 409, {{"status", "ERROR"}, {"error", e.what()}});
    }
  }
};

ApiServer::ApiServer(madme::Manager& manager) : impl_(std::make_unique<Impl>(manager)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(int port) {
  int bound;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port("127.0.0.1");
    if (bound < 0) return -1;
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) return -1;
    bound = port;
  }
  impl_->port = bound;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ApiServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

bool ApiServer::serve_forever(int port) {
  if (!impl_->server.bind_to_port("0.0.0.0", port)) return false;
  return impl_->server.listen_after_bind();
}

}  // namespace adme::api
