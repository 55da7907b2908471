#include "redes/http_service.hpp"

#include <httplib.h>
#include <json.hpp>

#include "redes/codec.hpp"
#include "redes/errors.hpp"

namespace redes {

using nlohmann::json;

namespace {

int status_for(Errc code) {
  switch (code) {
    case Errc::invalid_mac:
    case Errc::invalid_action:
    case Errc::empty_identifier:
    case Errc::invalid_identifier:
    case Errc::invalid_address:
    case Errc::self_registration:
    case Errc::parse_error:
      return 400;
    case Errc::empty_pending:
    case Errc::tip_moved:
      return 409;
    default:
      return 500;
  }
}

void send_error(httplib::Response& res, int status, const std::string& error,
                const std::string& detail) {
  res.status = status;
  res.set_content(json{{"error", error}, {"detail", detail}}.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_error(res, status_for(e.code()), errc_name(e.code()), e.what());
}

json report_json(const ResolutionReport& report) {
  json j{{"replaced", report.replaced},
         {"old_length", report.old_length},
         {"new_length", report.new_length},
         {"peers_queried", report.peers_queried},
         {"peers_unreachable", report.peers_unreachable},
         {"peers_invalid_chain", report.peers_invalid_chain}};
  j["adopted_from"] = report.adopted_from ? json(*report.adopted_from) : json(nullptr);
  return j;
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    send_error(res, 400, "MalformedBody", "request body must be a JSON object");
    return std::nullopt;
  }
  return body;
}

std::optional<std::vector<std::string>> parse_nodes_field(const json& body,
                                                          httplib::Response& res) {
  const auto it = body.find("nodes");
  if (it == body.end() || !it->is_array() || it->empty()) {
    send_error(res, 400, "MalformedBody", "'nodes' must be a non-empty array");
    return std::nullopt;
  }
  std::vector<std::string> nodes;
  for (const auto& entry : *it) {
    if (!entry.is_string()) {
      send_error(res, 400, "MalformedBody", "'nodes' entries must be strings");
      return std::nullopt;
    }
    nodes.push_back(entry.get<std::string>());
  }
  return nodes;
}

}  // namespace

ChainFetcher http_chain_fetcher(int timeout_seconds) {
  return [timeout_seconds](const std::string& address) -> std::optional<Chain> {
    httplib::Client client(address);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    auto res = client.Get("/chain");
    if (!res || res->status != 200) return std::nullopt;
    try {
      return parse_chain_response(res->body);
    } catch (const Error&) {
      return std::nullopt;  // malformed responses count as unreachable
    }
  };
}

struct HttpService::Impl {
  NodeCore& core;
  httplib::Server server;
  std::thread worker;

  explicit Impl(NodeCore& c) : core(c) { bind_routes(); }

  bool authorized(const httplib::Request& req) const {
    const std::string& token = core.config().auth_token;
    if (token.empty()) return true;
    return req.get_header_value("Authorization") == "Bearer " + token;
  }

  void bind_routes() {
    // Admission checks cover the node-management and block surfaces.
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      const bool guarded =
          req.path.rfind("/nodes/", 0) == 0 || req.path.rfind("/blocks/", 0) == 0;
      if (guarded && !authorized(req)) {
        send_error(res, 401, "Unauthorized", "missing or wrong bearer token");
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });

    server.Post("/nodes/register", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req, res);
      if (!body) return;
      auto nodes = parse_nodes_field(*body, res);
      if (!nodes) return;
      try {
        // Validate the whole list before mutating anything.
        std::vector<std::string> normalized;
        for (const auto& addr : *nodes) normalized.push_back(normalize_address(addr));
        json registered = json::array();
        for (size_t i = 0; i < nodes->size(); ++i) {
          core.register_peer((*nodes)[i]);
          registered.push_back(normalized[i]);
        }
        res.status = 201;
        res.set_content(json{{"registered", registered}, {"total", core.peer_count()}}.dump(),
                        "application/json");
      } catch (const Error& e) {
        send_error(res, e);
      }
    });

    server.Post("/nodes/remove", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req, res);
      if (!body) return;
      auto nodes = parse_nodes_field(*body, res);
      if (!nodes) return;
      json removed = json::array();
      json not_found = json::array();
      for (const auto& addr : *nodes) {
        if (core.remove_peer(addr)) {
          removed.push_back(addr);
        } else {
          not_found.push_back(addr);
        }
      }
      res.status = 200;
      res.set_content(
          json{{"removed", removed}, {"not_found", not_found}, {"total", core.peer_count()}}
              .dump(),
          "application/json");
    });

    server.Post("/transactions/new", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req, res);
      if (!body) return;
      for (const char* field : {"sender", "recipient", "mac", "action"}) {
        if (!body->contains(field) || !(*body)[field].is_string()) {
          send_error(res, 400, "MissingField", std::string("'") + field + "' must be a string");
          return;
        }
      }
      try {
        const auto submitted = core.submit_transaction(
            (*body)["sender"].get<std::string>(), (*body)["recipient"].get<std::string>(),
            (*body)["mac"].get<std::string>(), (*body)["action"].get<std::string>());
        res.status = 201;
        res.set_content(json{{"message", "transaction accepted"},
                             {"block_index_hint", submitted.block_index_hint}}
                            .dump(),
                        "application/json");
      } catch (const Error& e) {
        send_error(res, e);
      }
    });

    server.Post("/blocks/new", [this](const httplib::Request&, httplib::Response& res) {
      try {
        const auto outcome = core.forge();
        // Hand-composed so the embedded block stays in canonical form.
        const std::string payload = "{\"attempts\":" + std::to_string(outcome.attempts) +
                                    ",\"block\":" + to_canonical_json(outcome.block) + "}";
        res.status = 201;
        res.set_content(payload, "application/json");
      } catch (const Error& e) {
        send_error(res, e);
      }
    });

    server.Get("/chain", [this](const httplib::Request&, httplib::Response& res) {
      res.status = 200;
      res.set_content(chain_response_json(core.chain_snapshot()), "application/json");
    });

    server.Get("/nodes/resolve", [this](const httplib::Request&, httplib::Response& res) {
      const ResolutionReport report = core.resolve(http_chain_fetcher());
      res.status = 200;
      res.set_content(json{{"replaced", report.replaced},
                           {"length", report.new_length},
                           {"report", report_json(report)}}
                          .dump(),
                      "application/json");
    });

    server.Get("/acl", [this](const httplib::Request&, httplib::Response& res) {
      const AclState acl = core.acl_snapshot();
      json entries = json::array();
      for (const auto& [mac, entry] : acl.entries) {
        entries.push_back(json{{"mac", mac},
                               {"action", action_name(entry.action)},
                               {"block_index", entry.block_index},
                               {"tx_position", entry.tx_position}});
      }
      res.status = 200;
      res.set_content(json{{"entries", entries}}.dump(), "application/json");
    });

    server.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
      res.status = 200;
      res.set_content(json{{"node_id", core.node_id()},
                           {"length", core.chain_length()},
                           {"pending", core.pending_count()},
                           {"peers", core.peer_count()},
                           {"difficulty", core.difficulty().leading_zero_hex_digits()}}
                          .dump(),
                      "application/json");
    });
  }
};

HttpService::HttpService(NodeCore& core) : impl_(std::make_unique<Impl>(core)) {}

HttpService::~HttpService() { stop(); }

bool HttpService::run() {
  return impl_->server.listen(impl_->core.config().host, impl_->core.config().port);
}

int HttpService::start_background() {
  const int port = impl_->server.bind_to_any_port("127.0.0.1");
  if (port <= 0) return -1;
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void HttpService::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace redes
