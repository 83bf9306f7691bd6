#pragma once

// HTTP/JSON surface of a Hub.
//
//   GET   /healthz                      -> 200 "ok"
//   POST  /records                      {mac, chunks}            -> 201 {recordID}
//   GET   /records?mac=                                          -> 200 [record...]
//   PATCH /records/{id}                 {chunks}                 -> 200 record
//   PATCH /records/{id}/status          {status: 1|0}            -> 200 record
//   POST  /query                        {requester, fingerprint, tx_power_1m?} -> 200 [entry...]
//   POST  /rules                        rule                     -> 201 {ruleID}
//   GET   /rules                                                 -> 200 [rule...]
//   PATCH /rules/{id}                   partial rule             -> 200 rule
//   GET   /stats/events?provider=&from=&to=                      -> 200 {provider, from, to, count}
//   POST  /sim/world                    world description        -> 200 {nodes}
//   GET   /sim/world                                             -> 200 world description
//   POST  /sim/scan                     {x, y}                   -> 200 {scan_time, fingerprint}
//   POST  /sim/nodes/{mac}/move         {x, y}                   -> 200 {mac, x, y}
//
// Errors are {"code": ..., "message": ...} with 400 / 404 / 409 / 500.
//
// Api::handle is transport independent; serve() binds it to cpp-httplib.

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "bdp/error.hpp"
#include "bdp/hub.hpp"

namespace bdp {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> params;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  json json_body() const { return json::parse(body); }
};

inline std::int64_t wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

inline int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation: return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    default: return 500;
  }
}

class Api {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit Api(Hub& hub, Clock clock = wall_clock_ms) : hub_(hub), clock_(std::move(clock)) {}

  HttpResponse handle(const HttpRequest& req) const {
    try {
      return route(req);
    } catch (const Error& e) {
      return error(http_status(e.kind()), e.code(), e.what());
    } catch (const json::exception& e) {
      return error(400, "invalid_request", e.what());
    } catch (const std::exception& e) {
      return error(500, "internal", e.what());
    }
  }

 private:
  static HttpResponse ok(const json& j, int status = 200) { return {status, j.dump(), "application/json"}; }

  static HttpResponse error(int status, std::string_view code, std::string_view message) {
    return {status, json{{"code", code}, {"message", message}}.dump(), "application/json"};
  }

  static std::vector<std::string_view> split_path(std::string_view path) {
    std::vector<std::string_view> parts;
    while (!path.empty()) {
      if (path.front() == '/') {
        path.remove_prefix(1);
        continue;
      }
      const auto slash = path.find('/');
      parts.push_back(path.substr(0, slash));
      if (slash == std::string_view::npos) break;
      path.remove_prefix(slash);
    }
    return parts;
  }

  static json parse_body(const HttpRequest& req) {
    try {
      return json::parse(req.body.empty() ? std::string("{}") : req.body);
    } catch (const json::parse_error& e) {
      throw ValidationError("malformed_json", std::string("request body is not JSON: ") + e.what());
    }
  }

  static json require_object(const HttpRequest& req) {
    json body = parse_body(req);
    if (!body.is_object()) throw ValidationError("invalid_request", "request body must be an object");
    return body;
  }

  static const json& field(const json& body, std::string_view name) {
    auto it = body.find(name);
    if (it == body.end()) {
      throw ValidationError("invalid_request", "missing field '" + std::string(name) + "'");
    }
    return *it;
  }

  static const json& field_any(const json& body, std::string_view a, std::string_view b) {
    if (body.contains(a)) return body[std::string(a)];
    return field(body, b);
  }

  static std::int64_t int_param(const HttpRequest& req, const std::string& name,
                                std::int64_t fallback) {
    auto it = req.params.find(name);
    if (it == req.params.end() || it->second.empty()) return fallback;
    try {
      std::size_t used = 0;
      const auto v = std::stoll(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(name);
      return v;
    } catch (const std::exception&) {
      throw ValidationError("invalid_request", "query parameter '" + name + "' must be an integer");
    }
  }

  static bool status_value(const json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) return v.get<int>() == 1;
    throw ValidationError("invalid_request", "status must be 1/0 or true/false");
  }

  static sim::Point point_of(const json& body) {
    const auto& x = field(body, "x");
    const auto& y = field(body, "y");
    if (!x.is_number() || !y.is_number()) {
      throw ValidationError("invalid_position", "x and y must be numbers");
    }
    return {x.get<double>(), y.get<double>()};
  }

  HttpResponse route(const HttpRequest& req) const {
    const auto parts = split_path(req.path);
    const std::string_view m = req.method;
    const auto n = parts.size();

    if (n == 1 && parts[0] == "healthz" && m == "GET") return {200, "ok", "text/plain"};

    if (n >= 1 && parts[0] == "records") {
      if (n == 1 && m == "POST") return create_record(req);
      if (n == 1 && m == "GET") return list_records(req);
      if (n == 2 && m == "PATCH") return update_record(std::string(parts[1]), req);
      if (n == 3 && parts[2] == "status" && m == "PATCH") {
        return set_status(std::string(parts[1]), req);
      }
    }
    if (n == 1 && parts[0] == "query" && m == "POST") return query(req);
    if (n >= 1 && parts[0] == "rules") {
      if (n == 1 && m == "POST") return create_rule(req);
      if (n == 1 && m == "GET") return list_rules();
      if (n == 2 && m == "PATCH") return update_rule(std::string(parts[1]), req);
    }
    if (n == 2 && parts[0] == "stats" && parts[1] == "events" && m == "GET") return stats(req);
    if (n >= 2 && parts[0] == "sim") {
      if (n == 2 && parts[1] == "world" && m == "POST") {
        return ok(json{{"nodes", hub_.load_world(require_object(req))}});
      }
      if (n == 2 && parts[1] == "world" && m == "GET") return ok(hub_.world_json());
      if (n == 2 && parts[1] == "scan" && m == "POST") return sim_scan(req);
      if (n == 4 && parts[1] == "nodes" && parts[3] == "move" && m == "POST") {
        return sim_move(std::string(parts[2]), req);
      }
    }
    return error(404, "not_found", "no route for " + req.method + " " + req.path);
  }

  HttpResponse create_record(const HttpRequest& req) const {
    const json body = require_object(req);
    const auto& mac = field_any(body, "mac", "MAC_address");
    if (!mac.is_string()) throw ValidationError("invalid_mac", "mac must be a string");
    auto chunks = chunks_from_json(field_any(body, "chunks", "data_array"));
    const auto id = hub_.registry().create_record(MacAddress::parse(mac.get<std::string>()),
                                                  std::move(chunks), clock_());
    return ok(json{{"recordID", id}}, 201);
  }

  HttpResponse list_records(const HttpRequest& req) const {
    auto it = req.params.find("mac");
    if (it == req.params.end()) throw ValidationError("invalid_request", "missing 'mac' parameter");
    json arr = json::array();
    for (const auto& r : hub_.registry().get_active_by_mac(MacAddress::parse(it->second))) {
      arr.push_back(record_to_json(r));
    }
    return ok(arr);
  }

  HttpResponse update_record(const std::string& id, const HttpRequest& req) const {
    const json body = require_object(req);
    hub_.registry().update_record(id, chunks_from_json(field_any(body, "chunks", "data_array")),
                                  clock_());
    return ok(record_to_json(*hub_.registry().get_record(id)));
  }

  HttpResponse set_status(const std::string& id, const HttpRequest& req) const {
    const json body = require_object(req);
    hub_.registry().set_status(id, status_value(field_any(body, "status", "active")), clock_());
    return ok(record_to_json(*hub_.registry().get_record(id)));
  }

  HttpResponse query(const HttpRequest& req) const {
    const json body = require_object(req);
    const auto& requester = field(body, "requester");
    if (!requester.is_string()) throw ValidationError("invalid_mac", "requester must be a string");
    const auto now = clock_();
    const Fingerprint fp = fingerprint_from_json(field(body, "fingerprint"), now);
    std::optional<double> tx = hub_.config().default_tx_power_1m;
    if (body.contains("tx_power_1m") && !body["tx_power_1m"].is_null()) {
      if (!body["tx_power_1m"].is_number()) {
        throw ValidationError("invalid_request", "tx_power_1m must be a number");
      }
      tx = body["tx_power_1m"].get<double>();
    }
    const auto result =
        hub_.engine().query(MacAddress::parse(requester.get<std::string>()), fp, tx, now);
    return ok(result_to_json(result));
  }

  HttpResponse create_rule(const HttpRequest& req) const {
    ProximityRule rule = rule_from_json(require_object(req));
    return ok(json{{"ruleID", hub_.rules().create_rule(std::move(rule))}}, 201);
  }

  HttpResponse list_rules() const {
    json arr = json::array();
    for (const auto& r : hub_.rules().list_rules()) arr.push_back(rule_to_json(r));
    return ok(arr);
  }

  HttpResponse update_rule(const std::string& id, const HttpRequest& req) const {
    const json body = require_object(req);
    RuleUpdate u;
    try {
      if (body.contains("node")) u.node = MacAddress::parse(body["node"].get<std::string>());
      if (body.contains("rssi_min")) u.rssi_min = body["rssi_min"].get<double>();
      if (body.contains("rssi_max")) u.rssi_max = body["rssi_max"].get<double>();
      if (body.contains("content")) u.content = chunks_from_json(body["content"]);
      if (body.contains("enabled")) u.enabled = body["enabled"].get<bool>();
      if (body.contains("label")) u.label = body["label"].get<std::string>();
    } catch (const json::exception& e) {
      throw ValidationError("invalid_rule", std::string("malformed rule update: ") + e.what());
    }
    return ok(rule_to_json(hub_.rules().update_rule(id, u)));
  }

  HttpResponse stats(const HttpRequest& req) const {
    auto it = req.params.find("provider");
    if (it == req.params.end()) {
      throw ValidationError("invalid_request", "missing 'provider' parameter");
    }
    const auto provider = MacAddress::parse(it->second);
    const auto from = int_param(req, "from", 0);
    const auto to = int_param(req, "to", std::numeric_limits<std::int64_t>::max());
    const auto count = hub_.registry().event_stats(provider, {from, to});
    return ok(json{{"provider", provider.str()}, {"from", from}, {"to", to}, {"count", count}});
  }

  HttpResponse sim_scan(const HttpRequest& req) const {
    const auto now = clock_();
    const Fingerprint fp = hub_.scan(point_of(require_object(req)), now);
    return ok(json{{"scan_time", fp.scan_time}, {"fingerprint", fingerprint_to_json(fp)}});
  }

  HttpResponse sim_move(const std::string& mac, const HttpRequest& req) const {
    const auto node = MacAddress::parse(mac);
    const auto to = point_of(require_object(req));
    hub_.move_node(node, to);
    return ok(json{{"mac", node.str()}, {"x", to.x}, {"y", to.y}});
  }

  Hub& hub_;
  Clock clock_;
};

inline HttpRequest from_httplib(const httplib::Request& r) {
  HttpRequest req;
  req.method = r.method;
  req.path = r.path;
  for (const auto& [k, v] : r.params) req.params.emplace(k, v);
  req.body = r.body;
  return req;
}

// Routes every request through `api`. Blocks in listen(); call
// server.stop() from another thread to return.
inline void bind(httplib::Server& server, const Api& api) {
  auto handler = [&api](const httplib::Request& r, httplib::Response& res) {
    const auto out = api.handle(from_httplib(r));
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Patch(".*", handler);
  server.Put(".*", handler);
  server.Delete(".*", handler);
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace bdp
