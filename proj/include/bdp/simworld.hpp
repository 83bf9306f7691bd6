#pragma once

// Deterministic 2-D radio world standing in for Bluetooth discovery.
//
// A discoverable node at distance d from the observer is heard at
//   rssi = tx_power_1m - 10 * gamma * log10(max(d, 0.01)) + N(0, noise_sigma)
// and appears in the scan iff rssi >= rssi_floor. gamma = 2 is free space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdp/error.hpp"
#include "bdp/mac.hpp"
#include "bdp/rules.hpp"

namespace bdp::sim {

inline constexpr double kMinDistance = 0.01;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

struct SimNode {
  MacAddress mac;
  Point position;
  double tx_power_1m = -59.0;
  bool discoverable = true;
};

struct WorldParams {
  double gamma = 2.0;
  double noise_sigma = 0.0;
  double rssi_floor = -90.0;
  std::uint64_t seed = 1;
  bool quantize = false;  // round observed rssi to whole dBm
};

class SimWorld {
 public:
  explicit SimWorld(WorldParams params = {}, std::vector<SimNode> nodes = {})
      : params_(params), rng_(params.seed) {
    if (!(params_.gamma > 0.0) || !std::isfinite(params_.gamma)) {
      throw ValidationError("invalid_world", "path loss exponent must be positive");
    }
    if (!(params_.noise_sigma >= 0.0) || !std::isfinite(params_.noise_sigma)) {
      throw ValidationError("invalid_world", "noise_sigma must be non-negative");
    }
    if (!std::isfinite(params_.rssi_floor)) {
      throw ValidationError("invalid_world", "rssi_floor must be finite");
    }
    for (auto& n : nodes) add_node(std::move(n));
  }

  void add_node(SimNode node) {
    if (node.mac.empty()) throw ValidationError("invalid_mac", "node needs a MAC address");
    check_point(node.position);
    if (!std::isfinite(node.tx_power_1m)) {
      throw ValidationError("invalid_world", "tx_power_1m must be finite");
    }
    if (find(node.mac)) {
      throw ValidationError("duplicate_node", "duplicate node " + node.mac.str());
    }
    nodes_.push_back(std::move(node));
  }

  void move_node(const MacAddress& mac, Point to) {
    check_point(to);
    require(mac).position = to;
  }

  void set_discoverable(const MacAddress& mac, bool on) { require(mac).discoverable = on; }

  // RSSI the observer would see from `node` before noise.
  double mean_rssi(const SimNode& node, Point observer) const {
    const double d = std::max(distance(node.position, observer), kMinDistance);
    return node.tx_power_1m - 10.0 * params_.gamma * std::log10(d);
  }

  // Nodes appear in world order. Noise draws advance the world's generator,
  // so results depend on the seed and on the sequence of scans.
  Fingerprint scan(Point observer, std::int64_t time) {
    check_point(observer);
    Fingerprint fp;
    fp.scan_time = time;
    for (const auto& node : nodes_) {
      if (!node.discoverable) continue;
      double rssi = mean_rssi(node, observer);
      if (params_.noise_sigma > 0.0) {
        rssi += std::normal_distribution<double>(0.0, params_.noise_sigma)(rng_);
      }
      if (params_.quantize) rssi = std::round(rssi);
      if (rssi >= params_.rssi_floor) fp.observations.push_back({node.mac, rssi});
    }
    return fp;
  }

  const std::vector<SimNode>& nodes() const noexcept { return nodes_; }
  const WorldParams& params() const noexcept { return params_; }

  const SimNode* find(const MacAddress& mac) const noexcept {
    for (const auto& n : nodes_) {
      if (n.mac == mac) return &n;
    }
    return nullptr;
  }

 private:
  static void check_point(Point p) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError("invalid_position", "coordinates must be finite");
    }
  }

  SimNode& require(const MacAddress& mac) {
    for (auto& n : nodes_) {
      if (n.mac == mac) return n;
    }
    throw NotFoundError("unknown node " + mac.str());
  }

  WorldParams params_;
  std::mt19937_64 rng_;
  std::vector<SimNode> nodes_;
};

// {gamma, noise_sigma, rssi_floor, seed, nodes: [{mac, x, y, tx_power_1m, discoverable}]}
inline SimWorld world_from_json(const json& j, const WorldParams& defaults = {}) {
  try {
    if (!j.is_object()) throw ValidationError("invalid_world", "world must be a JSON object");
    WorldParams p = defaults;
    p.gamma = j.value("gamma", p.gamma);
    p.noise_sigma = j.value("noise_sigma", p.noise_sigma);
    p.rssi_floor = j.value("rssi_floor", p.rssi_floor);
    p.seed = j.value("seed", p.seed);
    p.quantize = j.value("quantize", p.quantize);
    std::vector<SimNode> nodes;
    for (const auto& n : j.value("nodes", json::array())) {
      SimNode node;
      node.mac = MacAddress::parse(n.at("mac").get<std::string>());
      node.position = {n.at("x").get<double>(), n.at("y").get<double>()};
      node.tx_power_1m = n.value("tx_power_1m", -59.0);
      node.discoverable = n.value("discoverable", true);
      nodes.push_back(std::move(node));
    }
    return SimWorld(p, std::move(nodes));
  } catch (const json::exception& e) {
    throw ValidationError("invalid_world", std::string("malformed world: ") + e.what());
  }
}

inline json world_to_json(const SimWorld& w) {
  json nodes = json::array();
  for (const auto& n : w.nodes()) {
    nodes.push_back({{"mac", n.mac.str()},
                     {"x", n.position.x},
                     {"y", n.position.y},
                     {"tx_power_1m", n.tx_power_1m},
                     {"discoverable", n.discoverable}});
  }
  const auto& p = w.params();
  json j{{"gamma", p.gamma},
         {"noise_sigma", p.noise_sigma},
         {"rssi_floor", p.rssi_floor},
         {"seed", p.seed},
         {"nodes", nodes}};
  if (p.quantize) j["quantize"] = true;
  return j;
}

}  // namespace bdp::sim
