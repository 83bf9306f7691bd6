#pragma once

// Runtime configuration, read from a JSON file:
//
// {
//   "storage": "bdp.store",            // store log path; "" keeps everything in memory
//   "bloom": {"m": 95851, "k": 7}      // explicit sizing, or
//   "bloom": {"target_fp": 0.01, "expected_n": 10000},
//   "default_tx_power_1m": -59,        // optional; enables distances by default
//   "sim": {"gamma": 2, "noise_sigma": 0, "rssi_floor": -90, "seed": 1},
//   "id_seed": 7                       // optional; deterministic identifiers
// }

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "bdp/bloom.hpp"
#include "bdp/error.hpp"
#include "bdp/simworld.hpp"

namespace bdp {

inline constexpr double kDefaultTargetFp = 0.01;
inline constexpr std::uint64_t kDefaultExpectedKeys = 10000;

struct Config {
  std::string storage;
  BloomSizing bloom = optimal_sizing(kDefaultExpectedKeys, kDefaultTargetFp);
  std::optional<double> default_tx_power_1m;
  sim::WorldParams sim;
  std::optional<std::uint64_t> id_seed;
};

inline BloomSizing bloom_sizing_from_json(const json& b) {
  if (b.contains("m") || b.contains("k")) {
    const auto m = b.at("m").get<std::int64_t>();
    const auto k = b.at("k").get<std::int64_t>();
    if (m < 1 || k < 1) throw ValidationError("invalid_config", "bloom.m and bloom.k must be >= 1");
    return {static_cast<std::uint64_t>(m), static_cast<std::uint32_t>(k)};
  }
  const double p = b.value("target_fp", kDefaultTargetFp);
  const auto n = b.value("expected_n", static_cast<std::int64_t>(kDefaultExpectedKeys));
  if (n < 1) throw ValidationError("invalid_config", "bloom.expected_n must be >= 1");
  return optimal_sizing(static_cast<std::uint64_t>(n), p);
}

inline Config config_from_json(const json& j) {
  try {
    Config c;
    if (!j.is_object()) throw ValidationError("invalid_config", "config must be a JSON object");
    c.storage = j.value("storage", std::string{});
    if (j.contains("bloom")) c.bloom = bloom_sizing_from_json(j["bloom"]);
    if (j.contains("default_tx_power_1m") && !j["default_tx_power_1m"].is_null()) {
      c.default_tx_power_1m = j["default_tx_power_1m"].get<double>();
    }
    if (j.contains("sim")) {
      const auto& s = j["sim"];
      c.sim.gamma = s.value("gamma", c.sim.gamma);
      c.sim.noise_sigma = s.value("noise_sigma", c.sim.noise_sigma);
      c.sim.rssi_floor = s.value("rssi_floor", c.sim.rssi_floor);
      c.sim.seed = s.value("seed", c.sim.seed);
    }
    if (j.contains("id_seed")) c.id_seed = j["id_seed"].get<std::uint64_t>();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError("invalid_config", std::string("malformed config: ") + e.what());
  }
}

// Relative storage paths resolve against the config file's directory.
inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("invalid_config", std::string("config is not JSON: ") + e.what());
  }
  Config c = config_from_json(j);
  if (!c.storage.empty() && std::filesystem::path(c.storage).is_relative()) {
    c.storage = (path.parent_path() / c.storage).string();
  }
  return c;
}

}  // namespace bdp
