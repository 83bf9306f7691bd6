#pragma once

// Proximity production rules:
//
//   IF node N is visible AND rssi_min <= RSSI(N) <= rssi_max THEN activate content
//
// Rules are kept in creation order. Evaluation reads an immutable snapshot
// of the rule set, so it never blocks or observes a half-applied edit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bdp/chunk.hpp"
#include "bdp/error.hpp"
#include "bdp/ids.hpp"
#include "bdp/kvstore.hpp"
#include "bdp/mac.hpp"

namespace bdp {

struct Observation {
  MacAddress node;
  double rssi = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

// Nodes heard in one scan. Node identifiers are unique; a raw scan that
// hears a node twice keeps its strongest reading, at the position of the
// first sighting.
struct Fingerprint {
  std::vector<Observation> observations;
  std::int64_t scan_time = 0;

  static Fingerprint from_raw(std::vector<Observation> raw, std::int64_t scan_time = 0) {
    Fingerprint fp;
    fp.scan_time = scan_time;
    std::unordered_map<MacAddress, std::size_t> slot;
    for (auto& obs : raw) {
      if (obs.node.empty()) throw ValidationError("invalid_mac", "observation without a node");
      if (!std::isfinite(obs.rssi)) {
        throw ValidationError("invalid_fingerprint", "rssi must be finite for " + obs.node.str());
      }
      auto [it, fresh] = slot.try_emplace(obs.node, fp.observations.size());
      if (fresh) {
        fp.observations.push_back(std::move(obs));
      } else if (obs.rssi > fp.observations[it->second].rssi) {
        fp.observations[it->second].rssi = obs.rssi;
      }
    }
    return fp;
  }

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

inline json fingerprint_to_json(const Fingerprint& fp) {
  json arr = json::array();
  for (const auto& o : fp.observations) arr.push_back({{"mac", o.node.str()}, {"rssi", o.rssi}});
  return arr;
}

// Accepts [{"mac": ..., "rssi": ...}, ...].
inline Fingerprint fingerprint_from_json(const json& j, std::int64_t scan_time = 0) {
  if (!j.is_array()) throw ValidationError("invalid_fingerprint", "fingerprint must be an array");
  std::vector<Observation> raw;
  raw.reserve(j.size());
  for (const auto& o : j) {
    if (!o.is_object() || !o.contains("mac") || !o["mac"].is_string() || !o.contains("rssi") ||
        !o["rssi"].is_number()) {
      throw ValidationError("invalid_fingerprint",
                            "observation must be {\"mac\": string, \"rssi\": number}");
    }
    raw.push_back({MacAddress::parse(o["mac"].get<std::string>()), o["rssi"].get<double>()});
  }
  return Fingerprint::from_raw(std::move(raw), scan_time);
}

struct ProximityRule {
  std::string rule_id;
  MacAddress node;
  double rssi_min = -100.0;
  double rssi_max = 0.0;
  std::vector<DataChunk> content;
  bool enabled = true;
  std::optional<std::string> label;

  // Closed interval.
  bool matches(double rssi) const noexcept { return rssi >= rssi_min && rssi <= rssi_max; }

  friend bool operator==(const ProximityRule&, const ProximityRule&) = default;
};

inline void validate(const ProximityRule& r) {
  if (r.node.empty()) throw ValidationError("invalid_mac", "rule needs a node");
  if (!std::isfinite(r.rssi_min) || !std::isfinite(r.rssi_max)) {
    throw ValidationError("invalid_rule", "rule rssi bounds must be finite");
  }
  if (r.rssi_min > r.rssi_max) {
    throw ValidationError("invalid_rule", "rssi_min must not exceed rssi_max");
  }
  validate(r.content);
}

inline json rule_to_json(const ProximityRule& r) {
  json j{{"ruleID", r.rule_id},
         {"node", r.node.str()},
         {"rssi_min", r.rssi_min},
         {"rssi_max", r.rssi_max},
         {"enabled", r.enabled},
         {"content", chunks_to_json(r.content)}};
  if (r.label) j["label"] = *r.label;
  return j;
}

inline ProximityRule rule_from_json(const json& j) {
  try {
    ProximityRule r;
    if (j.contains("ruleID")) r.rule_id = j.at("ruleID").get<std::string>();
    r.node = MacAddress::parse(j.at("node").get<std::string>());
    r.rssi_min = j.at("rssi_min").get<double>();
    r.rssi_max = j.at("rssi_max").get<double>();
    r.enabled = j.value("enabled", true);
    r.content = chunks_from_json(j.at("content"));
    if (j.contains("label") && !j["label"].is_null()) r.label = j["label"].get<std::string>();
    validate(r);
    return r;
  } catch (const json::exception& e) {
    throw ValidationError("invalid_rule", std::string("malformed rule: ") + e.what());
  }
}

struct RuleActivation {
  std::string rule_id;
  std::size_t rule_index = 0;  // position in the evaluated rule set
  MacAddress node;
  double rssi = 0.0;
  std::vector<DataChunk> content;

  friend bool operator==(const RuleActivation&, const RuleActivation&) = default;
};

// Enabled rules whose node is in the fingerprint with an RSSI inside the
// rule's closed interval, in rule-set order.
inline std::vector<RuleActivation> evaluate(std::span<const ProximityRule> rules,
                                            const Fingerprint& fp) {
  std::vector<RuleActivation> fired;
  if (rules.empty() || fp.observations.empty()) return fired;
  std::unordered_map<std::string_view, double> heard;
  heard.reserve(fp.observations.size());
  for (const auto& o : fp.observations) {
    auto [it, fresh] = heard.try_emplace(o.node.str(), o.rssi);
    if (!fresh && o.rssi > it->second) it->second = o.rssi;
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& rule = rules[i];
    if (!rule.enabled) continue;
    auto it = heard.find(rule.node.str());
    if (it == heard.end() || !rule.matches(it->second)) continue;
    fired.push_back({rule.rule_id, i, rule.node, it->second, rule.content});
  }
  return fired;
}

struct RuleUpdate {
  std::optional<MacAddress> node;
  std::optional<double> rssi_min;
  std::optional<double> rssi_max;
  std::optional<std::vector<DataChunk>> content;
  std::optional<bool> enabled;
  std::optional<std::string> label;
};

// Rule set with optional persistence in a KvStore (row "rules",
// family "rule", qualifier ruleID, timestamp = edit revision).
class RuleBook {
 public:
  using Snapshot = std::shared_ptr<const std::vector<ProximityRule>>;

  explicit RuleBook(KvStore* store = nullptr, std::optional<std::uint64_t> id_seed = std::nullopt)
      : store_(store), ids_(id_seed), rules_(std::make_shared<std::vector<ProximityRule>>()) {
    load();
  }

  RuleBook(const RuleBook&) = delete;
  RuleBook& operator=(const RuleBook&) = delete;

  std::string create_rule(ProximityRule rule) {
    validate(rule);
    std::lock_guard lock(write_mutex_);
    auto next = std::make_shared<std::vector<ProximityRule>>(*snapshot());
    rule.rule_id = ids_.next();
    while (find(*next, rule.rule_id) != nullptr) rule.rule_id = ids_.next();
    next->push_back(rule);
    persist(rule, next->size() - 1);
    publish(std::move(next));
    return rule.rule_id;
  }

  ProximityRule update_rule(const std::string& rule_id, const RuleUpdate& update) {
    std::lock_guard lock(write_mutex_);
    auto next = std::make_shared<std::vector<ProximityRule>>(*snapshot());
    ProximityRule* rule = find(*next, rule_id);
    if (!rule) throw NotFoundError("unknown rule '" + rule_id + "'");
    ProximityRule edited = *rule;
    if (update.node) edited.node = *update.node;
    if (update.rssi_min) edited.rssi_min = *update.rssi_min;
    if (update.rssi_max) edited.rssi_max = *update.rssi_max;
    if (update.content) edited.content = *update.content;
    if (update.enabled) edited.enabled = *update.enabled;
    if (update.label) edited.label = *update.label;
    validate(edited);
    *rule = edited;
    persist(edited, static_cast<std::size_t>(rule - next->data()));
    publish(std::move(next));
    return edited;
  }

  void set_enabled(const std::string& rule_id, bool enabled) {
    RuleUpdate u;
    u.enabled = enabled;
    update_rule(rule_id, u);
  }

  std::vector<ProximityRule> list_rules() const { return *snapshot(); }

  Snapshot snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return rules_;
  }

  std::vector<RuleActivation> evaluate(const Fingerprint& fp) const {
    auto rules = snapshot();
    return bdp::evaluate(*rules, fp);
  }

 private:
  static constexpr std::string_view kRow = "rules";
  static constexpr std::string_view kFamily = "rule";

  static ProximityRule* find(std::vector<ProximityRule>& rules, const std::string& id) {
    for (auto& r : rules) {
      if (r.rule_id == id) return &r;
    }
    return nullptr;
  }

  void publish(std::shared_ptr<std::vector<ProximityRule>> next) {
    std::lock_guard lock(snapshot_mutex_);
    rules_ = std::move(next);
  }

  void persist(const ProximityRule& rule, std::size_t position) {
    if (!store_) return;
    json value{{"rule", rule_to_json(rule)}, {"position", position}};
    store_->put(StoreEntry{{std::string(kRow), std::string(kFamily), rule.rule_id, "", ++revision_},
                           value.dump()});
  }

  void load() {
    if (!store_) return;
    auto [start, end] = KeyBound::prefix_range({std::string(kRow), std::string(kFamily)});
    std::vector<std::pair<std::size_t, ProximityRule>> loaded;
    std::string last;
    for (const auto& e : store_->scan(start, end)) {
      revision_ = std::max(revision_, e.key.timestamp);
      if (!loaded.empty() && e.key.qualifier == last) continue;  // older revision
      last = e.key.qualifier;
      const json value = json::parse(e.value);
      loaded.emplace_back(value.at("position").get<std::size_t>(), rule_from_json(value.at("rule")));
    }
    std::sort(loaded.begin(), loaded.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    auto rules = std::make_shared<std::vector<ProximityRule>>();
    for (auto& [pos, rule] : loaded) rules->push_back(std::move(rule));
    rules_ = std::move(rules);
  }

  KvStore* store_;
  IdGenerator ids_;
  std::int64_t revision_ = 0;

  std::mutex write_mutex_;
  mutable std::mutex snapshot_mutex_;
  Snapshot rules_;
};

}  // namespace bdp
