#pragma once

// The browser pipeline: fingerprint in, Bloom-filtered registry lookups and
// rule activations out, sorted strongest signal first.
//
// For each observed node the filter is consulted first. A negative answer
// skips the registry entirely; a positive one costs one store lookup, which
// may come back empty on a false positive. Nodes that yield no chunks are
// left out of the result.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdp/chunk.hpp"
#include "bdp/mac.hpp"
#include "bdp/ranging.hpp"
#include "bdp/registry.hpp"
#include "bdp/rules.hpp"

namespace bdp {

enum class EntrySource { record, rule };

inline std::string_view to_string(EntrySource s) noexcept {
  return s == EntrySource::record ? "record" : "rule";
}

struct QueryEntry {
  MacAddress node;
  double rssi = 0.0;
  std::optional<double> distance_m;
  std::vector<DataChunk> chunks;
  EntrySource source = EntrySource::record;
  std::vector<std::string> record_ids;  // source == record
  std::string rule_id;                  // source == rule
  std::size_t rule_index = 0;

  friend bool operator==(const QueryEntry&, const QueryEntry&) = default;
};

struct QueryResult {
  std::vector<QueryEntry> entries;

  friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

struct LookupCounts {
  std::size_t bloom_skips = 0;
  std::size_t store_lookups = 0;
};

// Strongest first; ties by mac, then records before rules, then rule order.
inline bool entry_before(const QueryEntry& a, const QueryEntry& b) noexcept {
  if (a.rssi != b.rssi) return a.rssi > b.rssi;
  if (a.node != b.node) return a.node < b.node;
  if (a.source != b.source) return a.source == EntrySource::record;
  return a.rule_index < b.rule_index;
}

inline json entry_to_json(const QueryEntry& e) {
  json j{{"node", e.node.str()},
         {"rssi", e.rssi},
         {"source", to_string(e.source)},
         {"chunks", chunks_to_json(e.chunks)}};
  if (e.distance_m) j["distance_m"] = *e.distance_m;
  if (e.source == EntrySource::record) {
    j["record_ids"] = e.record_ids;
  } else {
    j["ruleID"] = e.rule_id;
  }
  return j;
}

inline json result_to_json(const QueryResult& r) {
  json arr = json::array();
  for (const auto& e : r.entries) arr.push_back(entry_to_json(e));
  return arr;
}

class QueryEngine {
 public:
  QueryEngine(Registry& registry, const RuleBook& rules) : registry_(registry), rules_(rules) {}

  // With the cache bypassed every observed node costs a store lookup. The
  // result must not change either way.
  void set_bloom_enabled(bool enabled) noexcept { bloom_enabled_ = enabled; }
  bool bloom_enabled() const noexcept { return bloom_enabled_; }

  // Active records for one node, going through the filter when enabled.
  std::vector<Registry::RecordRef> lookup_node(const MacAddress& node, const BloomFilter* bloom,
                                               LookupCounts& counts) const {
    if (bloom && !bloom->maybe_contains(node.str())) {
      ++counts.bloom_skips;
      return {};
    }
    ++counts.store_lookups;
    return registry_.active_record_refs(node);
  }

  // Runs the pipeline. When `now` is positive one browsing event is logged
  // per record-sourced entry.
  QueryResult query(const MacAddress& requester, const Fingerprint& fp,
                    std::optional<double> tx_power_1m, std::int64_t now,
                    LookupCounts* counts_out = nullptr) {
    if (requester.empty()) throw ValidationError("invalid_mac", "requester MAC is required");
    if (tx_power_1m && !std::isfinite(*tx_power_1m)) {
      throw ValidationError("invalid_request", "tx_power_1m must be finite");
    }
    const Fingerprint clean = Fingerprint::from_raw(fp.observations, fp.scan_time);

    LookupCounts counts;
    QueryResult result;
    const auto bloom = bloom_enabled_ ? registry_.bloom() : nullptr;
    for (const auto& obs : clean.observations) {
      const auto records = lookup_node(obs.node, bloom.get(), counts);
      if (records.empty()) continue;
      QueryEntry e;
      e.node = obs.node;
      e.rssi = obs.rssi;
      e.source = EntrySource::record;
      for (const auto& rec : records) {
        e.record_ids.push_back(rec->record_id);
        e.chunks.insert(e.chunks.end(), rec->chunks.begin(), rec->chunks.end());
      }
      result.entries.push_back(std::move(e));
    }
    for (auto& act : rules_.evaluate(clean)) {
      QueryEntry e;
      e.node = act.node;
      e.rssi = act.rssi;
      e.source = EntrySource::rule;
      e.rule_id = std::move(act.rule_id);
      e.rule_index = act.rule_index;
      e.chunks = std::move(act.content);
      result.entries.push_back(std::move(e));
    }
    if (tx_power_1m) {
      for (auto& e : result.entries) {
        e.distance_m = ranging::estimate_distance(*tx_power_1m, e.rssi).meters;
      }
    }
    std::stable_sort(result.entries.begin(), result.entries.end(), entry_before);

    if (now > 0) {
      for (const auto& e : result.entries) {
        if (e.source != EntrySource::record) continue;
        registry_.record_event({requester, e.node, e.record_ids.front(), now});
      }
    }
    if (counts_out) *counts_out = counts;
    return result;
  }

  // Lookup phase only: how many nodes the filter turned away and how many
  // reached the store. The two always add up to the fingerprint size.
  LookupCounts lookup_count_probe(const Fingerprint& fp) const {
    const Fingerprint clean = Fingerprint::from_raw(fp.observations, fp.scan_time);
    LookupCounts counts;
    const auto bloom = bloom_enabled_ ? registry_.bloom() : nullptr;
    for (const auto& obs : clean.observations) lookup_node(obs.node, bloom.get(), counts);
    return counts;
  }

 private:
  Registry& registry_;
  const RuleBook& rules_;
  bool bloom_enabled_ = true;
};

}  // namespace bdp
