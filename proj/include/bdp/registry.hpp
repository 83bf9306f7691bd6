#pragma once

// Record store binding node identifiers to typed data chunks.
//
// Store layout:
//   records  row = mac, family = "rec", qualifier = recordID,
//            timestamp = timestamp_modified, value = record JSON
//   events   row = provider mac, family = "evt",
//            qualifier = requester mac + '#' + 16-hex sequence number,
//            timestamp = event time, value = event JSON
//
// Every update writes a new version of the record cell; reads take the
// newest version. The Bloom filter holds every mac that has ever had a
// record, and a mac enters the filter before its record becomes readable.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bdp/bloom.hpp"
#include "bdp/chunk.hpp"
#include "bdp/error.hpp"
#include "bdp/ids.hpp"
#include "bdp/kvstore.hpp"
#include "bdp/mac.hpp"

namespace bdp {

inline constexpr std::string_view kRecordFamily = "rec";
inline constexpr std::string_view kEventFamily = "evt";

struct BdpRecord {
  std::string record_id;
  MacAddress mac;
  std::int64_t timestamp_created = 0;
  std::int64_t timestamp_modified = 0;
  bool active = true;
  std::vector<DataChunk> chunks;

  friend bool operator==(const BdpRecord&, const BdpRecord&) = default;
};

inline json record_to_json(const BdpRecord& r) {
  return json{{"recordID", r.record_id},
              {"MAC_address", r.mac.str()},
              {"timestamp_created", r.timestamp_created},
              {"timestamp_modified", r.timestamp_modified},
              {"status", r.active ? 1 : 0},
              {"data_array", chunks_to_json(r.chunks)}};
}

inline BdpRecord record_from_json(const json& j) {
  try {
    BdpRecord r;
    r.record_id = j.at("recordID").get<std::string>();
    r.mac = MacAddress::parse(j.at("MAC_address").get<std::string>());
    r.timestamp_created = j.at("timestamp_created").get<std::int64_t>();
    r.timestamp_modified = j.at("timestamp_modified").get<std::int64_t>();
    const auto& status = j.at("status");
    r.active = status.is_boolean() ? status.get<bool>() : status.get<int>() != 0;
    r.chunks = chunks_from_json(j.at("data_array"));
    return r;
  } catch (const json::exception& e) {
    throw ValidationError("invalid_record", std::string("malformed record: ") + e.what());
  }
}

struct BrowsingEvent {
  MacAddress requester;
  MacAddress provider;
  std::string record_id;
  std::int64_t time = 0;
};

// Half-open [start, end) in epoch milliseconds.
struct TimeWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;
};

class Registry {
 public:
  using RecordRef = std::shared_ptr<const BdpRecord>;

  Registry(KvStore& store, BloomSizing bloom_sizing,
           std::optional<std::uint64_t> id_seed = std::nullopt)
      : store_(store),
        sizing_(bloom_sizing),
        ids_(id_seed),
        bloom_(std::make_shared<BloomFilter>(bloom_sizing)) {
    load();
  }

  Registry(const Registry&) = delete;
  Registry& operator=(const Registry&) = delete;

  std::string create_record(const MacAddress& mac, std::vector<DataChunk> chunks,
                            std::int64_t now) {
    require_mac(mac);
    validate(chunks);
    std::unique_lock lock(mutex_);
    std::string id = ids_.next();
    while (index_.contains(id)) id = ids_.next();

    auto rec = std::make_shared<BdpRecord>();
    rec->record_id = id;
    rec->mac = mac;
    rec->timestamp_created = now;
    rec->timestamp_modified = now;
    rec->active = true;
    rec->chunks = std::move(chunks);

    bloom_snapshot()->insert(mac.str());
    write(rec);
    return id;
  }

  void update_record(const std::string& record_id, std::vector<DataChunk> chunks,
                     std::int64_t now) {
    validate(chunks);
    std::unique_lock lock(mutex_);
    auto rec = copy_for_write(record_id, now);
    rec->chunks = std::move(chunks);
    write(rec);
  }

  // A redundant toggle still counts as a modification.
  void set_status(const std::string& record_id, bool active, std::int64_t now) {
    std::unique_lock lock(mutex_);
    auto rec = copy_for_write(record_id, now);
    rec->active = active;
    write(rec);
  }

  std::optional<BdpRecord> get_record(const std::string& record_id) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(record_id);
    if (it == index_.end()) return std::nullopt;
    return *it->second;
  }

  // Active records of one mac, oldest first.
  std::vector<BdpRecord> get_active_by_mac(const MacAddress& mac) const {
    return records_of(mac, true);
  }

  // Shared immutable views of the active records of one mac, oldest first.
  std::vector<RecordRef> active_record_refs(const MacAddress& mac) const {
    return record_refs(mac, true);
  }

  // Every record of one mac regardless of status, oldest first.
  std::vector<BdpRecord> get_all_by_mac(const MacAddress& mac) const {
    return records_of(mac, false);
  }

  std::vector<BdpRecord> all_records() const {
    std::shared_lock lock(mutex_);
    std::vector<BdpRecord> out;
    out.reserve(index_.size());
    for (const auto& [id, rec] : index_) out.push_back(*rec);
    std::sort(out.begin(), out.end(), [](const BdpRecord& a, const BdpRecord& b) {
      return std::tie(a.mac, a.timestamp_created, a.record_id) <
             std::tie(b.mac, b.timestamp_created, b.record_id);
    });
    return out;
  }

  std::size_t record_count() const {
    std::shared_lock lock(mutex_);
    return index_.size();
  }

  void record_event(const BrowsingEvent& event) {
    require_mac(event.requester);
    require_mac(event.provider);
    if (event.time <= 0) throw ValidationError("invalid_event", "event time must be positive");
    std::unique_lock lock(mutex_);
    char seq[17];
    std::snprintf(seq, sizeof seq, "%016llx", static_cast<unsigned long long>(next_event_seq_++));
    json value{{"requester", event.requester.str()},
               {"provider", event.provider.str()},
               {"record_id", event.record_id},
               {"time", event.time}};
    store_.put(StoreEntry{{event.provider.str(), std::string(kEventFamily),
                           event.requester.str() + "#" + seq, "", event.time},
                          value.dump()});
  }

  // Events for `provider` with time in [window.start, window.end).
  std::size_t event_stats(const MacAddress& provider, TimeWindow window) const {
    require_mac(provider);
    if (window.end <= window.start) return 0;
    auto [start, end] = KeyBound::prefix_range({provider.str(), std::string(kEventFamily)});
    std::size_t count = 0;
    store_.visit(start, end, [&](const StoreKey& k, std::string_view) {
      if (k.timestamp >= window.start && k.timestamp < window.end) ++count;
    });
    return count;
  }

  std::shared_ptr<const BloomFilter> bloom() const { return bloom_snapshot(); }

  bool maybe_has_records(const MacAddress& mac) const {
    return bloom_snapshot()->maybe_contains(mac.str());
  }

  // Replaces the filter with one holding exactly the macs that have records,
  // shedding stale bits.
  void rebuild_bloom() {
    std::unique_lock lock(mutex_);
    auto fresh = std::make_shared<BloomFilter>(sizing_);
    for (const auto& [id, rec] : index_) fresh->insert(rec->mac.str());
    std::lock_guard guard(bloom_mutex_);
    bloom_ = std::move(fresh);
  }

  const BloomSizing& bloom_sizing() const noexcept { return sizing_; }

 private:
  static void require_mac(const MacAddress& mac) {
    if (mac.empty()) throw ValidationError("invalid_mac", "MAC address is required");
  }

  std::shared_ptr<BloomFilter> bloom_snapshot() const {
    std::lock_guard guard(bloom_mutex_);
    return bloom_;
  }

  std::shared_ptr<BdpRecord> copy_for_write(const std::string& record_id, std::int64_t now) {
    auto it = index_.find(record_id);
    if (it == index_.end()) throw NotFoundError("unknown record '" + record_id + "'");
    if (now < it->second->timestamp_modified) {
      throw ConflictError("modification time " + std::to_string(now) +
                          " precedes the record's last modification");
    }
    auto rec = std::make_shared<BdpRecord>(*it->second);
    rec->timestamp_modified = now;
    return rec;
  }

  void write(const std::shared_ptr<BdpRecord>& rec) {
    store_.put(StoreEntry{{rec->mac.str(), std::string(kRecordFamily), rec->record_id, "",
                           rec->timestamp_modified},
                          record_to_json(*rec).dump()});
    index_[rec->record_id] = rec;
  }

  // One store scan over the mac's record cells. The newest version of each
  // cell is served from the index when it is current, decoded otherwise.
  std::vector<RecordRef> record_refs(const MacAddress& mac, bool active_only) const {
    require_mac(mac);
    std::vector<RecordRef> out;
    auto [start, end] = KeyBound::prefix_range({mac.str(), std::string(kRecordFamily)});
    std::shared_lock lock(mutex_);
    bool seen_any = false;
    std::string last;
    store_.visit(start, end, [&](const StoreKey& k, std::string_view value) {
      if (seen_any && k.qualifier == last) return;  // older version
      seen_any = true;
      last = k.qualifier;
      RecordRef rec;
      auto it = index_.find(k.qualifier);
      if (it != index_.end() && it->second->timestamp_modified == k.timestamp) {
        rec = it->second;
      } else {
        rec = std::make_shared<const BdpRecord>(record_from_json(json::parse(value)));
      }
      if (!active_only || rec->active) out.push_back(std::move(rec));
    });
    if (out.size() > 1) {
      std::sort(out.begin(), out.end(), [](const RecordRef& a, const RecordRef& b) {
        return std::tie(a->timestamp_created, a->record_id) <
               std::tie(b->timestamp_created, b->record_id);
      });
    }
    return out;
  }

  std::vector<BdpRecord> records_of(const MacAddress& mac, bool active_only) const {
    std::vector<BdpRecord> out;
    for (const auto& r : record_refs(mac, active_only)) out.push_back(*r);
    return out;
  }

  // Rebuilds the in-memory index, the filter and the event sequence from
  // whatever the store already holds.
  void load() {
    auto bloom = bloom_snapshot();
    std::string last_row;
    std::string last_qualifier;
    for (const auto& e : store_.scan_all()) {
      if (e.key.family == kRecordFamily && MacAddress::is_valid(e.key.row)) {
        if (e.key.row == last_row && e.key.qualifier == last_qualifier) continue;
        last_row = e.key.row;
        last_qualifier = e.key.qualifier;
        auto rec = std::make_shared<BdpRecord>(record_from_json(json::parse(e.value)));
        bloom->insert(rec->mac.str());
        index_[rec->record_id] = std::move(rec);
      } else if (e.key.family == kEventFamily) {
        const auto hash = e.key.qualifier.rfind('#');
        if (hash != std::string::npos) {
          const std::uint64_t seq = std::stoull(e.key.qualifier.substr(hash + 1), nullptr, 16);
          next_event_seq_ = std::max(next_event_seq_, seq + 1);
        }
      }
    }
  }

  KvStore& store_;
  BloomSizing sizing_;
  IdGenerator ids_;

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, RecordRef> index_;
  std::uint64_t next_event_seq_ = 0;

  mutable std::mutex bloom_mutex_;
  std::shared_ptr<BloomFilter> bloom_;
};

}  // namespace bdp
