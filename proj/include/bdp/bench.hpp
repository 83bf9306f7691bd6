#pragma once

// Desk-scale lookup benchmark.
//
// Loads `records` records (one per node) into an in-memory hub, then times
// three passes of `queries` node lookups each:
//   direct      get_active_by_mac on registered nodes only
//   filtered    mixed traffic through the Bloom filter
//   unfiltered  the same mixed traffic with the filter bypassed
// Mixed traffic draws unregistered nodes with probability `unregistered_share`.

#include <array>
#include <chrono>
#include <cstdint>
#include <random>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bdp/hub.hpp"

namespace bdp::bench {

struct Options {
  std::size_t records = 100000;
  std::size_t queries = 200000;
  double unregistered_share = 0.9;
  double target_fp = 0.01;
  std::uint64_t seed = 42;
};

struct Report {
  std::size_t records = 0;
  std::size_t queries = 0;
  double direct_lookups_per_sec = 0;
  double filtered_lookups_per_sec = 0;
  double unfiltered_lookups_per_sec = 0;
  double bloom_skip_ratio = 0;
  double filtered_store_lookup_ratio = 0;
  double predicted_fp = 0;
  std::size_t hits = 0;  // sanity: records found on the filtered pass

  double speedup() const noexcept {
    return unfiltered_lookups_per_sec > 0 ? filtered_lookups_per_sec / unfiltered_lookups_per_sec
                                          : 0.0;
  }
};

inline json report_to_json(const Report& r) {
  return json{{"records", r.records},
              {"queries", r.queries},
              {"direct_lookups_per_sec", r.direct_lookups_per_sec},
              {"filtered_lookups_per_sec", r.filtered_lookups_per_sec},
              {"unfiltered_lookups_per_sec", r.unfiltered_lookups_per_sec},
              {"bloom_skip_ratio", r.bloom_skip_ratio},
              {"filtered_store_lookup_ratio", r.filtered_store_lookup_ratio},
              {"predicted_fp", r.predicted_fp},
              {"filter_speedup", r.speedup()}};
}

namespace detail {

inline MacAddress mac_from_bits(std::uint64_t v) {
  return MacAddress::from_octets({static_cast<std::uint8_t>(v >> 40),
                                  static_cast<std::uint8_t>(v >> 32),
                                  static_cast<std::uint8_t>(v >> 24),
                                  static_cast<std::uint8_t>(v >> 16),
                                  static_cast<std::uint8_t>(v >> 8),
                                  static_cast<std::uint8_t>(v)});
}

// Random 48-bit addresses, so registered and unregistered nodes interleave
// in key order the way real traffic does.
inline MacAddress random_mac(std::mt19937_64& rng, const std::unordered_set<std::uint64_t>& taken,
                             std::unordered_set<std::uint64_t>* claim) {
  for (;;) {
    const std::uint64_t v = rng() & 0xffffffffffffULL;
    if (taken.contains(v)) continue;
    if (claim && !claim->insert(v).second) continue;
    return mac_from_bits(v);
  }
}

template <class Fn>
double per_second(std::size_t ops, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  return dt.count() > 0 ? static_cast<double>(ops) / dt.count() : 0.0;
}

}  // namespace detail

inline Report run(const Options& opt) {
  Config cfg;
  cfg.bloom = optimal_sizing(std::max<std::size_t>(opt.records, 1), opt.target_fp);
  cfg.id_seed = opt.seed;
  Hub hub(cfg);

  std::mt19937_64 rng(opt.seed);
  std::unordered_set<std::uint64_t> used;
  std::vector<MacAddress> registered;
  registered.reserve(opt.records);
  for (std::size_t i = 0; i < opt.records; ++i) {
    registered.push_back(detail::random_mac(rng, {}, &used));
    hub.registry().create_record(registered.back(),
                                 {{ChunkType::text, "announcement " + std::to_string(i)}},
                                 static_cast<std::int64_t>(i + 1));
  }

  std::uniform_int_distribution<std::size_t> pick(0, opt.records ? opt.records - 1 : 0);
  std::bernoulli_distribution unregistered(opt.unregistered_share);

  std::vector<MacAddress> direct;
  direct.reserve(opt.queries);
  for (std::size_t i = 0; i < opt.queries && opt.records; ++i) direct.push_back(registered[pick(rng)]);

  std::vector<MacAddress> mixed;
  mixed.reserve(opt.queries);
  for (std::size_t i = 0; i < opt.queries; ++i) {
    if (opt.records == 0 || unregistered(rng)) {
      mixed.push_back(detail::random_mac(rng, used, nullptr));
    } else {
      mixed.push_back(registered[pick(rng)]);
    }
  }

  Report r;
  r.records = opt.records;
  r.queries = opt.queries;
  const auto bloom = hub.registry().bloom();
  r.predicted_fp = bloom->predicted_fp();

  std::size_t sink = 0;
  r.direct_lookups_per_sec = detail::per_second(direct.size(), [&] {
    for (const auto& mac : direct) sink += hub.registry().get_active_by_mac(mac).size();
  });

  LookupCounts filtered;
  r.filtered_lookups_per_sec = detail::per_second(mixed.size(), [&] {
    for (const auto& mac : mixed) r.hits += hub.engine().lookup_node(mac, bloom.get(), filtered).size();
  });

  LookupCounts unfiltered;
  r.unfiltered_lookups_per_sec = detail::per_second(mixed.size(), [&] {
    for (const auto& mac : mixed) sink += hub.engine().lookup_node(mac, nullptr, unfiltered).size();
  });

  if (!mixed.empty()) {
    r.bloom_skip_ratio = static_cast<double>(filtered.bloom_skips) / static_cast<double>(mixed.size());
    r.filtered_store_lookup_ratio =
        static_cast<double>(filtered.store_lookups) / static_cast<double>(mixed.size());
  }
  if (sink == std::size_t(-1)) r.hits = 0;  // keep the loops observable
  return r;
}

}  // namespace bdp::bench
