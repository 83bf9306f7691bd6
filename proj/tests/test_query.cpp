#include <random>

#include <gtest/gtest.h>

#include "bdp/hub.hpp"
#include "oracles.hpp"

using namespace bdp;

namespace {

const MacAddress kMe = MacAddress::parse("00:00:00:00:00:aa");
const MacAddress kA = MacAddress::parse("20:00:00:00:00:01");
const MacAddress kB = MacAddress::parse("20:00:00:00:00:02");
const MacAddress kC = MacAddress::parse("20:00:00:00:00:03");

std::vector<DataChunk> text(const std::string& s) { return {{ChunkType::text, s}}; }

Fingerprint fp(std::vector<Observation> obs) { return Fingerprint::from_raw(std::move(obs)); }

Config small_config(std::uint64_t seed = 1) {
  Config c;
  c.bloom = optimal_sizing(100, 0.01);
  c.id_seed = seed;
  return c;
}

ProximityRule rule(const MacAddress& node, double lo, double hi, const std::string& msg) {
  ProximityRule r;
  r.node = node;
  r.rssi_min = lo;
  r.rssi_max = hi;
  r.content = text(msg);
  return r;
}

}  // namespace

TEST(QueryEngineTest, EmptyWorld) {
  Hub hub(small_config());
  auto r = hub.engine().query(kMe, fp({{kA, -50}}), std::nullopt, 1);
  EXPECT_TRUE(r.entries.empty());
  EXPECT_EQ(hub.registry().event_stats(kA, {0, 10}), 0u);
}

TEST(QueryEngineTest, SortedStrongestFirstWithChunksConcatenated) {
  Hub hub(small_config());
  const auto a1 = hub.registry().create_record(kA, text("a-first"), 10);
  const auto a2 = hub.registry().create_record(kA, {{ChunkType::url, "https://a.example"}}, 20);
  hub.registry().create_record(kB, text("b"), 30);
  auto r = hub.engine().query(kMe, fp({{kA, -70}, {kB, -50}, {kC, -40}}), std::nullopt, 0);
  ASSERT_EQ(r.entries.size(), 2u);
  EXPECT_EQ(r.entries[0].node, kB);
  EXPECT_EQ(r.entries[1].node, kA);
  EXPECT_EQ(r.entries[1].record_ids, (std::vector<std::string>{a1, a2}));
  ASSERT_EQ(r.entries[1].chunks.size(), 2u);
  EXPECT_EQ(r.entries[1].chunks[0].data, "a-first");
  EXPECT_FALSE(r.entries[0].distance_m);
}

TEST(QueryEngineTest, InactiveRecordsSkipped) {
  Hub hub(small_config());
  const auto id = hub.registry().create_record(kA, text("a"), 10);
  hub.registry().set_status(id, false, 11);
  EXPECT_TRUE(hub.engine().query(kMe, fp({{kA, -50}}), std::nullopt, 0).entries.empty());
}

TEST(QueryEngineTest, DistanceFromTxPower) {
  Hub hub(small_config());
  hub.registry().create_record(kA, text("a"), 10);
  auto r = hub.engine().query(kMe, fp({{kA, -79}}), -59.0, 0);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(*r.entries[0].distance_m, 10.0);
  EXPECT_THROW(hub.engine().query(kMe, fp({{kA, -79}}), NAN, 0), ValidationError);
  EXPECT_THROW(hub.engine().query(MacAddress{}, fp({{kA, -79}}), std::nullopt, 0), ValidationError);
}

TEST(QueryEngineTest, RulesMergeAndTieBreak) {
  Hub hub(small_config());
  hub.registry().create_record(kB, text("b-record"), 10);
  const auto r1 = hub.rules().create_rule(rule(kB, -60, -40, "b-rule-1"));
  const auto r0 = hub.rules().create_rule(rule(kA, -60, -40, "a-rule"));
  const auto r2 = hub.rules().create_rule(rule(kB, -60, -50, "b-rule-2"));
  auto r = hub.engine().query(kMe, fp({{kA, -50}, {kB, -50}}), std::nullopt, 0);
  ASSERT_EQ(r.entries.size(), 4u);
  EXPECT_EQ(r.entries[0].rule_id, r0);
  EXPECT_EQ(r.entries[1].source, EntrySource::record);
  EXPECT_EQ(r.entries[1].node, kB);
  EXPECT_EQ(r.entries[2].rule_id, r1);
  EXPECT_EQ(r.entries[3].rule_id, r2);
}

TEST(QueryEngineTest, OneEventPerRecordEntry) {
  Hub hub(small_config());
  const auto a1 = hub.registry().create_record(kA, text("a1"), 10);
  hub.registry().create_record(kA, text("a2"), 11);
  hub.registry().create_record(kB, text("b"), 12);
  hub.rules().create_rule(rule(kA, -100, 0, "rule"));
  hub.engine().query(kMe, fp({{kA, -50}, {kB, -60}, {kC, -40}}), std::nullopt, 1000);
  hub.engine().query(kMe, fp({{kA, -50}}), std::nullopt, 2000);
  EXPECT_EQ(hub.registry().event_stats(kA, {0, 3000}), 2u);
  EXPECT_EQ(hub.registry().event_stats(kA, {0, 1001}), 1u);
  EXPECT_EQ(hub.registry().event_stats(kB, {0, 3000}), 1u);
  EXPECT_EQ(hub.registry().event_stats(kC, {0, 3000}), 0u);
  auto [s, e] = KeyBound::prefix_range({kA.str(), "evt"});
  const auto events = hub.store().scan(s, e);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(json::parse(events[0].value)["record_id"], a1);
  EXPECT_EQ(json::parse(events[0].value)["requester"], kMe.str());
}

TEST(QueryEngineTest, CountsAddUp) {
  Hub hub(small_config());
  hub.registry().create_record(kA, text("a"), 10);
  auto counts = hub.engine().lookup_count_probe(fp({{kA, -50}, {kB, -50}, {kC, -50}}));
  EXPECT_EQ(counts.bloom_skips + counts.store_lookups, 3u);
  EXPECT_GE(counts.store_lookups, 1u);
  hub.engine().set_bloom_enabled(false);
  counts = hub.engine().lookup_count_probe(fp({{kA, -50}, {kB, -50}, {kC, -50}}));
  EXPECT_EQ(counts.store_lookups, 3u);
  EXPECT_EQ(counts.bloom_skips, 0u);
}

TEST(QueryEngineTest, JsonShape) {
  Hub hub(small_config());
  const auto id = hub.registry().create_record(kA, text("a"), 10);
  const auto rid = hub.rules().create_rule(rule(kA, -100, 0, "r"));
  auto j = result_to_json(hub.engine().query(kMe, fp({{kA, -59}}), -59.0, 0));
  EXPECT_EQ(j, json::parse(R"([
    {"node":"20:00:00:00:00:01","rssi":-59.0,"source":"record","distance_m":1.0,
     "chunks":[{"type":"text","data":"a"}],"record_ids":[")" + id + R"("]},
    {"node":"20:00:00:00:00:01","rssi":-59.0,"source":"rule","distance_m":1.0,
     "chunks":[{"type":"text","data":"r"}],"ruleID":")" + rid + R"("}])"));
}

TEST(QueryEngineProperty, FilterInvisibleAndMatchesOracle) {
  std::mt19937_64 rng(31);
  for (int scenario = 0; scenario < 100; ++scenario) {
    Config cfg;
    cfg.bloom = {64, 2};  // tiny on purpose: plenty of false positives
    cfg.id_seed = rng();
    Hub hub(cfg);
    std::vector<MacAddress> nodes;
    for (int i = 0; i < 60; ++i) nodes.push_back(oracle::random_mac(rng));
    std::int64_t now = 1;
    for (int i = 0; i < 20; ++i) {
      const auto id = hub.registry().create_record(nodes[rng() % 30], text(std::to_string(i)), ++now);
      if (rng() % 4 == 0) hub.registry().set_status(id, false, ++now);
    }
    for (int i = 0; i < 15; ++i) {
      const double a = -100.0 + static_cast<double>(rng() % 70);
      const double b = -100.0 + static_cast<double>(rng() % 70);
      auto r = rule(nodes[rng() % nodes.size()], std::min(a, b), std::max(a, b), "rule");
      r.enabled = rng() % 4 != 0;
      hub.rules().create_rule(r);
    }
    std::vector<Observation> raw;
    for (int i = 0; i < 40; ++i) {
      raw.push_back({nodes[rng() % nodes.size()], -100.0 + static_cast<double>(rng() % 70)});
    }
    const std::optional<double> tx = rng() % 2 ? std::optional(-59.0) : std::nullopt;
    hub.engine().set_bloom_enabled(true);
    const auto on = hub.engine().query(kMe, fp(raw), tx, 0);
    hub.engine().set_bloom_enabled(false);
    const auto off = hub.engine().query(kMe, fp(raw), tx, 0);
    ASSERT_EQ(on, off);
    ASSERT_EQ(result_to_json(on).dump(),
              oracle::query(hub.registry().all_records(), hub.rules().list_rules(), raw, tx).dump());
  }
}
