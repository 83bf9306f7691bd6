// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed in the constants below.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdp/bench.hpp"
#include "bdp/bloom.hpp"
#include "bdp/hub.hpp"
#include "bdp/ranging.hpp"
#include "oracles.hpp"

#ifndef BDP_CLI_PATH
#error "BDP_CLI_PATH must point at the bdp executable"
#endif
#ifndef BDP_SAMPLES_DIR
#error "BDP_SAMPLES_DIR must point at samples/"
#endif
#ifndef BDP_GOLDEN_DIR
#error "BDP_GOLDEN_DIR must point at tests/golden/"
#endif

namespace {

using bdp::json;
using Clock = std::chrono::steady_clock;

constexpr double kRangingRelTol = 1e-9;
constexpr double kRangingBudgetSec = 1.0;
constexpr double kGridRelTol = 0.01;
constexpr double kEmpiricalCenter = 0.0196;
constexpr double kEmpiricalRelTol = 0.25;
constexpr double kBloomBudgetSec = 30.0;
constexpr double kCacheSlack = 0.02;
constexpr double kGoldenRelTol = 1e-9;
constexpr double kMinDirectLookups = 50000.0;
constexpr double kMinFilterSpeedup = 3.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const std::chrono::duration<double> dt = Clock::now() - t0;
  if (!o.pass) ++failures;
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.2fs", dt.count());
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " [" << secs << "] " << o.detail << std::endl;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- ranging --------------------------------------------------------------

Outcome ranging() {
  const auto t0 = Clock::now();
  const double ten = bdp::ranging::estimate_distance(-59, -79).meters;
  const double one = bdp::ranging::estimate_distance(-59, -59).meters;
  bool ok = rel_close(ten, 10.0, kRangingRelTol) && rel_close(one, 1.0, kRangingRelTol);

  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> tx(-90.0, -30.0);
  std::uniform_real_distribution<double> log_r(-2.0, 3.0);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double t = tx(rng);
    const double r = std::pow(10.0, log_r(rng));
    const double back = bdp::ranging::estimate_distance(t, bdp::ranging::rssi_at_distance(t, r)).meters;
    worst = std::max(worst, std::abs(back - r) / r);
  }
  const double elapsed = seconds_since(t0);
  ok = ok && worst <= kRangingRelTol && elapsed < kRangingBudgetSec;
  return {ok, fmt("d(-59,-79)=%.12g d(-59,-59)=%.12g roundtrip_max_rel=%.2e (tol %.0e) time=%.3fs (<%.0fs)",
                  ten, one, worst, kRangingRelTol, elapsed, kRangingBudgetSec)};
}

// --- bloom ----------------------------------------------------------------

Outcome bloom() {
  const auto t0 = Clock::now();
  double worst = 0;
  std::size_t points = 0;
  for (std::int64_t m : {1000, 4096, 10000, 100000}) {
    for (std::int64_t k = 1; k <= 10; ++k) {
      for (std::int64_t n = 1; k * n <= 10 * m; ++n) {
        const double e = bdp::predicted_fp_exact(m, n, k);
        const double a = bdp::predicted_fp_approx(m, n, k);
        worst = std::max(worst, std::abs(a - e) / e);
        ++points;
      }
    }
  }

  std::mt19937_64 rng(202);
  bdp::BloomFilter f(4096, 6);
  std::set<std::uint64_t> inserted;
  while (inserted.size() < 500) inserted.insert(rng());
  for (auto v : inserted) f.insert(std::to_string(v));
  std::size_t fp = 0;
  std::size_t probes = 0;
  while (probes < 100000) {
    const auto v = rng();
    if (inserted.contains(v)) continue;
    ++probes;
    fp += f.maybe_contains(std::to_string(v));
  }
  const double rate = static_cast<double>(fp) / static_cast<double>(probes);

  std::size_t false_negatives = 0;
  std::size_t trials = 0;
  while (trials < 1000000) {
    const std::uint64_t m = 256 + rng() % 20000;
    const auto k = static_cast<std::uint32_t>(1 + rng() % 10);
    bdp::BloomFilter g(m, k);
    std::vector<std::string> keys(1000);
    for (auto& key : keys) key = std::to_string(rng());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      g.insert(keys[i]);
      false_negatives += !g.maybe_contains(keys[i]);
      false_negatives += !g.maybe_contains(keys[rng() % (i + 1)]);
    }
    trials += keys.size();
  }
  const double elapsed = seconds_since(t0);
  const bool ok = worst < kGridRelTol && std::abs(rate - kEmpiricalCenter) <= kEmpiricalRelTol * kEmpiricalCenter &&
                  false_negatives == 0 && elapsed < kBloomBudgetSec;
  return {ok, fmt("grid_points=%zu max_rel_diff=%.3e (<%.2f) empirical_fp=%.5f (%.4f +/-%.0f%%) "
                  "false_negatives=%zu/%zu time=%.2fs (<%.0fs)",
                  points, worst, kGridRelTol, rate, kEmpiricalCenter, kEmpiricalRelTol * 100,
                  false_negatives, trials, elapsed, kBloomBudgetSec)};
}

// --- store ordering ------------------------------------------------------

std::string random_element(std::mt19937_64& rng) {
  static constexpr std::array<char, 6> alphabet{'\x00', 'a', 'b', '\x7f', '\x80', '\xff'};
  std::string s(rng() % 3, '\0');
  for (auto& c : s) c = alphabet[rng() % alphabet.size()];
  return s;
}

Outcome store_ordering() {
  std::mt19937_64 rng(303);
  std::size_t mismatched_sets = 0;
  std::size_t head_mismatches = 0;
  std::size_t cells_checked = 0;
  for (int set = 0; set < 10000; ++set) {
    bdp::KvStore store;
    std::vector<bdp::StoreEntry> puts;
    const int count = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < count; ++i) {
      bdp::StoreEntry e{{"r" + random_element(rng), random_element(rng), random_element(rng),
                         random_element(rng), static_cast<std::int64_t>(rng() % 7) - 3},
                        std::to_string(rng() % 1000)};
      puts.push_back(e);
      store.put(e);
    }
    const auto expected = oracle::sorted_store(puts);
    const auto got = store.scan_all();
    if (got != expected) ++mismatched_sets;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const auto& k = expected[i].key;
      const bool head = i == 0 || std::tie(expected[i - 1].key.row, expected[i - 1].key.family,
                                           expected[i - 1].key.qualifier, expected[i - 1].key.visibility) !=
                                      std::tie(k.row, k.family, k.qualifier, k.visibility);
      if (!head) continue;
      ++cells_checked;
      const auto latest = store.get_latest(k.row, k.family, k.qualifier, k.visibility);
      if (!latest || !(*latest == expected[i])) ++head_mismatches;
    }
  }
  return {mismatched_sets == 0 && head_mismatches == 0,
          fmt("sets=10000 order_mismatches=%zu cells=%zu latest_mismatches=%zu", mismatched_sets,
              cells_checked, head_mismatches)};
}

// --- pipeline --------------------------------------------------------------

Outcome pipeline() {
  std::mt19937_64 rng(404);
  const auto requester = bdp::MacAddress::parse("c0:ff:ee:00:00:01");
  std::size_t bypass_mismatch = 0;
  std::size_t oracle_mismatch = 0;
  std::size_t entries = 0;
  std::size_t false_positive_lookups = 0;
  for (int scenario = 0; scenario < 1000; ++scenario) {
    bdp::Config cfg;
    cfg.bloom = {16 + rng() % 512, static_cast<std::uint32_t>(1 + rng() % 4)};
    cfg.id_seed = rng();
    bdp::Hub hub(cfg);

    const std::size_t node_count = 1 + rng() % 200;
    std::vector<bdp::MacAddress> nodes;
    std::set<bdp::MacAddress> unique;
    while (nodes.size() < node_count) {
      auto m = oracle::random_mac(rng);
      if (unique.insert(m).second) nodes.push_back(m);
    }
    const std::size_t registered = std::min<std::size_t>(node_count, rng() % 51);

    std::vector<bdp::BdpRecord> model;
    std::int64_t now = 1;
    for (std::size_t i = 0; i < registered; ++i) {
      const int per_node = 1 + static_cast<int>(rng() % 3);
      for (int r = 0; r < per_node; ++r) {
        bdp::BdpRecord rec;
        rec.mac = nodes[i];
        rec.chunks = {{bdp::ChunkType::text, "n" + std::to_string(i) + "r" + std::to_string(r)}};
        if (rng() % 3 == 0) rec.chunks.push_back({bdp::ChunkType::url, "https://example.org/" + std::to_string(r)});
        rec.timestamp_created = rec.timestamp_modified = ++now;
        rec.record_id = hub.registry().create_record(rec.mac, rec.chunks, now);
        if (rng() % 5 == 0) {
          rec.active = false;
          rec.timestamp_modified = ++now;
          hub.registry().set_status(rec.record_id, false, now);
        }
        model.push_back(rec);
      }
    }

    std::vector<bdp::ProximityRule> rules;
    const std::size_t rule_count = rng() % 101;
    for (std::size_t i = 0; i < rule_count; ++i) {
      bdp::ProximityRule r;
      r.node = nodes[rng() % nodes.size()];
      const double a = -100.0 + static_cast<double>(rng() % 71);
      const double b = -100.0 + static_cast<double>(rng() % 71);
      r.rssi_min = std::min(a, b);
      r.rssi_max = std::max(a, b);
      r.content = {{bdp::ChunkType::text, "rule " + std::to_string(i)}};
      r.enabled = rng() % 4 != 0;
      r.rule_id = hub.rules().create_rule(r);
      rules.push_back(r);
    }

    std::vector<bdp::Observation> raw;
    const std::size_t heard = rng() % (nodes.size() + 20);
    for (std::size_t i = 0; i < heard; ++i) {
      raw.push_back({nodes[rng() % nodes.size()], -100.0 + static_cast<double>(rng() % 71)});
    }
    const std::optional<double> tx = rng() % 2 ? std::optional(-59.0) : std::nullopt;
    const auto fp = bdp::Fingerprint::from_raw(raw);

    hub.engine().set_bloom_enabled(true);
    bdp::LookupCounts counts;
    const auto on = bdp::result_to_json(hub.engine().query(requester, fp, tx, 0, &counts)).dump();
    hub.engine().set_bloom_enabled(false);
    const auto off = bdp::result_to_json(hub.engine().query(requester, fp, tx, 0)).dump();
    const auto ref = oracle::query(model, rules, raw, tx).dump();
    if (on != off) ++bypass_mismatch;
    if (on != ref) ++oracle_mismatch;
    entries += json::parse(on).size();

    std::size_t registered_heard = 0;
    for (const auto& o : fp.observations) {
      for (std::size_t i = 0; i < registered; ++i) {
        if (nodes[i] == o.node) {
          ++registered_heard;
          break;
        }
      }
    }
    false_positive_lookups += counts.store_lookups - registered_heard;
  }
  return {bypass_mismatch == 0 && oracle_mismatch == 0,
          fmt("scenarios=1000 entries=%zu cache_vs_bypass_mismatches=%zu oracle_mismatches=%zu "
              "false_positive_lookups=%zu",
              entries, bypass_mismatch, oracle_mismatch, false_positive_lookups)};
}

// --- cache effectiveness --------------------------------------------------

Outcome cache_effectiveness() {
  std::mt19937_64 rng(505);
  bdp::Config cfg;
  cfg.bloom = bdp::optimal_sizing(1000, 0.01);
  cfg.id_seed = 5;
  bdp::Hub hub(cfg);
  std::vector<bdp::MacAddress> registered;
  std::set<bdp::MacAddress> taken;
  for (int i = 0; i < 1000; ++i) {
    auto m = oracle::random_mac(rng);
    if (!taken.insert(m).second) continue;
    registered.push_back(m);
    hub.registry().create_record(m, {{bdp::ChunkType::text, "x"}}, i + 1);
  }
  const auto filter = hub.registry().bloom();
  const double p = bdp::predicted_fp_approx(static_cast<std::int64_t>(filter->bit_count()),
                                            static_cast<std::int64_t>(filter->inserted_count()),
                                            filter->hash_count());
  const std::size_t size = 100;
  double lookups = 0;
  for (int scan = 0; scan < 1000; ++scan) {
    std::vector<bdp::Observation> obs;
    std::set<bdp::MacAddress> seen;
    for (std::size_t i = 0; i < size / 10; ++i) {
      auto m = registered[rng() % registered.size()];
      if (seen.insert(m).second) obs.push_back({m, -60});
    }
    while (obs.size() < size) {
      auto m = oracle::random_mac(rng);
      if (taken.contains(m) || !seen.insert(m).second) continue;
      obs.push_back({m, -70});
    }
    lookups += static_cast<double>(hub.engine().lookup_count_probe(bdp::Fingerprint::from_raw(obs)).store_lookups);
  }
  const double avg = lookups / 1000.0;
  const double bound = (0.10 + p + kCacheSlack) * static_cast<double>(size);
  return {avg <= bound, fmt("fingerprint=%zu unregistered_share=0.90 avg_store_lookups=%.3f "
                            "bound=%.3f (0.10 + p_approx %.5f + %.2f)",
                            size, avg, bound, p, kCacheSlack)};
}

// --- rules -----------------------------------------------------------------

Outcome rule_engine() {
  std::mt19937_64 rng(606);
  std::size_t mismatches = 0;
  std::size_t boundary_obs = 0;
  std::size_t fired = 0;
  std::vector<bdp::MacAddress> nodes;
  for (int i = 0; i < 16; ++i) nodes.push_back(oracle::random_mac(rng));
  for (int pair = 0; pair < 10000; ++pair) {
    std::vector<bdp::ProximityRule> rules;
    const std::size_t nr = rng() % 20;
    for (std::size_t i = 0; i < nr; ++i) {
      bdp::ProximityRule r;
      r.rule_id = std::to_string(i);
      r.node = nodes[rng() % nodes.size()];
      const double a = -100.0 + static_cast<double>(rng() % 7000) / 100.0;
      const double b = -100.0 + static_cast<double>(rng() % 7000) / 100.0;
      r.rssi_min = std::min(a, b);
      r.rssi_max = std::max(a, b);
      r.content = {{bdp::ChunkType::text, "c"}};
      r.enabled = rng() % 5 != 0;
      rules.push_back(r);
    }
    std::vector<bdp::Observation> raw;
    const std::size_t no = rng() % 12;
    for (std::size_t i = 0; i < no; ++i) {
      bdp::Observation o{nodes[rng() % nodes.size()], -100.0 + static_cast<double>(rng() % 7000) / 100.0};
      if (!rules.empty() && rng() % 2 == 0) {
        const auto& r = rules[rng() % rules.size()];
        o.node = r.node;
        switch (rng() % 4) {
          case 0: o.rssi = r.rssi_min; break;
          case 1: o.rssi = r.rssi_max; break;
          case 2: o.rssi = std::nextafter(r.rssi_min, -INFINITY); break;
          default: o.rssi = std::nextafter(r.rssi_max, INFINITY); break;
        }
        ++boundary_obs;
      }
      raw.push_back(o);
    }
    std::vector<std::pair<std::string, std::size_t>> got;
    for (const auto& a : bdp::evaluate(rules, bdp::Fingerprint::from_raw(raw))) {
      got.emplace_back(a.rule_id, a.rule_index);
    }
    if (got != oracle::evaluate_rules(rules, raw)) ++mismatches;
    fired += got.size();
  }
  return {mismatches == 0, fmt("pairs=10000 boundary_observations=%zu activations=%zu mismatches=%zu",
                               boundary_obs, fired, mismatches)};
}

// --- golden CLI replay ------------------------------------------------------

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::pair<int, std::string> run_cli(const std::vector<std::string>& args) {
  std::string cmd = shell_quote(BDP_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("cannot spawn " + cmd);
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {status, out};
}

json normalize_ids(const json& j) {
  static const std::regex id("^[0-9a-f]{32}$");
  if (j.is_string() && std::regex_match(j.get<std::string>(), id)) return "<id>";
  if (j.is_array() || j.is_object()) {
    json out = j;
    for (auto it = out.begin(); it != out.end(); ++it) *it = normalize_ids(*it);
    return out;
  }
  return j;
}

bool json_close(const json& a, const json& b, std::string& where, const std::string& path = "$") {
  if (a.is_number() && b.is_number()) {
    if (rel_close(a.get<double>(), b.get<double>(), kGoldenRelTol)) return true;
  } else if (a.type() == b.type() && (a.is_array() || a.is_object()) && a.size() == b.size()) {
    if (a.is_array()) {
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!json_close(a[i], b[i], where, path + "[" + std::to_string(i) + "]")) return false;
      }
      return true;
    }
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key()) || !json_close(it.value(), b[it.key()], where, path + "." + it.key())) {
        return false;
      }
    }
    return true;
  } else if (a == b) {
    return true;
  }
  where = path;
  return false;
}

Outcome golden_replay() {
  namespace fs = std::filesystem;
  const fs::path golden = BDP_GOLDEN_DIR;
  const std::string samples = BDP_SAMPLES_DIR;
  const fs::path store = fs::temp_directory_path() / ("bdp_golden_" + std::to_string(std::random_device{}()) + ".store");
  std::ifstream in(golden / "scenario.json");
  const json steps = json::parse(in);

  std::size_t compared = 0;
  std::string problem;
  for (const auto& step : steps) {
    std::vector<std::string> args{"--config", samples + "/config.json", "--store", store.string()};
    for (const auto& a : step.at("args")) {
      std::string s = a.get<std::string>();
      if (auto pos = s.find("@SAMPLES@"); pos != std::string::npos) s.replace(pos, 9, samples);
      args.push_back(s);
    }
    const auto [status, out] = run_cli(args);
    if (status != 0) {
      problem = "command failed: " + out;
      break;
    }
    if (!step.contains("golden")) continue;
    std::ifstream gf(golden / step["golden"].get<std::string>());
    const json expected = json::parse(gf);
    const json got = normalize_ids(json::parse(out));
    std::string where;
    if (!json_close(got, expected, where)) {
      problem = step["golden"].get<std::string>() + " differs at " + where;
      break;
    }
    ++compared;
  }
  fs::remove(store);
  if (!problem.empty()) return {false, problem};
  return {compared == 3, fmt("steps=%zu golden_files=%zu rel_tol=%.0e", steps.size(), compared, kGoldenRelTol)};
}

// --- performance -------------------------------------------------------------

Outcome performance() {
  bdp::bench::Options opt;
  opt.records = 100000;
  opt.queries = 200000;
  opt.unregistered_share = 0.9;
  const auto r = bdp::bench::run(opt);
  const bool ok = r.direct_lookups_per_sec >= kMinDirectLookups && r.speedup() >= kMinFilterSpeedup;
  return {ok, fmt("records=%zu direct=%.0f/s (>=%.0f) filtered=%.0f/s unfiltered=%.0f/s speedup=%.2fx (>=%.1f)",
                  r.records, r.direct_lookups_per_sec, kMinDirectLookups, r.filtered_lookups_per_sec,
                  r.unfiltered_lookups_per_sec, r.speedup(), kMinFilterSpeedup)};
}

}  // namespace

int main() {
  report("ranging", ranging);
  report("bloom-analysis", bloom);
  report("store-ordering", store_ordering);
  report("pipeline-oracle-equivalence", pipeline);
  report("cache-effectiveness", cache_effectiveness);
  report("rule-engine", rule_engine);
  report("golden-cli-replay", golden_replay);
  report("performance", performance);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
