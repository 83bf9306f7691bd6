// bdp: command line front end for the proximity data hub.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "bdp/bench.hpp"
#include "bdp/bloom.hpp"
#include "bdp/config.hpp"
#include "bdp/hub.hpp"
#include "bdp/service.hpp"

namespace {

using bdp::json;

constexpr const char* kDefaultStore = "bdp.store";

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bdp::NotFoundError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw bdp::ValidationError("malformed_json", path + ": " + e.what());
  }
}

bdp::sim::Point parse_point(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw bdp::ValidationError("invalid_position", "expected X,Y but got '" + text + "'");
  }
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw bdp::ValidationError("invalid_position", "expected X,Y but got '" + text + "'");
  }
}

std::vector<bdp::DataChunk> chunks_from_args(const std::vector<std::string>& types,
                                             const std::vector<std::string>& data) {
  if (types.size() != data.size()) {
    throw bdp::ValidationError("invalid_request", "every --type needs a matching --data");
  }
  std::vector<bdp::DataChunk> chunks;
  for (std::size_t i = 0; i < types.size(); ++i) chunks.push_back(bdp::make_chunk(types[i], data[i]));
  bdp::validate(chunks);
  return chunks;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximity data hub: typed content bound to wireless node identifiers"};
  app.require_subcommand(1);

  std::string config_path;
  std::string store_path;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--store", store_path, "store log path (overrides the config)");

  auto make_config = [&] {
    bdp::Config cfg = config_path.empty() ? bdp::Config{} : bdp::load_config(config_path);
    if (!store_path.empty()) cfg.storage = store_path;
    if (cfg.storage.empty() && config_path.empty()) cfg.storage = kDefaultStore;
    return cfg;
  };

  // serve
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  std::string host = "0.0.0.0";
  int port = 8080;
  serve->add_option("--host", host, "listen address");
  serve->add_option("--port", port, "listen port");

  // post
  auto* post = app.add_subcommand("post", "attach data chunks to a node");
  std::string post_mac;
  std::vector<std::string> post_types;
  std::vector<std::string> post_data;
  post->add_option("--mac", post_mac, "node MAC address")->required();
  post->add_option("--type", post_types, "chunk type (repeatable)")->required();
  post->add_option("--data", post_data, "chunk payload (repeatable)")->required();

  // records / status
  auto* records = app.add_subcommand("records", "list active records of a node");
  std::string records_mac;
  records->add_option("--mac", records_mac, "node MAC address")->required();

  auto* status = app.add_subcommand("status", "switch a record on or off");
  std::string status_id;
  bool status_off = false;
  status->add_option("id", status_id, "record ID")->required();
  status->add_flag("--off,!--on", status_off, "deactivate (default: activate)");

  // query
  auto* query = app.add_subcommand("query", "run a proximity query");
  std::string fp_file;
  std::string sim_at;
  std::string requester = "00:00:00:00:00:00";
  std::optional<double> tx_power;
  auto* fp_opt = query->add_option("--fingerprint", fp_file, "fingerprint JSON file");
  auto* sim_opt = query->add_option("--sim-at", sim_at, "scan the simulated world at X,Y");
  fp_opt->excludes(sim_opt);
  query->add_option("--requester", requester, "requesting device MAC");
  query->add_option("--tx-power", tx_power, "calibrated power at 1 m (dBm) for distances");

  // rules
  auto* rules = app.add_subcommand("rules", "manage proximity rules");
  rules->require_subcommand(1);
  auto* rules_add = rules->add_subcommand("add", "create a rule");
  std::string rule_node;
  double rule_min = 0;
  double rule_max = 0;
  std::vector<std::string> rule_types;
  std::vector<std::string> rule_data;
  std::string rule_label;
  bool rule_disabled = false;
  rules_add->add_option("--node", rule_node, "node MAC address")->required();
  rules_add->add_option("--min", rule_min, "lowest RSSI (dBm, inclusive)")->required();
  rules_add->add_option("--max", rule_max, "highest RSSI (dBm, inclusive)")->required();
  rules_add->add_option("--type", rule_types, "content chunk type (repeatable)")->required();
  rules_add->add_option("--data", rule_data, "content chunk payload (repeatable)")->required();
  rules_add->add_option("--label", rule_label, "display label");
  rules_add->add_flag("--disabled", rule_disabled, "create switched off");
  auto* rules_list = rules->add_subcommand("list", "list rules in creation order");
  auto* rules_toggle = rules->add_subcommand("toggle", "enable or disable a rule");
  std::string toggle_id;
  std::optional<bool> toggle_on;
  rules_toggle->add_option("id", toggle_id, "rule ID")->required();
  rules_toggle->add_flag("--on{true},--off{false}", toggle_on, "target state (default: flip)");

  // bloom-tune
  auto* tune = app.add_subcommand("bloom-tune", "size a Bloom filter");
  std::uint64_t tune_n = 10000;
  double tune_fp = 0.01;
  tune->add_option("--n", tune_n, "expected number of nodes with data")->required();
  tune->add_option("--target-fp", tune_fp, "acceptable false positive rate")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "measure lookup throughput");
  bdp::bench::Options bench_opt;
  bench->add_option("--records", bench_opt.records, "records to load");
  bench->add_option("--queries", bench_opt.queries, "lookups per pass");
  bench->add_option("--unregistered", bench_opt.unregistered_share,
                    "share of lookups for nodes without data");
  bench->add_option("--seed", bench_opt.seed, "generator seed");

  // sim
  auto* sim = app.add_subcommand("sim", "simulated radio world");
  sim->require_subcommand(1);
  auto* sim_load = sim->add_subcommand("load", "load a world description");
  std::string world_file;
  sim_load->add_option("file", world_file, "world JSON file")->required();
  auto* sim_scan = sim->add_subcommand("scan", "print the fingerprint seen at a point");
  std::string scan_at;
  sim_scan->add_option("--at", scan_at, "observer position X,Y")->required();
  auto* sim_move = sim->add_subcommand("move", "move a node");
  std::string move_mac;
  std::string move_to;
  sim_move->add_option("mac", move_mac, "node MAC address")->required();
  sim_move->add_option("--to", move_to, "new position X,Y")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*tune) {
      const auto s = bdp::optimal_sizing(tune_n, tune_fp);
      const auto n = static_cast<std::int64_t>(tune_n);
      print(json{{"m", s.m},
                 {"k", s.k},
                 {"bits_per_key", static_cast<double>(s.m) / static_cast<double>(tune_n)},
                 {"predicted_fp_exact", bdp::predicted_fp_exact(static_cast<std::int64_t>(s.m), n, s.k)},
                 {"predicted_fp_approx", bdp::predicted_fp_approx(static_cast<std::int64_t>(s.m), n, s.k)}});
      return 0;
    }
    if (*bench) {
      print(bdp::bench::report_to_json(bdp::bench::run(bench_opt)));
      return 0;
    }

    bdp::Hub hub(make_config());
    const auto now = bdp::wall_clock_ms();

    if (*serve) {
      bdp::Api api(hub);
      httplib::Server server;
      bdp::bind(server, api);
      std::cerr << "listening on " << host << ':' << port << '\n';
      if (!server.listen(host, port)) {
        std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
        return 1;
      }
      return 0;
    }
    if (*post) {
      const auto id = hub.registry().create_record(bdp::MacAddress::parse(post_mac),
                                                   chunks_from_args(post_types, post_data), now);
      print(json{{"recordID", id}});
    } else if (*records) {
      json arr = json::array();
      for (const auto& r : hub.registry().get_active_by_mac(bdp::MacAddress::parse(records_mac))) {
        arr.push_back(bdp::record_to_json(r));
      }
      print(arr);
    } else if (*status) {
      hub.registry().set_status(status_id, !status_off, now);
      print(bdp::record_to_json(*hub.registry().get_record(status_id)));
    } else if (*query) {
      bdp::Fingerprint fp;
      if (!fp_file.empty()) {
        fp = bdp::fingerprint_from_json(read_json_file(fp_file), now);
      } else if (!sim_at.empty()) {
        fp = hub.scan(parse_point(sim_at), now);
      } else {
        throw bdp::ValidationError("invalid_request", "query needs --fingerprint or --sim-at");
      }
      const auto tx = tx_power ? tx_power : hub.config().default_tx_power_1m;
      print(bdp::result_to_json(
          hub.engine().query(bdp::MacAddress::parse(requester), fp, tx, now)));
    } else if (*rules_add) {
      bdp::ProximityRule rule;
      rule.node = bdp::MacAddress::parse(rule_node);
      rule.rssi_min = rule_min;
      rule.rssi_max = rule_max;
      rule.content = chunks_from_args(rule_types, rule_data);
      rule.enabled = !rule_disabled;
      if (!rule_label.empty()) rule.label = rule_label;
      print(json{{"ruleID", hub.rules().create_rule(std::move(rule))}});
    } else if (*rules_list) {
      json arr = json::array();
      for (const auto& r : hub.rules().list_rules()) arr.push_back(bdp::rule_to_json(r));
      print(arr);
    } else if (*rules_toggle) {
      bool target = true;
      if (toggle_on) {
        target = *toggle_on;
      } else {
        bool found = false;
        for (const auto& r : hub.rules().list_rules()) {
          if (r.rule_id == toggle_id) {
            target = !r.enabled;
            found = true;
          }
        }
        if (!found) throw bdp::NotFoundError("unknown rule '" + toggle_id + "'");
      }
      bdp::RuleUpdate u;
      u.enabled = target;
      print(bdp::rule_to_json(hub.rules().update_rule(toggle_id, u)));
    } else if (*sim_load) {
      print(json{{"nodes", hub.load_world(read_json_file(world_file))}});
    } else if (*sim_scan) {
      print(bdp::fingerprint_to_json(hub.scan(parse_point(scan_at), now)));
    } else if (*sim_move) {
      const auto to = parse_point(move_to);
      hub.move_node(bdp::MacAddress::parse(move_mac), to);
      print(json{{"mac", bdp::MacAddress::parse(move_mac).str()}, {"x", to.x}, {"y", to.y}});
    }
  } catch (const bdp::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
