#pragma once

// One data hub instance: store, registry, rule book, query engine and an
// optional simulated world, all sharing one store log.

#include <memory>
#include <mutex>
#include <optional>

#include <json.hpp>

#include "bdp/config.hpp"
#include "bdp/kvstore.hpp"
#include "bdp/query.hpp"
#include "bdp/registry.hpp"
#include "bdp/rules.hpp"
#include "bdp/simworld.hpp"

namespace bdp {

class Hub {
 public:
  explicit Hub(Config config)
      : config_(std::move(config)),
        store_(config_.storage.empty() ? std::make_unique<KvStore>()
                                       : std::make_unique<KvStore>(config_.storage)),
        registry_(*store_, config_.bloom, config_.id_seed),
        rules_(store_.get(), config_.id_seed ? std::optional(*config_.id_seed + 1) : std::nullopt),
        engine_(registry_, rules_) {
    load_world();
  }

  Hub(const Hub&) = delete;
  Hub& operator=(const Hub&) = delete;

  const Config& config() const noexcept { return config_; }
  KvStore& store() noexcept { return *store_; }
  Registry& registry() noexcept { return registry_; }
  RuleBook& rules() noexcept { return rules_; }
  QueryEngine& engine() noexcept { return engine_; }

  // Replaces the world and persists its description. Returns the node count.
  std::size_t load_world(const json& description) {
    auto w = std::make_unique<sim::SimWorld>(sim::world_from_json(description, config_.sim));
    std::lock_guard lock(world_mutex_);
    world_ = std::move(w);
    persist_world();
    return world_->nodes().size();
  }

  bool has_world() const {
    std::lock_guard lock(world_mutex_);
    return world_ != nullptr;
  }

  json world_json() const {
    std::lock_guard lock(world_mutex_);
    require_world();
    return sim::world_to_json(*world_);
  }

  Fingerprint scan(sim::Point observer, std::int64_t time) {
    std::lock_guard lock(world_mutex_);
    require_world();
    return world_->scan(observer, time);
  }

  void move_node(const MacAddress& mac, sim::Point to) {
    std::lock_guard lock(world_mutex_);
    require_world();
    world_->move_node(mac, to);
    persist_world();
  }

 private:
  static constexpr std::string_view kWorldRow = "sim";
  static constexpr std::string_view kWorldFamily = "world";

  void require_world() const {
    if (!world_) throw ConflictError("no simulated world is loaded");
  }

  void persist_world() {
    store_->put(StoreEntry{{std::string(kWorldRow), std::string(kWorldFamily), "current", "",
                            ++world_revision_},
                           sim::world_to_json(*world_).dump()});
  }

  void load_world() {
    auto latest = store_->get_latest(kWorldRow, kWorldFamily, "current");
    if (!latest) return;
    world_revision_ = latest->key.timestamp;
    world_ = std::make_unique<sim::SimWorld>(
        sim::world_from_json(json::parse(latest->value), config_.sim));
  }

  Config config_;
  std::unique_ptr<KvStore> store_;
  Registry registry_;
  RuleBook rules_;
  QueryEngine engine_;

  mutable std::mutex world_mutex_;
  std::unique_ptr<sim::SimWorld> world_;
  std::int64_t world_revision_ = 0;
};

}  // namespace bdp
