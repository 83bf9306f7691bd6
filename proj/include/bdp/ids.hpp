#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <string>

namespace bdp {

// 128-bit random identifiers rendered as 32 lower-case hex characters.
class IdGenerator {
 public:
  explicit IdGenerator(std::optional<std::uint64_t> seed = std::nullopt)
      : rng_(seed ? *seed : entropy()) {}

  std::string next() {
    std::lock_guard lock(mutex_);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(32, '0');
    for (int half = 0; half < 2; ++half) {
      std::uint64_t v = rng_();
      for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(half * 16 + i)] = hex[v & 0xf];
        v >>= 4;
      }
    }
    return out;
  }

  static bool looks_like_id(std::string_view s) noexcept {
    if (s.size() != 32) return false;
    for (const char c : s) {
      if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
  }

 private:
  static std::uint64_t entropy() {
    std::random_device rd;
    return (std::uint64_t{rd()} << 32) ^ rd();
  }

  std::mutex mutex_;
  std::mt19937_64 rng_;
};

}  // namespace bdp
