#pragma once

// Bloom filter over byte-string keys, plus the closed-form false positive
// analysis used to size it.
//
// The k probe positions come from one 128-bit MurmurHash3 split into two
// 64-bit halves (h_a, h_b) and the double-hashing rule
//   h_i(key) = (h_a + i * h_b) mod m,   i = 0 .. k-1
//
// Bits live in atomic words so queries may run concurrently with inserts. A
// key reports present as soon as its insert() returns.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string_view>

#include "bdp/error.hpp"

namespace bdp {

namespace detail {

inline std::uint64_t rotl64(std::uint64_t x, int r) noexcept { return (x << r) | (x >> (64 - r)); }

inline std::uint64_t fmix64(std::uint64_t k) noexcept {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

struct Hash128 {
  std::uint64_t low;
  std::uint64_t high;
};

// MurmurHash3_x64_128 (Austin Appleby, public domain).
inline Hash128 murmur3_128(std::string_view key, std::uint64_t seed = 0) noexcept {
  const auto* data = reinterpret_cast<const unsigned char*>(key.data());
  const std::size_t len = key.size();
  const std::size_t nblocks = len / 16;
  std::uint64_t h1 = seed;
  std::uint64_t h2 = seed;
  constexpr std::uint64_t c1 = 0x87c37b91114253d5ULL;
  constexpr std::uint64_t c2 = 0x4cf5ad432745937fULL;

  for (std::size_t i = 0; i < nblocks; ++i) {
    std::uint64_t k1;
    std::uint64_t k2;
    std::memcpy(&k1, data + i * 16, 8);
    std::memcpy(&k2, data + i * 16 + 8, 8);

    k1 *= c1; k1 = rotl64(k1, 31); k1 *= c2; h1 ^= k1;
    h1 = rotl64(h1, 27); h1 += h2; h1 = h1 * 5 + 0x52dce729;
    k2 *= c2; k2 = rotl64(k2, 33); k2 *= c1; h2 ^= k2;
    h2 = rotl64(h2, 31); h2 += h1; h2 = h2 * 5 + 0x38495ab5;
  }

  const unsigned char* tail = data + nblocks * 16;
  std::uint64_t k1 = 0;
  std::uint64_t k2 = 0;
  switch (len & 15) {
    case 15: k2 ^= std::uint64_t(tail[14]) << 48; [[fallthrough]];
    case 14: k2 ^= std::uint64_t(tail[13]) << 40; [[fallthrough]];
    case 13: k2 ^= std::uint64_t(tail[12]) << 32; [[fallthrough]];
    case 12: k2 ^= std::uint64_t(tail[11]) << 24; [[fallthrough]];
    case 11: k2 ^= std::uint64_t(tail[10]) << 16; [[fallthrough]];
    case 10: k2 ^= std::uint64_t(tail[9]) << 8; [[fallthrough]];
    case 9:
      k2 ^= std::uint64_t(tail[8]);
      k2 *= c2; k2 = rotl64(k2, 33); k2 *= c1; h2 ^= k2;
      [[fallthrough]];
    case 8: k1 ^= std::uint64_t(tail[7]) << 56; [[fallthrough]];
    case 7: k1 ^= std::uint64_t(tail[6]) << 48; [[fallthrough]];
    case 6: k1 ^= std::uint64_t(tail[5]) << 40; [[fallthrough]];
    case 5: k1 ^= std::uint64_t(tail[4]) << 32; [[fallthrough]];
    case 4: k1 ^= std::uint64_t(tail[3]) << 24; [[fallthrough]];
    case 3: k1 ^= std::uint64_t(tail[2]) << 16; [[fallthrough]];
    case 2: k1 ^= std::uint64_t(tail[1]) << 8; [[fallthrough]];
    case 1:
      k1 ^= std::uint64_t(tail[0]);
      k1 *= c1; k1 = rotl64(k1, 31); k1 *= c2; h1 ^= k1;
      break;
    default: break;
  }

  h1 ^= len;
  h2 ^= len;
  h1 += h2;
  h2 += h1;
  h1 = fmix64(h1);
  h2 = fmix64(h2);
  h1 += h2;
  h2 += h1;
  return {h1, h2};
}

inline void check_fp_domain(std::int64_t m, std::int64_t n, std::int64_t k) {
  if (m < 1) throw DomainError("bloom filter bit count m must be >= 1");
  if (k < 1) throw DomainError("bloom filter hash count k must be >= 1");
  if (n < 0) throw DomainError("bloom filter key count n must be >= 0");
}

}  // namespace detail

// Probability that one given bit is still 0 after n inserts with k hashes
// into m bits: (1 - 1/m)^(kn).
inline double bit_zero_probability(std::int64_t m, std::int64_t n, std::int64_t k) {
  detail::check_fp_domain(m, n, k);
  if (n == 0) return 1.0;
  if (m == 1) return 0.0;
  const double kn = static_cast<double>(k) * static_cast<double>(n);
  return std::exp(kn * std::log1p(-1.0 / static_cast<double>(m)));
}

// False positive probability (1 - (1 - 1/m)^(kn))^k.
inline double predicted_fp_exact(std::int64_t m, std::int64_t n, std::int64_t k) {
  const double zero = bit_zero_probability(m, n, k);
  return std::pow(1.0 - zero, static_cast<double>(k));
}

// The usual approximation (1 - e^(-kn/m))^k.
inline double predicted_fp_approx(std::int64_t m, std::int64_t n, std::int64_t k) {
  detail::check_fp_domain(m, n, k);
  const double x = static_cast<double>(k) * static_cast<double>(n) / static_cast<double>(m);
  return std::pow(-std::expm1(-x), static_cast<double>(k));
}

struct BloomSizing {
  std::uint64_t m = 0;
  std::uint32_t k = 0;
};

// Standard optimum for a target false positive rate p at n keys:
// m = ceil(-n ln p / (ln 2)^2), k = round((m/n) ln 2).
inline BloomSizing optimal_sizing(std::uint64_t expected_n, double target_fp) {
  if (expected_n == 0) throw DomainError("expected key count must be positive");
  if (!(target_fp > 0.0 && target_fp < 1.0)) {
    throw DomainError("target false positive rate must lie in (0, 1)");
  }
  const double ln2 = std::log(2.0);
  const double n = static_cast<double>(expected_n);
  const auto m = static_cast<std::uint64_t>(std::ceil(-n * std::log(target_fp) / (ln2 * ln2)));
  const auto k = static_cast<std::uint32_t>(
      std::max(1.0, std::round(static_cast<double>(m) / n * ln2)));
  return {std::max<std::uint64_t>(m, 1), k};
}

class BloomFilter {
 public:
  BloomFilter(std::uint64_t m, std::uint32_t k)
      : m_(m), k_(k), words_((m + 63) / 64) {
    if (m < 1) throw DomainError("bloom filter bit count m must be >= 1");
    if (k < 1) throw DomainError("bloom filter hash count k must be >= 1");
    bits_ = std::make_unique<std::atomic<std::uint64_t>[]>(words_);
    for (std::size_t i = 0; i < words_; ++i) bits_[i].store(0, std::memory_order_relaxed);
  }

  explicit BloomFilter(BloomSizing s) : BloomFilter(s.m, s.k) {}

  BloomFilter(const BloomFilter&) = delete;
  BloomFilter& operator=(const BloomFilter&) = delete;

  // Sets the k probe bits of `key`. Re-inserting a key changes no bits but
  // still counts towards n.
  void insert(std::string_view key) noexcept {
    for_each_position(key, [this](std::uint64_t pos) {
      bits_[pos >> 6].fetch_or(std::uint64_t{1} << (pos & 63), std::memory_order_release);
      return true;
    });
    n_.fetch_add(1, std::memory_order_relaxed);
  }

  // false: key was certainly never inserted. true: possibly inserted.
  bool maybe_contains(std::string_view key) const noexcept {
    return for_each_position(key, [this](std::uint64_t pos) {
      return (bits_[pos >> 6].load(std::memory_order_acquire) >> (pos & 63)) & 1U;
    });
  }

  std::uint64_t bit_count() const noexcept { return m_; }
  std::uint32_t hash_count() const noexcept { return k_; }
  std::uint64_t inserted_count() const noexcept { return n_.load(std::memory_order_relaxed); }

  std::uint64_t popcount() const noexcept {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < words_; ++i) {
      total += static_cast<std::uint64_t>(
          __builtin_popcountll(bits_[i].load(std::memory_order_relaxed)));
    }
    return total;
  }

  // False positive rate the analysis predicts at the current fill.
  double predicted_fp() const {
    return predicted_fp_approx(static_cast<std::int64_t>(m_),
                               static_cast<std::int64_t>(inserted_count()), k_);
  }

 private:
  // Calls fn(position) for each of the k positions; stops early (returning
  // false) as soon as fn returns false.
  template <class Fn>
  bool for_each_position(std::string_view key, Fn&& fn) const noexcept {
    const auto h = detail::murmur3_128(key);
    std::uint64_t pos = h.low % m_;
    std::uint64_t step = h.high % m_;
    for (std::uint32_t i = 0; i < k_; ++i) {
      if (!fn(pos)) return false;
      pos += step;
      if (pos >= m_) pos -= m_;
    }
    return true;
  }

  std::uint64_t m_;
  std::uint32_t k_;
  std::size_t words_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> bits_;
  std::atomic<std::uint64_t> n_{0};
};

}  // namespace bdp
