#pragma once

// Embedded sorted key-value store.
//
// Keys are (row, family, qualifier, visibility, timestamp). The four byte
// elements sort ascending, compared element by element with plain unsigned
// byte-wise lexicographic order; ties sort by timestamp DESCENDING so the
// newest version of a cell is the first one a scan reaches.
//
// The store is an ordered in-memory map with an optional append-only log.
// Log records are length-prefixed:
//
//   u32 BE body length
//   body:  u8 op ('P' put | 'D' delete)
//          row, family, qualifier, visibility   each as u32 BE length + bytes
//          i64 BE timestamp
//          value as u32 BE length + bytes       (put only)
//
// The log is replayed in order when the store is opened. A truncated record
// at the tail (torn write) ends replay and is cut off.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bdp/error.hpp"

namespace bdp {

struct StoreKey {
  std::string row;
  std::string family;
  std::string qualifier;
  std::string visibility;
  std::int64_t timestamp = 0;

  friend bool operator==(const StoreKey&, const StoreKey&) = default;
};

struct StoreEntry {
  StoreKey key;
  std::string value;

  friend bool operator==(const StoreEntry&, const StoreEntry&) = default;
};

namespace detail {

inline std::weak_ordering compare_bytes(std::string_view a, std::string_view b) noexcept {
  // char_traits<char>::compare orders as unsigned char.
  const int c = a.compare(b);
  return c < 0 ? std::weak_ordering::less
               : (c > 0 ? std::weak_ordering::greater : std::weak_ordering::equivalent);
}

inline std::string_view key_element(const StoreKey& k, std::size_t i) noexcept {
  switch (i) {
    case 0: return k.row;
    case 1: return k.family;
    case 2: return k.qualifier;
    default: return k.visibility;
  }
}

}  // namespace detail

inline std::weak_ordering compare_keys(const StoreKey& a, const StoreKey& b) noexcept {
  for (std::size_t i = 0; i < 4; ++i) {
    if (auto c = detail::compare_bytes(detail::key_element(a, i), detail::key_element(b, i));
        c != 0) {
      return c;
    }
  }
  return b.timestamp <=> a.timestamp;  // descending
}

// A position in key order given by a leading prefix of key elements and,
// when all four elements are present, optionally a timestamp. A bound sorts
// before every key that shares its elements, so [bound(r), bound(r + '\0'))
// covers exactly the keys of row r.
class KeyBound {
 public:
  KeyBound() = default;  // before every key

  static KeyBound prefix(std::vector<std::string> elements) {
    if (elements.size() > 4) {
      throw ValidationError("invalid_key", "a key bound has at most four elements");
    }
    KeyBound b;
    b.elements_ = std::move(elements);
    return b;
  }

  static KeyBound at(const StoreKey& key) {
    KeyBound b;
    b.elements_ = {key.row, key.family, key.qualifier, key.visibility};
    b.timestamp_ = key.timestamp;
    return b;
  }

  // Half-open bounds for all keys whose leading elements equal `elements`.
  static std::pair<KeyBound, KeyBound> prefix_range(std::vector<std::string> elements) {
    auto start = prefix(elements);
    if (elements.empty()) return {start, KeyBound{true}};
    elements.back().push_back('\0');
    return {std::move(start), prefix(std::move(elements))};
  }

  static KeyBound end_of_store() { return KeyBound{true}; }

  bool is_end() const noexcept { return end_; }

  // Ordering of `key` relative to this bound; never equivalent unless the
  // bound carries a full key.
  std::weak_ordering compare_key(const StoreKey& key) const noexcept {
    if (end_) return std::weak_ordering::less;
    for (std::size_t i = 0; i < elements_.size(); ++i) {
      if (auto c = detail::compare_bytes(detail::key_element(key, i), elements_[i]); c != 0) {
        return c;
      }
    }
    if (timestamp_ && elements_.size() == 4) return *timestamp_ <=> key.timestamp;
    return std::weak_ordering::greater;
  }

  friend std::weak_ordering compare_bounds(const KeyBound& a, const KeyBound& b) noexcept {
    if (a.end_ || b.end_) return a.end_ <=> b.end_;
    const std::size_t n = std::min(a.elements_.size(), b.elements_.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (auto c = detail::compare_bytes(a.elements_[i], b.elements_[i]); c != 0) return c;
    }
    if (a.elements_.size() != b.elements_.size()) {
      return a.elements_.size() <=> b.elements_.size();
    }
    if (a.timestamp_ && b.timestamp_) return *b.timestamp_ <=> *a.timestamp_;
    if (a.timestamp_) return std::weak_ordering::greater;
    if (b.timestamp_) return std::weak_ordering::less;
    return std::weak_ordering::equivalent;
  }

 private:
  explicit KeyBound(bool end) : end_(end) {}

  std::vector<std::string> elements_;
  std::optional<std::int64_t> timestamp_;
  bool end_ = false;
};

struct KeyOrder {
  using is_transparent = void;

  bool operator()(const StoreKey& a, const StoreKey& b) const noexcept {
    return compare_keys(a, b) < 0;
  }
  bool operator()(const StoreKey& a, const KeyBound& b) const noexcept {
    return b.compare_key(a) < 0;
  }
  bool operator()(const KeyBound& a, const StoreKey& b) const noexcept {
    return a.compare_key(b) > 0;
  }
};

class KvStore {
 public:
  using Visitor = std::function<void(const StoreKey&, std::string_view value)>;

  // Memory-only store.
  KvStore() = default;

  // Store backed by an append-only log at `path`, created if missing.
  explicit KvStore(std::filesystem::path path) : path_(std::move(path)) {
    replay();
    log_.open(path_, std::ios::binary | std::ios::app);
    if (!log_) {
      throw Error(ErrorKind::internal, "storage_error",
                  "cannot open store log " + path_.string());
    }
  }

  KvStore(const KvStore&) = delete;
  KvStore& operator=(const KvStore&) = delete;

  void put(StoreEntry entry) {
    check_key(entry.key);
    std::unique_lock lock(mutex_);
    append_log('P', entry.key, entry.value);
    data_.insert_or_assign(std::move(entry.key), std::move(entry.value));
  }

  // Newest version of (row, family, qualifier) across all visibilities;
  // equal timestamps resolve to the lowest visibility.
  std::optional<StoreEntry> get_latest(std::string_view row, std::string_view family,
                                       std::string_view qualifier) const {
    check_row(row);
    auto [start, end] = KeyBound::prefix_range(
        {std::string(row), std::string(family), std::string(qualifier)});
    std::shared_lock lock(mutex_);
    std::optional<StoreEntry> best;
    auto it = data_.lower_bound(start);
    auto last = data_.lower_bound(end);
    for (; it != last; ++it) {
      if (!best || it->first.timestamp > best->key.timestamp) best = StoreEntry{it->first, it->second};
    }
    return best;
  }

  // Newest version of one exact cell.
  std::optional<StoreEntry> get_latest(std::string_view row, std::string_view family,
                                       std::string_view qualifier,
                                       std::string_view visibility) const {
    check_row(row);
    auto [start, end] = KeyBound::prefix_range({std::string(row), std::string(family),
                                                std::string(qualifier), std::string(visibility)});
    std::shared_lock lock(mutex_);
    auto it = data_.lower_bound(start);
    if (it == data_.end() || end.compare_key(it->first) >= 0) return std::nullopt;
    return StoreEntry{it->first, it->second};
  }

  // All entries in [start, end) in key order. An inverted range is empty.
  std::vector<StoreEntry> scan(const KeyBound& start, const KeyBound& end) const {
    std::vector<StoreEntry> out;
    visit(start, end, [&](const StoreKey& k, std::string_view v) {
      out.push_back(StoreEntry{k, std::string(v)});
    });
    return out;
  }

  std::vector<StoreEntry> scan_all() const {
    return scan(KeyBound{}, KeyBound::end_of_store());
  }

  // Visits [start, end) under a read lock. The visitor sees a consistent
  // snapshot and must not call back into the store.
  void visit(const KeyBound& start, const KeyBound& end, const Visitor& fn) const {
    if (compare_bounds(start, end) >= 0) return;
    std::shared_lock lock(mutex_);
    auto last = data_.lower_bound(end);
    for (auto it = data_.lower_bound(start); it != last; ++it) fn(it->first, it->second);
  }

  // Removes the exact key; absent keys are a no-op.
  void remove(const StoreKey& key) {
    std::unique_lock lock(mutex_);
    auto it = data_.find(key);
    if (it == data_.end()) return;
    append_log('D', key, {});
    data_.erase(it);
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return data_.size();
  }

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  static void check_row(std::string_view row) {
    if (row.empty()) throw ValidationError("invalid_key", "store key row must be non-empty");
  }
  static void check_key(const StoreKey& key) { check_row(key.row); }

  static void put_u32(std::string& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
  }
  static void put_bytes(std::string& out, std::string_view bytes) {
    put_u32(out, static_cast<std::uint32_t>(bytes.size()));
    out.append(bytes);
  }

  void append_log(char op, const StoreKey& key, std::string_view value) {
    if (!log_.is_open()) return;
    std::string body;
    body.push_back(op);
    put_bytes(body, key.row);
    put_bytes(body, key.family);
    put_bytes(body, key.qualifier);
    put_bytes(body, key.visibility);
    const auto ts = static_cast<std::uint64_t>(key.timestamp);
    for (int shift = 56; shift >= 0; shift -= 8) body.push_back(static_cast<char>((ts >> shift) & 0xff));
    if (op == 'P') put_bytes(body, value);
    std::string record;
    put_u32(record, static_cast<std::uint32_t>(body.size()));
    record += body;
    log_.write(record.data(), static_cast<std::streamsize>(record.size()));
    log_.flush();
    if (!log_) throw Error(ErrorKind::internal, "storage_error", "store log write failed");
  }

  class Reader {
   public:
    explicit Reader(std::string_view buf) : buf_(buf) {}
    bool u32(std::uint32_t& v) {
      if (buf_.size() - pos_ < 4) return false;
      v = 0;
      for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(buf_[pos_++]);
      return true;
    }
    bool i64(std::int64_t& v) {
      if (buf_.size() - pos_ < 8) return false;
      std::uint64_t u = 0;
      for (int i = 0; i < 8; ++i) u = (u << 8) | static_cast<unsigned char>(buf_[pos_++]);
      v = static_cast<std::int64_t>(u);
      return true;
    }
    bool bytes(std::string& s) {
      std::uint32_t n = 0;
      if (!u32(n) || buf_.size() - pos_ < n) return false;
      s.assign(buf_.substr(pos_, n));
      pos_ += n;
      return true;
    }
    bool byte(char& c) {
      if (pos_ >= buf_.size()) return false;
      c = buf_[pos_++];
      return true;
    }
    bool done() const noexcept { return pos_ == buf_.size(); }

   private:
    std::string_view buf_;
    std::size_t pos_ = 0;
  };

  void replay() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    const std::string_view all(buf);
    std::size_t offset = 0;
    while (offset < all.size()) {
      Reader header(all.substr(offset));
      std::uint32_t len = 0;
      if (!header.u32(len) || all.size() - offset - 4 < len) break;  // torn tail

      Reader body(all.substr(offset + 4, len));
      char op = 0;
      StoreKey key;
      std::string value;
      bool ok = body.byte(op) && body.bytes(key.row) && body.bytes(key.family) &&
                body.bytes(key.qualifier) && body.bytes(key.visibility) && body.i64(key.timestamp);
      if (ok && op == 'P') ok = body.bytes(value);
      if (!ok || !body.done() || (op != 'P' && op != 'D') || key.row.empty()) {
        throw Error(ErrorKind::internal, "storage_error",
                    "corrupt store log record at offset " + std::to_string(offset));
      }
      if (op == 'P') {
        data_.insert_or_assign(std::move(key), std::move(value));
      } else {
        data_.erase(key);
      }
      offset += 4 + len;
    }
    if (offset < all.size()) std::filesystem::resize_file(path_, offset);
  }

  std::filesystem::path path_;
  std::ofstream log_;
  mutable std::shared_mutex mutex_;
  std::map<StoreKey, std::string, KeyOrder> data_;
};

}  // namespace bdp
