#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "bdp/error.hpp"

namespace bdp {

// Node identifier in canonical form "aa:bb:cc:dd:ee:ff". Parsing accepts
// upper case hex and '-' separators.
class MacAddress {
 public:
  MacAddress() = default;

  static MacAddress parse(std::string_view text) {
    if (text.size() != 17) throw invalid(text);
    const char sep = text[2];
    if (sep != ':' && sep != '-') throw invalid(text);
    std::string canonical;
    canonical.reserve(17);
    for (std::size_t i = 0; i < 17; ++i) {
      const char c = text[i];
      if (i % 3 == 2) {
        if (c != sep) throw invalid(text);
        canonical.push_back(':');
      } else if (c >= '0' && c <= '9') {
        canonical.push_back(c);
      } else if (c >= 'a' && c <= 'f') {
        canonical.push_back(c);
      } else if (c >= 'A' && c <= 'F') {
        canonical.push_back(static_cast<char>(c - 'A' + 'a'));
      } else {
        throw invalid(text);
      }
    }
    return MacAddress(std::move(canonical));
  }

  static bool is_valid(std::string_view text) noexcept {
    try {
      parse(text);
      return true;
    } catch (const ValidationError&) {
      return false;
    }
  }

  static MacAddress from_octets(const std::array<std::uint8_t, 6>& octets) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    s.reserve(17);
    for (std::size_t i = 0; i < 6; ++i) {
      if (i) s.push_back(':');
      s.push_back(hex[octets[i] >> 4]);
      s.push_back(hex[octets[i] & 0xf]);
    }
    return MacAddress(std::move(s));
  }

  const std::string& str() const noexcept { return text_; }
  bool empty() const noexcept { return text_.empty(); }

  friend bool operator==(const MacAddress&, const MacAddress&) = default;
  friend std::strong_ordering operator<=>(const MacAddress& a, const MacAddress& b) noexcept {
    const int c = a.text_.compare(b.text_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  explicit MacAddress(std::string canonical) : text_(std::move(canonical)) {}

  static ValidationError invalid(std::string_view text) {
    return ValidationError("invalid_mac", "invalid MAC address '" + std::string(text) + "'");
  }

  std::string text_;
};

}  // namespace bdp

template <>
struct std::hash<bdp::MacAddress> {
  std::size_t operator()(const bdp::MacAddress& m) const noexcept {
    return std::hash<std::string>{}(m.str());
  }
};
