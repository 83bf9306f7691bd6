#pragma once

// Typed content elements and their wire form {"type": ..., "data": ...}.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bdp/error.hpp"

namespace bdp {

using nlohmann::json;

enum class ChunkType { text, url, image, email, phone, fbprofile, twprofile };

inline constexpr std::array<std::pair<ChunkType, std::string_view>, 7> kChunkTypeNames{{
    {ChunkType::text, "text"},
    {ChunkType::url, "url"},
    {ChunkType::image, "image"},
    {ChunkType::email, "email"},
    {ChunkType::phone, "phone"},
    {ChunkType::fbprofile, "fbprofile"},
    {ChunkType::twprofile, "twprofile"},
}};

inline std::string_view to_string(ChunkType t) noexcept {
  for (const auto& [type, name] : kChunkTypeNames) {
    if (type == t) return name;
  }
  return "text";
}

inline std::optional<ChunkType> chunk_type_from_string(std::string_view name) noexcept {
  for (const auto& [type, n] : kChunkTypeNames) {
    if (n == name) return type;
  }
  return std::nullopt;
}

// Types whose payload names a web resource.
inline bool is_url_type(ChunkType t) noexcept {
  return t == ChunkType::url || t == ChunkType::image || t == ChunkType::fbprofile ||
         t == ChunkType::twprofile;
}

// scheme "://" authority [rest], no whitespace or control characters.
inline bool is_absolute_url(std::string_view s) noexcept {
  const auto colon = s.find("://");
  if (colon == std::string_view::npos || colon == 0) return false;
  const char first = s[0];
  if (!((first >= 'a' && first <= 'z') || (first >= 'A' && first <= 'Z'))) return false;
  for (std::size_t i = 1; i < colon; ++i) {
    const char c = s[i];
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '+' || c == '-' || c == '.';
    if (!ok) return false;
  }
  const std::string_view rest = s.substr(colon + 3);
  if (rest.empty() || rest.front() == '/') return false;
  for (const char c : s) {
    if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7f) return false;
  }
  return true;
}

struct DataChunk {
  ChunkType type = ChunkType::text;
  std::string data;

  friend bool operator==(const DataChunk&, const DataChunk&) = default;
};

inline void validate(const DataChunk& chunk) {
  if (chunk.data.empty()) {
    throw ValidationError("invalid_chunk",
                          std::string(to_string(chunk.type)) + " chunk has empty data");
  }
  if (is_url_type(chunk.type) && !is_absolute_url(chunk.data)) {
    throw ValidationError("invalid_chunk", std::string(to_string(chunk.type)) +
                                               " chunk data is not an absolute URL: " + chunk.data);
  }
}

inline void validate(const std::vector<DataChunk>& chunks) {
  if (chunks.empty()) throw ValidationError("empty_chunks", "at least one data chunk is required");
  for (const auto& c : chunks) validate(c);
}

// Builds and validates a chunk from a type name; unknown names are rejected.
inline DataChunk make_chunk(std::string_view type_name, std::string data) {
  const auto type = chunk_type_from_string(type_name);
  if (!type) {
    throw ValidationError("invalid_chunk_type",
                          "unsupported chunk type '" + std::string(type_name) + "'");
  }
  DataChunk chunk{*type, std::move(data)};
  validate(chunk);
  return chunk;
}

inline json chunk_to_json(const DataChunk& c) {
  return json{{"type", to_string(c.type)}, {"data", c.data}};
}

inline json chunks_to_json(const std::vector<DataChunk>& chunks) {
  json arr = json::array();
  for (const auto& c : chunks) arr.push_back(chunk_to_json(c));
  return arr;
}

inline DataChunk chunk_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.contains("data") || !j["type"].is_string() ||
      !j["data"].is_string()) {
    throw ValidationError("invalid_chunk", "a chunk is an object with string 'type' and 'data'");
  }
  return make_chunk(j["type"].get<std::string>(), j["data"].get<std::string>());
}

inline std::vector<DataChunk> chunks_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("invalid_chunk", "chunks must be a JSON array");
  std::vector<DataChunk> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(chunk_from_json(e));
  validate(out);
  return out;
}

}  // namespace bdp
