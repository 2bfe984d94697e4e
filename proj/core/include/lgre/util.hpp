#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lgre {

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Flat "key=value" lines; blank lines and '#' comments are skipped and both
/// sides are trimmed. Throws ParseError on a line without '='.
std::vector<KeyValue> parse_key_values(std::string_view text);

std::string read_text_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, std::string_view content);

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char delimiter);

/// 64-bit FNV-1a, used for dataset fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// Shortest round-trippable decimal form of a double.
std::string format_double(double value);

}  // namespace lgre
