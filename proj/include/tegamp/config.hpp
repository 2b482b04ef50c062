#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tegamp {

/// One "key = value" line. `line` is 1-based.
struct KeyValue {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// Plain "key = value" lines; '#' starts a comment, blank lines are skipped,
/// a repeated key is an error.
std::vector<KeyValue> parse_key_values(std::istream& in);
std::vector<KeyValue> load_key_values(const std::string& path);

// Value parsers. They throw ConfigError naming `key`.
double parse_double(const std::string& key, const std::string& text);
std::size_t parse_count(const std::string& key, const std::string& text);
std::uint64_t parse_u64(const std::string& key, const std::string& text);
bool parse_bool(const std::string& key, const std::string& text);
/// Comma- or space-separated items.
std::vector<std::string> split_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& key, const std::string& text);
std::vector<std::size_t> parse_count_list(const std::string& key, const std::string& text);

}  // namespace tegamp
