#include "tegamp/config.hpp"

#include "tegamp/errors.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>

namespace tegamp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<KeyValue> parse_key_values(std::istream& in) {
    std::vector<KeyValue> out;
    std::set<std::string> seen;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
        if (trim(body).empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            const auto col = body.find_first_not_of(" \t") + 1;
            throw ParseError("expected 'key = value'", line, col);
        }
        KeyValue kv{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
        if (kv.key.empty()) throw ParseError("missing key before '='", line, eq + 1);
        if (!seen.insert(kv.key).second) throw ParseError("duplicate key '" + kv.key + "'", line, 1);
        out.push_back(std::move(kv));
    }
    return out;
}

std::vector<KeyValue> load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file " + path);
    try {
        return parse_key_values(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError(key + ": expected a number, got '" + text + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError(key + ": expected a nonnegative integer, got '" + text + "'");
    return v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
    return static_cast<std::size_t>(parse_u64(key, text));
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(key, item));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

std::vector<std::size_t> parse_count_list(const std::string& key, const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text)) out.push_back(parse_count(key, item));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

}  // namespace tegamp
