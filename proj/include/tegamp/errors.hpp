#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tegamp {

/// Malformed input file or text. Line and column are 1-based; 0 means unknown.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        if (line == 0) return what;
        std::string loc = "line " + std::to_string(line);
        if (column != 0) loc += ", column " + std::to_string(column);
        return loc + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
};

/// Invalid solver or experiment configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace tegamp
