#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trajrep {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

// Whole-field parse; nullopt on trailing garbage, empty input or overflow.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char delimiter);
bool is_valid_utf8(std::string_view text);

/// One `key = value` line of a key-value text file.
struct KeyValue {
  std::string section;  // empty outside any [section]
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Reads `key = value` lines with optional `[section]` headers.
/// Blank lines and lines starting with '#' are ignored.
std::vector<KeyValue> parse_key_values(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace trajrep
