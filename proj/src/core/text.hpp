#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deeppharm::text {

// Splits one CSV line into fields. Double-quoted fields may contain commas
// and "" escapes; surrounding whitespace is kept as-is.
std::vector<std::string> split_csv_line(std::string_view line);

// Quotes a field only when it contains a comma, quote or newline.
std::string csv_field(std::string_view field);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

// Strict parse: the whole (trimmed) field must be a finite or infinite
// number. Returns nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view field);

std::string_view trim(std::string_view s);

// Reads a whole file; throws Error(kIo) when it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace deeppharm::text
