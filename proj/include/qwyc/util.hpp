#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qwyc {

// Shortest decimal rendering that round-trips the exact double value
// (at most 17 significant digits).
std::string format_double(double value);

// Strict double parser: the whole field must be consumed. Returns nullopt
// on malformed input. Accepts "inf"/"nan" spellings but callers reject
// non-finite values where the formats forbid them.
std::optional<double> parse_double(std::string_view field);

// Splits one CSV line on commas. No quoting rules: fields must not
// themselves contain commas.
std::vector<std::string_view> split_csv_line(std::string_view line);

// Reads a whole file; throws parse_error when it cannot be opened.
std::string read_text_file(const std::string& path);

// Writes text, overwriting; throws validation_error on I/O failure.
void write_text_file(const std::string& path, std::string_view content);

}  // namespace qwyc
