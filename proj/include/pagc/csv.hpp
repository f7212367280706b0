#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

namespace pagc::csv {

// RFC-4180-style quoting: fields containing comma, quote or newline are
// quoted and embedded quotes doubled.
std::string escape_field(const std::string& field);

std::string join_row(const std::vector<std::string>& fields);

// Parses one CSV document into rows of fields. Handles quoted fields and
// embedded newlines inside quotes.
std::vector<std::vector<std::string>> parse(const std::string& text);

std::vector<std::vector<std::string>> read_file(const std::string& path);

void write_file(const std::string& path, const std::vector<std::vector<std::string>>& rows);

// Shortest round-trip decimal form, identical bytes for identical doubles.
std::string format_double(double v);

std::string format_int(long long v);

double parse_double(const std::string& s);
long long parse_int(const std::string& s);

} // namespace pagc::csv
