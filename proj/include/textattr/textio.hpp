#pragma once

#include <string>
#include <vector>

namespace textattr {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Shortest decimal form that round-trips the exact double; locale-free.
std::string format_double(double v);

// CSV with quoted-field support ("" escapes, embedded commas/newlines).
// Blank lines are dropped. `origin` names the source in error messages.
std::vector<std::vector<std::string>> parse_csv(const std::string& content,
                                                const std::string& origin);

std::string csv_escape(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace textattr
