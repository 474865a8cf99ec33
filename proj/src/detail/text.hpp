#pragma once

// Small CSV/number helpers shared by the text formats.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sparse_lidar::detail
{

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view line, char sep);

/// Finite double; throws ParseError naming `name` and `line_no` otherwise.
double parse_double(std::string_view field, const char* name, std::size_t line_no);
/// Non-negative int; throws ParseError otherwise.
int parse_int(std::string_view field, const char* name, std::size_t line_no);

/// %.9g, enough to round-trip the meters and seconds we write.
std::string format_number(double v);
/// %.17g, exact round trip.
std::string format_exact(double v);

std::vector<std::string> read_lines(const std::string& text);

/// Whole file as bytes; IoError when unreadable. `what` names the file kind in the message.
std::string read_text_file(const std::filesystem::path& path, const char* what);
void write_text_file(const std::filesystem::path& path, const std::string& content);

} // namespace sparse_lidar::detail
