#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace deeppp {

/// Blank or '#'-prefixed (after leading whitespace).
bool is_blank_or_comment(std::string_view line);

/// Tab-separated when the line has a tab, whitespace-separated otherwise.
std::vector<std::string> split_fields(std::string_view line);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

/// RFC 4180 quoting when the field needs it.
std::string csv_escape(std::string_view field);

/// Writes `text` to `path` in binary mode (LF endings preserved).
void write_text_file(const std::string& path, std::string_view text);

}  // namespace deeppp
