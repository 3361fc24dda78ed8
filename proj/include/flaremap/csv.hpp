#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace flaremap::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes;
/// embedded newlines are not supported.
std::vector<std::string> split_record(std::string_view line);

/// Quotes a field only when it contains a comma, quote or leading/trailing space.
std::string escape_field(std::string_view field);

/// Reads the next non-empty line, stripping a trailing '\r'. Returns false at EOF.
bool read_line(std::istream& in, std::string& line, std::size_t& line_no);

}  // namespace flaremap::csv
