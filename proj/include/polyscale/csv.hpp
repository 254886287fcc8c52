#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace polyscale::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and
/// doubled quotes; embedded newlines are not supported.
std::vector<std::string> split_record(std::string_view line);

/// Quotes a field only when it contains a comma, quote or leading/trailing space.
std::string quote(std::string_view field);

void write_record(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Fixed-point text with `digits` decimals.
std::string format_fixed(double v, int digits);

}  // namespace polyscale::csv
