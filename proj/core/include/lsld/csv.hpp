#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lsld::csv {

using Row = std::vector<std::string>;

/// Splits one CSV record. Double-quoted fields may contain commas and
/// doubled quotes.
Row split(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);
std::string join(const Row& row);

/// Reads a whole file; the first record must equal `expected_header`.
/// Blank lines are skipped. Throws FormatError naming the file and line.
std::vector<Row> read(const std::filesystem::path& path,
                      const Row& expected_header);

/// Six significant digits, the precision used by every CSV output.
std::string format_real(double value);

}  // namespace lsld::csv
