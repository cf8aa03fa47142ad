#pragma once

// Minimal RFC-4180 tables. Lines starting with '#' before the header carry
// free-text notes (units, definitions) and are skipped by gnuplot.

#include <iosfwd>
#include <string>
#include <vector>

namespace demix {

struct CsvTable {
    std::vector<std::string> notes;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    bool operator==(const CsvTable&) const = default;
};

std::string csv_field(const std::string& value);
void write_csv(std::ostream& out, const CsvTable& table);
std::string to_csv(const CsvTable& table);
/// Throws SpecError on malformed input (unterminated quote, ragged rows).
CsvTable read_csv(std::istream& in);
CsvTable parse_csv(const std::string& text);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

}  // namespace demix
