#include "demix/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "demix/common.hpp"

namespace demix {

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

void write_row(std::ostream& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << csv_field(row[i]);
    }
    out << "\r\n";
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
    for (const auto& note : table.notes) out << "# " << note << "\r\n";
    write_row(out, table.header);
    for (const auto& row : table.rows) write_row(out, row);
}

std::string to_csv(const CsvTable& table) {
    std::ostringstream out;
    write_csv(out, table);
    return out.str();
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::size_t pos = 0;
    const std::size_t n = text.size();
    int line = 1;

    auto skip_newline = [&] {
        if (pos < n && text[pos] == '\r') ++pos;
        if (pos < n && text[pos] == '\n') ++pos;
        ++line;
    };

    // Notes precede the header.
    while (pos < n && text[pos] == '#') {
        std::size_t end = text.find_first_of("\r\n", pos);
        if (end == std::string::npos) end = n;
        std::string note = text.substr(pos + 1, end - pos - 1);
        if (!note.empty() && note.front() == ' ') note.erase(0, 1);
        table.notes.push_back(std::move(note));
        pos = end;
        skip_newline();
    }

    std::vector<std::vector<std::string>> records;
    while (pos < n) {
        std::vector<std::string> record;
        std::string field;
        bool done = false;
        while (!done) {
            field.clear();
            if (pos < n && text[pos] == '"') {
                ++pos;
                for (;;) {
                    if (pos >= n) throw SpecError("csv line " + std::to_string(line) + ": unterminated quoted field");
                    const char c = text[pos++];
                    if (c == '"') {
                        if (pos < n && text[pos] == '"') {
                            field += '"';
                            ++pos;
                        } else {
                            break;
                        }
                    } else {
                        if (c == '\n') ++line;
                        field += c;
                    }
                }
            } else {
                while (pos < n && text[pos] != ',' && text[pos] != '\r' && text[pos] != '\n') field += text[pos++];
            }
            record.push_back(field);
            if (pos < n && text[pos] == ',') {
                ++pos;
            } else {
                if (pos < n && text[pos] != '\r' && text[pos] != '\n')
                    throw SpecError("csv line " + std::to_string(line) + ": text after closing quote");
                done = true;
            }
        }
        skip_newline();
        records.push_back(std::move(record));
    }
    if (records.empty()) throw SpecError("csv: missing header row");
    table.header = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() != table.header.size())
            throw SpecError("csv row " + std::to_string(i) + ": expected " + std::to_string(table.header.size()) +
                            " fields, got " + std::to_string(records[i].size()));
        table.rows.push_back(std::move(records[i]));
    }
    return table;
}

CsvTable read_csv(std::istream& in) {
    return parse_csv(std::string(std::istreambuf_iterator<char>(in), {}));
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

}  // namespace demix
