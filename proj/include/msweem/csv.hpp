#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace msweem::csv {

struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line where the record started
};

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    // Index of a header column, or -1.
    int column(const std::string& name) const;
};

// RFC-4180-style CSV: comma-delimited, double-quoted fields, quotes escaped
// by doubling, newlines allowed inside quoted fields. UTF-8 passthrough.
Table read_file(const std::string& path);
Table read_stream(std::istream& in);

std::string escape_field(const std::string& field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal representation that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace msweem::csv
