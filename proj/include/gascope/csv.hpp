#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gascope::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(const std::string& name) const;
};

// RFC-4180-ish reader: quoted fields, doubled quotes, CR/LF tolerant.
// Header row is required by every caller in this project.
Table read(std::istream& in, char delimiter = ',');
Table read_file(const std::string& path, char delimiter = ',');

std::string escape_field(const std::string& field, char delimiter);
void write_row(std::ostream& out, const std::vector<std::string>& row, char delimiter = ',');

}  // namespace gascope::csv
