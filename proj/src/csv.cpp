#include "gascope/csv.hpp"

#include <fstream>
#include <sstream>

#include "gascope/errors.hpp"

namespace gascope::csv {

std::optional<std::size_t> Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            out.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            // swallow trailing CR
        } else {
            field.push_back(c);
        }
    }
    out.push_back(std::move(field));
    return out;
}

}  // namespace

Table read(std::istream& in, char delimiter) {
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = split_line(line, delimiter);
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            t.rows.push_back(std::move(fields));
        }
    }
    if (first) throw DataError("delimited input has no header row");
    return t;
}

Table read_file(const std::string& path, char delimiter) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    return read(in, delimiter);
}

std::string escape_field(const std::string& field, char delimiter) {
    bool needs_quotes = false;
    for (char c : field)
        if (c == delimiter || c == '"' || c == '\n' || c == '\r') needs_quotes = true;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& row, char delimiter) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out.put(delimiter);
        out << escape_field(row[i], delimiter);
    }
    out.put('\n');
}

}  // namespace gascope::csv
