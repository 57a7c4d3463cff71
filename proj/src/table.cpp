#include "gascope/table.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace gascope {

void TextTable::add_column(const std::string& name, Align align) {
    names_.push_back(name);
    aligns_.push_back(align);
}

void TextTable::add_row(std::vector<std::string> cells) {
    cells.resize(names_.size());
    rows_.push_back(std::move(cells));
}

std::string TextTable::render() const {
    std::vector<std::size_t> widths(names_.size());
    for (std::size_t c = 0; c < names_.size(); ++c) widths[c] = names_[c].size();
    for (const auto& row : rows_)
        for (std::size_t c = 0; c < row.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());

    std::ostringstream out;
    auto emit_row = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < names_.size(); ++c) {
            const std::string& cell = c < row.size() ? row[c] : names_[c];
            const std::size_t pad = widths[c] - cell.size();
            if (c) out << "  ";
            if (aligns_[c] == Align::RIGHT) out << std::string(pad, ' ') << cell;
            else out << cell << std::string(pad, ' ');
        }
        out << "\n";
    };
    emit_row(names_);
    std::size_t total = names_.empty() ? 0 : (names_.size() - 1) * 2;
    for (auto w : widths) total += w;
    out << std::string(total, '-') << "\n";
    for (const auto& row : rows_) emit_row(row);
    return out.str();
}

std::string fmt_fixed(double v, int dp) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", dp, v);
    return buf;
}

std::string fmt_signed(double v, int dp) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%+.*f", dp, v);
    return buf;
}

std::string fmt_pct(double fraction, int dp) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f%%", dp, fraction * 100.0);
    return buf;
}

}  // namespace gascope
