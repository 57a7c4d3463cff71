#pragma once

#include <string>
#include <vector>

namespace gascope {

// Fixed-width text table for the human-readable reports. Column widths come
// from content, alignment is per column.
class TextTable {
public:
    enum class Align { LEFT, RIGHT };

    void add_column(const std::string& name, Align align = Align::RIGHT);
    void add_row(std::vector<std::string> cells);
    std::string render() const;

private:
    std::vector<std::string> names_;
    std::vector<Align> aligns_;
    std::vector<std::vector<std::string>> rows_;
};

std::string fmt_fixed(double v, int dp);
std::string fmt_signed(double v, int dp);  // explicit +/- sign
std::string fmt_pct(double fraction, int dp);

}  // namespace gascope
