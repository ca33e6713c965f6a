#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace nitrial {

// Minimal CSV table: header row plus string cells (no quoting or escaping;
// the analysis format is plain numeric columns).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t n_rows() const;
    int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

// Round-trip double formatting (shortest exact representation).
std::string format_double(double v);

}  // namespace nitrial
