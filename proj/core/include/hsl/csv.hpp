// csv.hpp — plot-ready CSV output. Floats carry 17 significant digits so
// re-runs can be compared byte-for-byte.

#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsl {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path), columns_(header.size()) {
        if (!out_) throw std::runtime_error("cannot open CSV for writing: " + path);
        write_strings(header);
    }

    void row(const std::vector<double>& values) {
        check(values.size());
        std::string line;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) line += ',';
            line += format_double(values[i]);
        }
        out_ << line << '\n';
    }

    // Mixed row: already-formatted cells.
    void row_strings(const std::vector<std::string>& cells) {
        check(cells.size());
        write_strings(cells);
    }

  private:
    void check(std::size_t n) const {
        if (n != columns_) throw std::logic_error("CSV row width mismatch");
    }
    void write_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
    std::size_t columns_;
};

}  // namespace hsl
