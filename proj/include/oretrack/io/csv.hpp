#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "oretrack/core/errors.hpp"

namespace oretrack {

// Shortest round-trip decimal formatting (deterministic).
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path, std::ios::trunc) {
        if (!out_) throw invalid_argument("csv: cannot write " + path);
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_double(values[i]);
        out_ << '\n';
    }

    void row_strings(const std::vector<std::string>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
        out_ << '\n';
    }

  private:
    std::ofstream out_;
};

}  // namespace oretrack
