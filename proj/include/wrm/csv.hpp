#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace wrm {

// Round-trip-safe text form for doubles (17 significant digits).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Minimal CSV with '#' metadata comments above the header row.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void comment(const std::string& line) { out_ << "# " << line << '\n'; }

    void columns(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i)
            out_ << (i ? "," : "") << names[i];
        out_ << '\n';
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_double(values[i]);
        out_ << '\n';
    }

private:
    std::ostream& out_;
};

}  // namespace wrm
