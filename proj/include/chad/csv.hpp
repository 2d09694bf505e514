#pragma once

// CSV output.  Doubles are printed with the shortest representation that
// round-trips, so identical runs produce byte-identical files and re-parsing
// recovers the exact values.

#include <charconv>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace chad {

inline std::string csv_num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string csv_num(std::int64_t v) { return std::to_string(v); }
inline std::string csv_num(std::uint64_t v) { return std::to_string(v); }

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void comment(const std::string& line) { os_ << "# " << line << "\n"; }

    void row(std::span<const std::string> fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) os_ << ',';
            os_ << csv_field(fields[i]);
        }
        os_ << '\n';
    }

    void row(std::initializer_list<std::string> fields) {
        row(std::span<const std::string>(fields.begin(), fields.size()));
    }

private:
    std::ostream& os_;
};

} // namespace chad
