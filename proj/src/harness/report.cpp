#include "advl/harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "advl/core/error.hpp"

namespace advl::harness {

std::string format_real(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    // Avoid "-0.000000" for tiny negatives.
    if (std::string(buf) == "-0.000000") return "0.000000";
    return buf;
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != header.size()) throw UsageError("csv row has " + std::to_string(row.size()) + " fields, header has " + std::to_string(header.size()));
    rows.push_back(std::move(row));
}

std::string CsvTable::render() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += csv_field(fields[i]);
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

void CsvTable::write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    const std::string text = render();
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace advl::harness
