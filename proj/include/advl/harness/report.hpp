#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace advl::harness {

// Six decimals; "inf" / "-inf" / "nan" for non-finite values.
std::string format_real(double value);

// Quotes a field when it contains a comma, quote or line break.
std::string csv_field(const std::string& value);

/// Header plus rows, written with LF line endings.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string render() const;
    void write(const std::filesystem::path& path) const;
};

}  // namespace advl::harness
