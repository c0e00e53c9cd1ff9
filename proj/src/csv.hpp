#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phenoflow {

// Locale-independent numeric parsing ('.' decimal separator, no grouping).
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

// Shortest representation that round-trips through parse_double.
std::string format_double(double value);

struct CsvFile {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based file line of each data row (header is line 1 unless blank
    // lines precede it).
    std::vector<int> line_numbers;
};

/// Reads a comma-separated file. Blank lines are skipped; every retained row
/// must have as many cells as the header.
CsvFile read_csv(const std::string& path);

/// Throws unless the file header equals `expected` exactly.
void require_header(const CsvFile& file, const std::vector<std::string>& expected,
                    const std::string& path);

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);
    ~CsvWriter();

    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void write_row(const std::vector<std::string>& cells);

private:
    struct Impl;
    Impl* impl_;
};

} // namespace phenoflow
