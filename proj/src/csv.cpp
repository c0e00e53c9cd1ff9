#include "csv.hpp"

#include "errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace phenoflow {

std::optional<double> parse_double(std::string_view text) {
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

std::optional<long long> parse_int(std::string_view text) {
    if (text.empty()) return std::nullopt;
    long long value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) fail(Errc::io_error, "failed to format numeric value");
    return std::string(buf, ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    cells.push_back(cell);
    return cells;
}

} // namespace

CsvFile read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "cannot open file: " + path);

    CsvFile file;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (!have_header) {
            file.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != file.header.size()) {
            fail(Errc::malformed_row,
                 path + ":" + std::to_string(line_no) + ": expected " +
                     std::to_string(file.header.size()) + " cells, got " +
                     std::to_string(cells.size()));
        }
        file.rows.push_back(std::move(cells));
        file.line_numbers.push_back(line_no);
    }
    if (!have_header) fail(Errc::malformed_row, path + ": missing header row");
    return file;
}

void require_header(const CsvFile& file, const std::vector<std::string>& expected,
                    const std::string& path) {
    if (file.header == expected) return;
    std::ostringstream os;
    os << path << ": unexpected header, want ";
    for (size_t i = 0; i < expected.size(); ++i) os << (i ? "," : "") << expected[i];
    fail(Errc::malformed_row, os.str());
}

struct CsvWriter::Impl {
    std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
    impl_->out.open(path, std::ios::binary); // '\n' line endings on every platform
    if (!impl_->out) {
        delete impl_;
        fail(Errc::io_error, "cannot open file for writing: " + path);
    }
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::write_row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) impl_->out << ',';
        impl_->out << cells[i];
    }
    impl_->out << '\n';
}

} // namespace phenoflow
