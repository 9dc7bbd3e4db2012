#include "qrcpipe/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qrcpipe/errors.hpp"

namespace qrcpipe {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            std::string last = line.substr(start);
            if (!last.empty() && last.back() == '\r') last.pop_back();
            out.push_back(last);
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

static double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw DataError("non-numeric cell '" + cell + "' in column " + col + " at data row " +
                        std::to_string(row));
    }
    return value;
}

Table read_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file (no header): " + path);
    Table t;
    std::vector<std::string> header = split_csv_line(line);
    std::ptrdiff_t label_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!label_column.empty() && header[i] == label_column) {
            label_idx = static_cast<std::ptrdiff_t>(i);
        } else {
            t.columns.push_back(header[i]);
        }
    }
    std::size_t row_index = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError("row " + std::to_string(row_index) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        }
        std::vector<double> row;
        row.reserve(t.columns.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (static_cast<std::ptrdiff_t>(i) == label_idx) {
                t.labels.push_back(static_cast<int>(parse_cell(cells[i], row_index, header[i])));
            } else {
                row.push_back(parse_cell(cells[i], row_index, header[i]));
            }
        }
        t.rows.push_back(std::move(row));
        ++row_index;
    }
    return t;
}

void write_csv(const std::string& path, const Table& table, const std::string& label_column) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out << ',';
        out << table.columns[i];
    }
    const bool with_labels = !label_column.empty() && table.labeled();
    if (with_labels) out << ',' << label_column;
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out << buf;
        }
        if (with_labels) out << ',' << table.labels[r];
        out << '\n';
    }
}

}  // namespace qrcpipe
