#pragma once

#include <string>
#include <vector>

#include "qrcpipe/table.hpp"

namespace qrcpipe {

// Minimal comma-separated parsing; the pipeline's formats never quote fields.
std::vector<std::string> split_csv_line(const std::string& line);

// Reads a header + numeric rows. If label_column is non-empty and present it
// is stripped into Table::labels.
Table read_csv(const std::string& path, const std::string& label_column = "");

void write_csv(const std::string& path, const Table& table,
               const std::string& label_column = "");

}  // namespace qrcpipe
