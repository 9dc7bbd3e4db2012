#pragma once

#include <string>
#include <vector>

namespace qrcpipe {

// Column-named numeric table with optional binary labels. Used for the
// encoded/scaled/aggregated feature stages and for reservoir feature sets.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;  // empty when unlabeled; else one per row

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return columns.size(); }
    bool labeled() const { return labels.size() == rows.size() && !rows.empty(); }

    int count_label(int value) const {
        int c = 0;
        for (int l : labels) c += (l == value);
        return c;
    }
};

}  // namespace qrcpipe
