#pragma once

#include <cstdint>
#include <vector>

#include "qrcpipe/dataset.hpp"

namespace qrcpipe {

// Deterministic stand-in for the public credit-card default dataset.
//
// The real file cannot be redistributed or fetched here, so benchmarks and
// regression tests run against a generated dataset that reproduces the
// documented structure of the original: 30000 rows, 54 undocumented
// MARRIAGE=0 rows, 345 undocumented EDUCATION rows (14/280/51 with values
// 0/5/6), 6605 defaulters among the 29601 clean rows, and a feature
// correlation layout that yields the published PCA / feature-cluster
// results (strongly tied BILL_AMT and PAY_AMT blocks, paired PAY_3/PAY_4
// and PAY_5/PAY_6, independent remaining columns).
std::vector<RawRecord> generate_synthetic_dataset(std::uint64_t seed = 20240901ULL,
                                                  std::size_t n_rows = 30000);

}  // namespace qrcpipe
