#pragma once

// Baseline imputers for the comparison pipelines. Both fit on training rows
// only and never touch available cells.
//
// kNN distance between two rows is Euclidean over the original features
// observed in BOTH rows (continuous: squared difference on raw values;
// categorical: 0/1 mismatch), rescaled by sqrt(d / #shared). Ties are broken
// by training-row index. A missing cell takes the unweighted average
// (continuous) or majority vote (categorical) of the k nearest training rows
// that have the cell.

#include <cstdint>
#include <vector>

#include "survt/dataset.hpp"

namespace survt {

enum class ImputeStrategy { kMean, kKnn };

class Imputer {
 public:
  static Imputer fit(ImputeStrategy strategy, const CohortTable& train, int k_neighbors = 5);
  CohortTable transform(const CohortTable& table) const;

  ImputeStrategy strategy() const { return strategy_; }
  int k_neighbors() const { return k_; }

 private:
  ImputeStrategy strategy_ = ImputeStrategy::kMean;
  int k_ = 5;
  std::vector<Column> columns_;
  std::vector<double> fill_;  // per-column mean (continuous) or mode index
  // Retained training matrix for kNN.
  std::vector<double> train_cells_;
  std::vector<std::uint8_t> train_present_;
  std::size_t train_rows_ = 0;
};

}  // namespace survt
