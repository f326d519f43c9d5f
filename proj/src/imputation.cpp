#include "survt/imputation.hpp"

#include <algorithm>
#include <cmath>

namespace survt {

Imputer Imputer::fit(ImputeStrategy strategy, const CohortTable& train, int k_neighbors) {
  if (k_neighbors < 1) throw ConfigError("Imputer::fit: k_neighbors must be >= 1");
  Imputer imp;
  imp.strategy_ = strategy;
  imp.k_ = k_neighbors;
  imp.columns_ = train.columns;
  const std::size_t d = train.n_cols();

  imp.fill_.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t count = 0;
    if (train.columns[c].kind == ColumnKind::kContinuous) {
      double sum = 0.0;
      for (std::size_t r = 0; r < train.n_rows(); ++r)
        if (!train.is_missing(r, c)) {
          sum += train.cell(r, c);
          ++count;
        }
      if (count > 0) imp.fill_[c] = sum / double(count);
    } else {
      std::vector<std::size_t> votes(train.columns[c].categories.size(), 0);
      for (std::size_t r = 0; r < train.n_rows(); ++r)
        if (!train.is_missing(r, c)) {
          ++votes[std::size_t(train.cell(r, c))];
          ++count;
        }
      std::size_t best = 0;
      for (std::size_t k = 1; k < votes.size(); ++k)
        if (votes[k] > votes[best]) best = k;  // ties keep the lower index
      imp.fill_[c] = double(best);
    }
    if (count == 0)
      throw ImputeError("Imputer::fit: column '" + train.columns[c].name +
                        "' has no available training cells");
  }

  if (strategy == ImputeStrategy::kKnn) {
    imp.train_cells_ = train.cells;
    imp.train_present_ = train.present;
    imp.train_rows_ = train.n_rows();
  }
  return imp;
}

CohortTable Imputer::transform(const CohortTable& table) const {
  if (table.n_cols() != columns_.size())
    throw ImputeError("Imputer::transform: column count mismatch with fit");
  const std::size_t d = columns_.size();
  CohortTable out = table;

  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    bool any_missing = false;
    for (std::size_t c = 0; c < d; ++c) any_missing = any_missing || table.is_missing(r, c);
    if (!any_missing) continue;

    if (strategy_ == ImputeStrategy::kMean) {
      for (std::size_t c = 0; c < d; ++c)
        if (table.is_missing(r, c)) out.set_cell(r, c, fill_[c], true);
      continue;
    }

    // kNN: distance to every training row over coordinates present in both.
    std::vector<std::pair<double, std::size_t>> dist;  // (distance, train row)
    dist.reserve(train_rows_);
    bool shares_any = false;
    for (std::size_t tr = 0; tr < train_rows_; ++tr) {
      double sum = 0.0;
      std::size_t shared = 0;
      for (std::size_t c = 0; c < d; ++c) {
        if (table.is_missing(r, c) || !train_present_[tr * d + c]) continue;
        const double a = table.cell(r, c);
        const double b = train_cells_[tr * d + c];
        if (columns_[c].kind == ColumnKind::kContinuous)
          sum += (a - b) * (a - b);
        else
          sum += a == b ? 0.0 : 1.0;
        ++shared;
      }
      if (shared == 0) {
        dist.emplace_back(HUGE_VAL, tr);
        continue;
      }
      shares_any = true;
      dist.emplace_back(std::sqrt(sum * double(d) / double(shared)), tr);
    }
    if (!shares_any)
      throw ImputeError("Imputer::transform: row " + std::to_string(r) +
                        " shares no observed features with any training row");
    std::sort(dist.begin(), dist.end());

    for (std::size_t c = 0; c < d; ++c) {
      if (!table.is_missing(r, c)) continue;
      // k nearest training rows that have this cell.
      std::vector<std::size_t> neighbors;
      for (const auto& [dv, tr] : dist) {
        if (dv == HUGE_VAL) break;
        if (!train_present_[tr * d + c]) continue;
        neighbors.push_back(tr);
        if (neighbors.size() == std::size_t(k_)) break;
      }
      if (neighbors.empty())
        throw ImputeError("Imputer::transform: no comparable training row has column '" +
                          columns_[c].name + "' for row " + std::to_string(r));
      if (columns_[c].kind == ColumnKind::kContinuous) {
        double sum = 0.0;
        for (std::size_t tr : neighbors) sum += train_cells_[tr * d + c];
        out.set_cell(r, c, sum / double(neighbors.size()), true);
      } else {
        std::vector<std::size_t> votes(columns_[c].categories.size(), 0);
        for (std::size_t tr : neighbors) ++votes[std::size_t(train_cells_[tr * d + c])];
        std::size_t best = 0;
        for (std::size_t k = 1; k < votes.size(); ++k)
          if (votes[k] > votes[best]) best = k;
        out.set_cell(r, c, double(best), true);
      }
    }
  }
  return out;
}

}  // namespace survt
