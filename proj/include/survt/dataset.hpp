#pragma once

// Tabular cohort ingestion and preparation: CSV loading with explicit missing
// cells, train-fitted preprocessing (z-score + one-hot, missing groups kept as
// all-zero columns with availability=false), survival-time discretization,
// a Weibull proportional-hazards synthetic generator, and stratified folds.

#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "survt/errors.hpp"

namespace survt {

enum class ColumnKind { kContinuous, kCategorical };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  std::vector<std::string> categories;  // categorical only, in first-seen order
};

// Raw cohort: per-cell values with an explicit missing flag, plus survival
// time in months and the event indicator (1 = death observed, 0 = censored).
// Categorical cells store the index into the column's category list.
class CohortTable {
 public:
  std::vector<Column> columns;
  std::vector<double> cells;            // n_rows x n_cols, row-major
  std::vector<std::uint8_t> present;    // 1 = value present
  std::vector<double> survival_months;
  std::vector<int> event;

  std::size_t n_rows() const { return survival_months.size(); }
  std::size_t n_cols() const { return columns.size(); }
  double cell(std::size_t r, std::size_t c) const { return cells[r * n_cols() + c]; }
  bool is_missing(std::size_t r, std::size_t c) const { return !present[r * n_cols() + c]; }
  void set_cell(std::size_t r, std::size_t c, double v, bool available);

  CohortTable subset(std::span<const std::size_t> rows) const;
  void validate() const;  // SchemaError on broken invariants
};

// CSV schema (documented in the README): row 1 = column names, row 2 = kinds
// from {cont, cat, survival_months, event}; empty string = missing; UTF-8,
// comma separator, '.' decimal point. No quoting.
CohortTable load_csv(const std::string& path);
void save_csv(const CohortTable& table, const std::string& path);

// A contiguous block of post-encoding columns belonging to one original
// feature (one column for a continuous feature, one per category otherwise).
struct FeatureGroup {
  std::string name;
  std::size_t begin = 0;
  std::size_t count = 0;
};

struct EncodedCohort {
  std::size_t n_rows = 0;
  std::size_t n_columns = 0;            // post-encoding width d
  int n_bins = 0;                       // T
  double unit_months = 0.0;
  std::vector<double> x;                // n_rows x d; missing cells hold 0
  std::vector<std::uint8_t> available;  // n_rows x d, group-constant
  std::vector<FeatureGroup> groups;
  std::vector<int> time_bin;            // s in [0, T-1]
  std::vector<int> event;

  std::span<const double> row_values(std::size_t r) const {
    return {x.data() + r * n_columns, n_columns};
  }
  std::span<const std::uint8_t> row_available(std::size_t r) const {
    return {available.data() + r * n_columns, n_columns};
  }
};

// Column statistics and encoding map fitted on training rows only; z-score
// statistics use available cells exclusively.
class Preprocessor {
 public:
  struct ColumnStats {
    std::string name;
    ColumnKind kind = ColumnKind::kContinuous;
    double mean = 0.0;
    double stddev = 1.0;
    std::vector<std::string> categories;  // frozen train-observed categories
    std::size_t out_begin = 0;
    std::size_t out_count = 0;
  };

  static Preprocessor fit(const CohortTable& train, double unit_months, double horizon_months);
  EncodedCohort encode(const CohortTable& table) const;

  const std::vector<ColumnStats>& column_stats() const { return cols_; }
  std::size_t out_dim() const { return out_dim_; }
  int n_bins() const { return n_bins_; }
  double unit_months() const { return unit_months_; }
  double horizon_months() const { return horizon_months_; }
  std::vector<FeatureGroup> groups() const;

  // Used by the checkpoint reader; not part of the fitting API.
  static Preprocessor from_parts(std::vector<ColumnStats> cols, double unit_months,
                                 double horizon_months, int n_bins);

 private:
  std::vector<ColumnStats> cols_;
  std::size_t out_dim_ = 0;
  int n_bins_ = 0;
  double unit_months_ = 0.0;
  double horizon_months_ = 0.0;
};

std::tuple<EncodedCohort, EncodedCohort, Preprocessor> fit_apply_preprocessor(
    const CohortTable& train, const CohortTable& eval, double unit_months,
    double horizon_months);

// Synthetic Weibull proportional-hazards cohort. Event times follow
// T = (-ln U / (lambda * exp(eta)))^(1/shape) with eta the linear predictor;
// censoring comes from an independent exponential clock; missingness is
// applied completely at random per original feature.
struct GenFeature {
  enum class Kind { kContinuous, kBinary, kCategorical };
  std::string name;
  Kind kind = Kind::kContinuous;
  int levels = 2;      // categorical only
  double beta = 0.0;   // weight of this feature's score in eta
};

struct GeneratorSpec {
  std::vector<GenFeature> features;
  double weibull_shape = 1.5;
  double baseline_hazard = 0.04;  // lambda, per month
  double censor_rate = 0.01;      // exponential censoring rate per month; 0 = never
  double missing_rate = 0.0;      // MCAR rate per original feature, in [0, 1)
};

CohortTable generate_synthetic(std::size_t n, const GeneratorSpec& spec, std::uint64_t seed);

// The generator's own risk score beta' * score(x) for a row; the ground-truth
// risk ordering used by calibration tests. Missing cells contribute 0.
double true_risk_score(const GeneratorSpec& spec, const CohortTable& table, std::size_t row);

struct FoldSplit {
  std::vector<std::size_t> train, val, test;
};

// Stratified k-fold on the event indicator: test folds partition the cohort
// with per-fold class counts within one of each other; 20% of each training
// portion is held out (stratified) as validation.
std::vector<FoldSplit> stratified_kfold(std::span<const int> event, std::size_t k,
                                        std::uint64_t seed);

}  // namespace survt
