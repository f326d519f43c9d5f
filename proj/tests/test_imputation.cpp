#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "survt/imputation.hpp"
#include "survt/rng.hpp"

using namespace survt;

namespace {

CohortTable mixed_table() {
  CohortTable t;
  t.columns = {{"a", ColumnKind::kContinuous, {}},
               {"b", ColumnKind::kContinuous, {}},
               {"g", ColumnKind::kCategorical, {"A", "B"}}};
  // 6 rows, one missing value in column b at row 0, one missing categorical.
  t.cells = {1.0, 0.0, 0,
             2.0, 4.0, 0,
             3.0, 6.0, 1,
             4.0, 8.0, 0,
             5.0, 10.0, 1,
             6.0, 12.0, 0};
  t.present = {1, 0, 1,
               1, 1, 1,
               1, 1, 1,
               1, 1, 1,
               1, 1, 0,
               1, 1, 1};
  t.survival_months = {5, 10, 15, 20, 25, 30};
  t.event = {1, 0, 1, 0, 1, 0};
  return t;
}

}  // namespace

TEST_CASE("mean imputer stores column means and category modes") {
  CohortTable t;
  t.columns = {{"x", ColumnKind::kContinuous, {}}, {"g", ColumnKind::kCategorical, {"A", "B"}}};
  t.cells = {1.0, 0, 0.0, 0, 3.0, 0, 2.0, 1};
  t.present = {1, 1, 0, 1, 1, 0, 1, 1};
  t.survival_months = {1, 2, 3, 4};
  t.event = {1, 1, 0, 0};
  const Imputer imp = Imputer::fit(ImputeStrategy::kMean, t);
  CHECK(imp.k_neighbors() == 5);  // default carried even for the mean strategy
  const CohortTable out = imp.transform(t);
  CHECK(out.cell(1, 0) == doctest::Approx(2.0));  // mean of {1,3,2}
  CHECK(out.cell(2, 1) == 0.0);                   // mode "A"
  for (std::size_t r = 0; r < out.n_rows(); ++r)
    for (std::size_t c = 0; c < out.n_cols(); ++c) CHECK_FALSE(out.is_missing(r, c));
}

TEST_CASE("transform is the identity on complete tables and preserves available cells") {
  const CohortTable t = mixed_table();
  const Imputer imp = Imputer::fit(ImputeStrategy::kKnn, t, 2);
  const CohortTable out = imp.transform(t);
  for (std::size_t r = 0; r < t.n_rows(); ++r)
    for (std::size_t c = 0; c < t.n_cols(); ++c)
      if (!t.is_missing(r, c)) CHECK(out.cell(r, c) == t.cell(r, c));

  // Idempotence: a second transform changes nothing.
  const CohortTable again = imp.transform(out);
  CHECK(again.cells == out.cells);
  CHECK(again.present == out.present);
}

TEST_CASE("knn imputation matches the brute-force nearest-neighbor oracle") {
  const CohortTable t = mixed_table();
  const Imputer imp = Imputer::fit(ImputeStrategy::kKnn, t, 2);
  const CohortTable out = imp.transform(t);

  std::vector<std::vector<double>> train;
  std::vector<std::vector<bool>> present;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    train.push_back({t.cell(r, 0), t.cell(r, 1), t.cell(r, 2)});
    present.push_back({!t.is_missing(r, 0), !t.is_missing(r, 1), !t.is_missing(r, 2)});
  }
  const double expected = oracle::knn_impute_continuous(
      train, present, {true, true, false}, train[0], present[0], 1, 2);
  CHECK(out.cell(0, 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("knn with k >= n_train equals the column mean over rows having the cell") {
  const CohortTable t = mixed_table();
  const Imputer knn = Imputer::fit(ImputeStrategy::kKnn, t, 100);
  const CohortTable out = knn.transform(t);
  double mean = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < t.n_rows(); ++r)
    if (!t.is_missing(r, 1)) {
      mean += t.cell(r, 1);
      ++n;
    }
  mean /= double(n);
  CHECK(out.cell(0, 1) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("mean imputation keeps the training column mean fixed") {
  const CohortTable t = mixed_table();
  const Imputer imp = Imputer::fit(ImputeStrategy::kMean, t);
  const CohortTable out = imp.transform(t);
  double before = 0.0, after = 0.0;
  std::size_t n_before = 0;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    if (!t.is_missing(r, 1)) {
      before += t.cell(r, 1);
      ++n_before;
    }
    after += out.cell(r, 1);
  }
  CHECK(after / double(t.n_rows()) == doctest::Approx(before / double(n_before)));
}

TEST_CASE("a fully missing training column cannot be fitted") {
  CohortTable t;
  t.columns = {{"x", ColumnKind::kContinuous, {}}};
  t.cells = {0.0, 0.0};
  t.present = {0, 0};
  t.survival_months = {1, 2};
  t.event = {1, 0};
  CHECK_THROWS_AS(Imputer::fit(ImputeStrategy::kMean, t), ImputeError);
  CHECK_THROWS_AS(Imputer::fit(ImputeStrategy::kKnn, t), ImputeError);
}

TEST_CASE("a row sharing no observed coordinates with training data is an error") {
  CohortTable train;
  train.columns = {{"a", ColumnKind::kContinuous, {}}, {"b", ColumnKind::kContinuous, {}}};
  train.cells = {1.0, 0.0, 2.0, 0.0};
  train.present = {1, 0, 1, 0};  // only column a ever observed... b unfittable
  train.survival_months = {1, 2};
  train.event = {1, 0};
  CHECK_THROWS_AS(Imputer::fit(ImputeStrategy::kKnn, train), ImputeError);

  // Make b observed once so the fit passes, then query a row observing only b
  // where that one training row lacks it: no shared coordinate remains.
  train.present = {1, 0, 0, 1};
  train.cells = {1.0, 0.0, 0.0, 3.0};
  const Imputer imp = Imputer::fit(ImputeStrategy::kKnn, train, 1);
  CohortTable probe;
  probe.columns = train.columns;
  probe.cells = {0.0, 5.0};
  probe.present = {0, 1};
  probe.survival_months = {4};
  probe.event = {1};
  // Row 0 of probe shares b with training row 1 only; imputing a needs row 0,
  // which shares nothing; the transform must refuse rather than guess.
  CHECK_THROWS_AS(imp.transform(probe), ImputeError);
}
