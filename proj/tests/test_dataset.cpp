#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "survt/dataset.hpp"
#include "survt/metrics.hpp"
#include "survt/rng.hpp"

using namespace survt;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "tmp_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

const char* kSmallCsv =
    "age,sex,ctv,stage,survival_months,event\n"
    "cont,cat,cont,cat,survival_months,event\n"
    "64,M,,III,22.5,1\n"
    "71,F,146.5,IV,8,0\n"
    "58,M,90.25,III,40,1\n";

}  // namespace

TEST_CASE("load_csv parses values, missing cells and outcome columns") {
  const auto path = write_temp("small.csv", kSmallCsv);
  const CohortTable t = load_csv(path);
  CHECK(t.n_rows() == 3);
  CHECK(t.n_cols() == 4);
  CHECK(t.cell(0, 0) == doctest::Approx(64.0));
  CHECK(t.is_missing(0, 2));       // empty CTV
  CHECK_FALSE(t.is_missing(1, 2));
  CHECK(t.survival_months[0] == doctest::Approx(22.5));
  CHECK(t.event[0] == 1);
  CHECK(t.columns[1].categories == std::vector<std::string>{"M", "F"});
  std::remove(path.c_str());
}

TEST_CASE("load_csv rejects malformed inputs with located errors") {
  CHECK_THROWS_AS(load_csv(write_temp("dup.csv", "a,a,survival_months,event\n"
                                                 "cont,cont,survival_months,event\n"
                                                 "1,2,3,1\n")),
                  SchemaError);
  CHECK_THROWS_AS(load_csv(write_temp("empty.csv", "")), SchemaError);
  CHECK_THROWS_AS(load_csv(write_temp("nodata.csv", "a,survival_months,event\n"
                                                    "cont,survival_months,event\n")),
                  SchemaError);
  CHECK_THROWS_AS(load_csv(write_temp("badkind.csv", "a,survival_months,event\n"
                                                     "weird,survival_months,event\n"
                                                     "1,3,1\n")),
                  SchemaError);
  CHECK_THROWS_AS(load_csv(write_temp("negsurv.csv", "a,survival_months,event\n"
                                                     "cont,survival_months,event\n"
                                                     "1,-3,1\n")),
                  SchemaError);
  CHECK_THROWS_AS(load_csv(write_temp("notnum.csv", "a,survival_months,event\n"
                                                    "cont,survival_months,event\n"
                                                    "abc,3,1\n")),
                  SchemaError);
}

TEST_CASE("save/load round trip preserves cells and missingness") {
  const auto path = write_temp("rt_in.csv", kSmallCsv);
  const CohortTable t = load_csv(path);
  save_csv(t, "tmp_rt_out.csv");
  const CohortTable u = load_csv("tmp_rt_out.csv");
  CHECK(u.n_rows() == t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r)
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
      CHECK(u.is_missing(r, c) == t.is_missing(r, c));
      if (!t.is_missing(r, c)) CHECK(u.cell(r, c) == t.cell(r, c));
    }
  std::remove(path.c_str());
  std::remove("tmp_rt_out.csv");
}

TEST_CASE("horizon discretization: 72 months at units 1, 12, 24") {
  const auto path = write_temp("disc.csv", kSmallCsv);
  const CohortTable t = load_csv(path);
  CHECK(Preprocessor::fit(t, 1.0, 72.0).n_bins() == 72);
  CHECK(Preprocessor::fit(t, 12.0, 72.0).n_bins() == 6);
  CHECK(Preprocessor::fit(t, 24.0, 72.0).n_bins() == 3);
  CHECK_THROWS_AS(Preprocessor::fit(t, 7.0, 72.0), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("encode maps survival to bins and censors at the horizon") {
  CohortTable t;
  t.columns = {{"x", ColumnKind::kContinuous, {}}};
  t.cells = {1.0, 2.0, 3.0, 4.0};
  t.present = {1, 1, 1, 1};
  t.survival_months = {30.0, 80.0, 71.9, 72.0};
  t.event = {1, 1, 1, 1};

  const Preprocessor p24 = Preprocessor::fit(t, 24.0, 72.0);
  const EncodedCohort e24 = p24.encode(t);
  CHECK(e24.time_bin[0] == 1);  // floor(30/24)

  const Preprocessor p1 = Preprocessor::fit(t, 1.0, 72.0);
  const EncodedCohort e1 = p1.encode(t);
  CHECK(e1.time_bin[1] == 71);  // survival 80 >= horizon: clamp to last bin...
  CHECK(e1.event[1] == 0);      // ...and treat as censored there
  CHECK(e1.time_bin[2] == 71);
  CHECK(e1.event[2] == 1);      // inside the horizon: event kept
  CHECK(e1.event[3] == 0);      // exactly at the horizon counts as beyond it
}

TEST_CASE("z-scored training columns have mean 0 and variance 1 over available cells") {
  Rng rng(99);
  CohortTable t;
  t.columns = {{"a", ColumnKind::kContinuous, {}}, {"b", ColumnKind::kContinuous, {}}};
  const std::size_t n = 60;
  for (std::size_t i = 0; i < n; ++i) {
    t.cells.push_back(rng.uniform(0.0, 50.0));
    t.cells.push_back(rng.normal() * 3.0 + 7.0);
    t.present.push_back(1);
    t.present.push_back(rng.below(4) ? 1 : 0);  // b has missing cells
    t.survival_months.push_back(rng.uniform(0.0, 60.0));
    t.event.push_back(int(rng.below(2)));
  }
  const Preprocessor pp = Preprocessor::fit(t, 12.0, 72.0);
  const EncodedCohort enc = pp.encode(t);
  for (std::size_t c = 0; c < 2; ++c) {
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (!enc.available[r * enc.n_columns + c]) continue;
      sum += enc.x[r * enc.n_columns + c];
      sq += enc.x[r * enc.n_columns + c] * enc.x[r * enc.n_columns + c];
      ++count;
    }
    const double mean = sum / double(count);
    CHECK(std::fabs(mean) < 1e-10);
    CHECK(std::fabs(sq / double(count) - mean * mean - 1.0) < 1e-10);
  }
}

TEST_CASE("availability is constant across a one-hot group") {
  CohortTable t;
  t.columns = {{"g", ColumnKind::kCategorical, {"a", "b", "c"}},
               {"x", ColumnKind::kContinuous, {}}};
  t.cells = {0, 1.0, 1, 2.0, 2, 3.0, 0, 4.0};
  t.present = {1, 1, 1, 0, 1, 1, 0, 1};  // row 3 has the categorical missing
  t.survival_months = {5, 10, 15, 20};
  t.event = {1, 0, 1, 0};
  const Preprocessor pp = Preprocessor::fit(t, 12.0, 72.0);
  const EncodedCohort enc = pp.encode(t);
  CHECK(enc.n_columns == 4);  // 3 one-hot + 1 continuous
  for (std::size_t r = 0; r < enc.n_rows; ++r) {
    const auto avail = enc.row_available(r);
    CHECK(avail[0] == avail[1]);
    CHECK(avail[1] == avail[2]);
  }
  // Row 3 has the categorical missing: whole group zero and unavailable.
  CHECK(enc.row_available(3)[0] == 0);
  CHECK(enc.row_values(3)[0] == 0.0);
  // Unseen category in eval data is rejected.
  CohortTable eval = t;
  eval.columns[0].categories.push_back("d");
  eval.cells[0] = 3;  // category "d"
  CHECK_THROWS_AS(pp.encode(eval), EncodingError);
}

TEST_CASE("degenerate continuous column is rejected at fit time") {
  CohortTable t;
  t.columns = {{"x", ColumnKind::kContinuous, {}}};
  t.cells = {2.0, 2.0, 2.0};
  t.present = {1, 1, 1};
  t.survival_months = {1, 2, 3};
  t.event = {1, 1, 0};
  CHECK_THROWS_AS(Preprocessor::fit(t, 12.0, 72.0), EncodingError);
}

TEST_CASE("discretization is monotone in survival time") {
  Rng rng(17);
  CohortTable t;
  t.columns = {{"x", ColumnKind::kContinuous, {}}};
  for (int i = 0; i < 200; ++i) {
    t.cells.push_back(rng.normal());
    t.present.push_back(1);
    t.survival_months.push_back(rng.uniform(0.0, 100.0));
    t.event.push_back(int(rng.below(2)));
  }
  const Preprocessor pp = Preprocessor::fit(t, 12.0, 72.0);
  const EncodedCohort enc = pp.encode(t);
  for (std::size_t a = 0; a < t.n_rows(); ++a)
    for (std::size_t b = 0; b < t.n_rows(); ++b)
      if (t.survival_months[a] <= t.survival_months[b])
        CHECK(enc.time_bin[a] <= enc.time_bin[b]);
}

TEST_CASE("generator: no missing cells at rate zero, bit-reproducible under a seed") {
  GeneratorSpec spec;
  spec.features = {{"f0", GenFeature::Kind::kContinuous, 2, 1.0},
                   {"f1", GenFeature::Kind::kCategorical, 3, 0.5},
                   {"f2", GenFeature::Kind::kBinary, 2, -0.7}};
  spec.missing_rate = 0.0;
  const CohortTable a = generate_synthetic(500, spec, 123);
  for (auto p : a.present) CHECK(p == 1);
  const CohortTable b = generate_synthetic(500, spec, 123);
  CHECK(a.cells == b.cells);
  CHECK(a.survival_months == b.survival_months);
  CHECK(a.event == b.event);

  spec.missing_rate = 0.4;
  const CohortTable c = generate_synthetic(2000, spec, 9);
  std::size_t missing = 0;
  for (auto p : c.present) missing += p ? 0 : 1;
  const double rate = double(missing) / double(c.present.size());
  CHECK(rate == doctest::Approx(0.4).epsilon(0.05));

  spec.missing_rate = 1.0;
  CHECK_THROWS_AS(generate_synthetic(10, spec, 1), ConfigError);
}

TEST_CASE("generator censoring fraction matches a large-sample Monte-Carlo oracle") {
  GeneratorSpec spec;
  spec.features = {{"f0", GenFeature::Kind::kContinuous, 2, 1.0},
                   {"f1", GenFeature::Kind::kContinuous, 2, -1.0},
                   {"f2", GenFeature::Kind::kContinuous, 2, 0.5}};
  spec.weibull_shape = 1.4;
  spec.baseline_hazard = 0.03;
  spec.censor_rate = 0.02;
  spec.missing_rate = 0.3;

  // Independent simulation of the same model, 10^6 draws.
  Rng rng(0xC0DE);
  const std::size_t big = 1000000;
  std::size_t events = 0;
  for (std::size_t i = 0; i < big; ++i) {
    const double eta = 1.0 * rng.normal() - 1.0 * rng.normal() + 0.5 * rng.normal();
    const double te = std::pow(-std::log(1.0 - rng.uniform()) /
                                   (spec.baseline_hazard * std::exp(eta)),
                               1.0 / spec.weibull_shape);
    const double tc = -std::log(1.0 - rng.uniform()) / spec.censor_rate;
    events += te <= tc ? 1 : 0;
  }
  const double expected_censored = 1.0 - double(events) / double(big);

  const CohortTable t = generate_synthetic(2000, spec, 31);
  std::size_t censored = 0;
  for (int e : t.event) censored += e == 0 ? 1 : 0;
  const double got = double(censored) / double(t.n_rows());
  CHECK(std::fabs(got - expected_censored) <= 0.03);
}

TEST_CASE("stratified folds keep class balance and partition the cohort") {
  std::vector<int> event(100, 0);
  for (int i = 0; i < 40; ++i) event[std::size_t(i)] = 1;
  const auto folds = stratified_kfold(event, 5, 77);
  std::vector<int> seen(100, 0);
  for (const auto& f : folds) {
    CHECK(f.test.size() == 20);
    std::size_t uncensored = 0;
    for (auto i : f.test) {
      ++seen[i];
      uncensored += event[i] == 1 ? 1 : 0;
    }
    CHECK(uncensored == 8);
    // val is 20% of the 80-patient training portion
    CHECK(f.val.size() == 16);
    CHECK(f.train.size() == 64);
  }
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("stratified folds on 297 patients with 113 uncensored: counts within one") {
  std::vector<int> event(297, 0);
  for (int i = 0; i < 113; ++i) event[std::size_t(i)] = 1;
  const auto folds = stratified_kfold(event, 5, 3);
  for (const auto& f : folds) {
    std::size_t uncensored = 0;
    for (auto i : f.test) uncensored += event[i] == 1 ? 1 : 0;
    CHECK(uncensored >= 22);
    CHECK(uncensored <= 23);
  }
}

TEST_CASE("fit_apply_preprocessor encodes train and eval with train statistics") {
  GeneratorSpec spec;
  spec.features = {{"f0", GenFeature::Kind::kContinuous, 2, 1.0},
                   {"g0", GenFeature::Kind::kCategorical, 3, 0.5}};
  spec.missing_rate = 0.1;
  const CohortTable cohort = generate_synthetic(200, spec, 5);
  std::vector<std::size_t> front, back;
  for (std::size_t i = 0; i < 200; ++i) (i < 150 ? front : back).push_back(i);
  const auto [train_enc, eval_enc, pp] =
      fit_apply_preprocessor(cohort.subset(front), cohort.subset(back), 12.0, 72.0);
  CHECK(train_enc.n_rows == 150);
  CHECK(eval_enc.n_rows == 50);
  CHECK(train_enc.n_columns == eval_enc.n_columns);
  CHECK(pp.n_bins() == 6);
  // Eval encoding must reuse the train mean, not refit it.
  const double mean = pp.column_stats()[0].mean;
  for (std::size_t r = 0; r < 50; ++r) {
    if (!cohort.is_missing(back[r], 0))
      CHECK(eval_enc.x[r * eval_enc.n_columns] ==
            doctest::Approx((cohort.cell(back[r], 0) - mean) / pp.column_stats()[0].stddev));
  }
}

TEST_CASE("no-signal data calibrates the true-model ct-index to one half") {
  GeneratorSpec spec;
  spec.features = {{"f0", GenFeature::Kind::kContinuous, 2, 0.0},
                   {"f1", GenFeature::Kind::kContinuous, 2, 0.0}};
  spec.weibull_shape = 1.5;
  spec.baseline_hazard = 0.03;
  spec.censor_rate = 0.01;
  const CohortTable cohort = generate_synthetic(2000, spec, 71);
  const Preprocessor pp = Preprocessor::fit(cohort, 1.0, 72.0);
  const EncodedCohort enc = pp.encode(cohort);
  // With beta = 0 the outcome is independent of the features, so any
  // feature-based score must land near one half.
  RiskMatrix risks;
  for (std::size_t i = 0; i < enc.n_rows; ++i) {
    risks.cif.push_back({cohort.cell(i, 0) + cohort.cell(i, 1)});
    risks.time_bin.push_back(enc.time_bin[i]);
    risks.event.push_back(enc.event[i]);
  }
  CHECK(std::fabs(ct_index(risks) - 0.5) <= 0.03);
}

TEST_CASE("stratified folds are deterministic and reject tiny classes") {
  std::vector<int> event = {1, 0, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  const auto a = stratified_kfold(event, 5, 5);
  const auto b = stratified_kfold(event, 5, 5);
  for (std::size_t f = 0; f < a.size(); ++f) {
    CHECK(a[f].train == b[f].train);
    CHECK(a[f].val == b[f].val);
    CHECK(a[f].test == b[f].test);
  }
  std::vector<int> few = {1, 1, 0, 0, 0, 0, 0, 0};  // class 1 has 2 < k members
  CHECK_THROWS_AS(stratified_kfold(few, 5, 1), StratifyError);
}
