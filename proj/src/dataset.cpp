#include "survt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "survt/rng.hpp"

namespace survt {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, std::size_t row, const std::string& col) {
  std::size_t consumed = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (consumed != s.size() || s.empty())
    throw SchemaError("load_csv: row " + std::to_string(row) + " column '" + col +
                      "': '" + s + "' is not numeric");
  return v;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void CohortTable::set_cell(std::size_t r, std::size_t c, double v, bool available) {
  cells[r * n_cols() + c] = v;
  present[r * n_cols() + c] = available ? 1 : 0;
}

CohortTable CohortTable::subset(std::span<const std::size_t> rows) const {
  CohortTable out;
  out.columns = columns;
  out.cells.reserve(rows.size() * n_cols());
  out.present.reserve(rows.size() * n_cols());
  for (std::size_t r : rows) {
    for (std::size_t c = 0; c < n_cols(); ++c) {
      out.cells.push_back(cell(r, c));
      out.present.push_back(present[r * n_cols() + c]);
    }
    out.survival_months.push_back(survival_months[r]);
    out.event.push_back(event[r]);
  }
  return out;
}

void CohortTable::validate() const {
  if (cells.size() != n_rows() * n_cols() || present.size() != cells.size() ||
      event.size() != n_rows())
    throw SchemaError("CohortTable: inconsistent storage sizes");
  for (std::size_t r = 0; r < n_rows(); ++r) {
    if (survival_months[r] < 0.0)
      throw SchemaError("CohortTable: negative survival at row " + std::to_string(r));
    if (event[r] != 0 && event[r] != 1)
      throw SchemaError("CohortTable: event must be 0 or 1 at row " + std::to_string(r));
  }
}

CohortTable load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("load_csv: cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < 2) throw SchemaError("load_csv: '" + path + "' has no header rows");

  const auto names = split_line(lines[0]);
  const auto kinds = split_line(lines[1]);
  if (names.size() != kinds.size())
    throw SchemaError("load_csv: header rows disagree on column count");

  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      if (names[i] == names[j])
        throw SchemaError("load_csv: duplicate column name '" + names[i] + "'");

  CohortTable table;
  std::vector<int> roles;  // 0 feature-cont, 1 feature-cat, 2 survival, 3 event
  int survival_col = -1, event_col = -1;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] == "cont") {
      roles.push_back(0);
      table.columns.push_back({names[i], ColumnKind::kContinuous, {}});
    } else if (kinds[i] == "cat") {
      roles.push_back(1);
      table.columns.push_back({names[i], ColumnKind::kCategorical, {}});
    } else if (kinds[i] == "survival_months") {
      if (survival_col >= 0) throw SchemaError("load_csv: two survival_months columns");
      survival_col = int(i);
      roles.push_back(2);
    } else if (kinds[i] == "event") {
      if (event_col >= 0) throw SchemaError("load_csv: two event columns");
      event_col = int(i);
      roles.push_back(3);
    } else {
      throw SchemaError("load_csv: unknown column kind '" + kinds[i] + "' for '" +
                        names[i] + "'");
    }
  }
  if (survival_col < 0 || event_col < 0)
    throw SchemaError("load_csv: survival_months and event columns are required");
  if (table.columns.empty()) throw SchemaError("load_csv: no feature columns");
  if (lines.size() == 2) throw SchemaError("load_csv: no data rows");

  for (std::size_t li = 2; li < lines.size(); ++li) {
    const auto fields = split_line(lines[li]);
    if (fields.size() != names.size())
      throw SchemaError("load_csv: row " + std::to_string(li - 1) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(names.size()));
    const std::size_t row = table.survival_months.size();
    std::size_t feature_idx = 0;
    double surv = 0.0;
    int ev = 0;
    std::vector<double> row_cells(table.columns.size(), 0.0);
    std::vector<std::uint8_t> row_present(table.columns.size(), 0);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string& f = fields[i];
      switch (roles[i]) {
        case 0:
          if (!f.empty()) {
            row_cells[feature_idx] = parse_number(f, row + 1, names[i]);
            row_present[feature_idx] = 1;
          }
          ++feature_idx;
          break;
        case 1:
          if (!f.empty()) {
            auto& cats = table.columns[feature_idx].categories;
            auto it = std::find(cats.begin(), cats.end(), f);
            if (it == cats.end()) {
              cats.push_back(f);
              it = cats.end() - 1;
            }
            row_cells[feature_idx] = double(it - cats.begin());
            row_present[feature_idx] = 1;
          }
          ++feature_idx;
          break;
        case 2:
          surv = parse_number(f, row + 1, names[i]);
          if (surv < 0.0)
            throw SchemaError("load_csv: row " + std::to_string(row + 1) +
                              ": negative survival_months");
          break;
        case 3: {
          const double e = parse_number(f, row + 1, names[i]);
          if (e != 0.0 && e != 1.0)
            throw SchemaError("load_csv: row " + std::to_string(row + 1) +
                              ": event must be 0 or 1");
          ev = int(e);
          break;
        }
      }
    }
    table.cells.insert(table.cells.end(), row_cells.begin(), row_cells.end());
    table.present.insert(table.present.end(), row_present.begin(), row_present.end());
    table.survival_months.push_back(surv);
    table.event.push_back(ev);
  }
  table.validate();
  return table;
}

void save_csv(const CohortTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("save_csv: cannot open '" + path + "' for writing");
  for (const auto& col : table.columns) out << col.name << ",";
  out << "survival_months,event\n";
  for (const auto& col : table.columns)
    out << (col.kind == ColumnKind::kContinuous ? "cont" : "cat") << ",";
  out << "survival_months,event\n";
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      if (!table.is_missing(r, c)) {
        if (table.columns[c].kind == ColumnKind::kContinuous)
          out << format_double(table.cell(r, c));
        else
          out << table.columns[c].categories[std::size_t(table.cell(r, c))];
      }
      out << ",";
    }
    out << format_double(table.survival_months[r]) << "," << table.event[r] << "\n";
  }
}

Preprocessor Preprocessor::fit(const CohortTable& train, double unit_months,
                               double horizon_months) {
  if (unit_months <= 0.0) throw ConfigError("Preprocessor::fit: unit_months must be positive");
  const double ratio = horizon_months / unit_months;
  if (ratio < 2.0 || std::fabs(ratio - std::llround(ratio)) > 1e-9)
    throw ConfigError("Preprocessor::fit: unit_months must divide horizon_months with >= 2 bins");
  if (train.n_rows() == 0) throw SchemaError("Preprocessor::fit: empty training cohort");

  Preprocessor pp;
  pp.unit_months_ = unit_months;
  pp.horizon_months_ = horizon_months;
  pp.n_bins_ = int(std::llround(ratio));

  std::size_t offset = 0;
  for (std::size_t c = 0; c < train.n_cols(); ++c) {
    ColumnStats st;
    st.name = train.columns[c].name;
    st.kind = train.columns[c].kind;
    st.out_begin = offset;
    if (st.kind == ColumnKind::kContinuous) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t r = 0; r < train.n_rows(); ++r)
        if (!train.is_missing(r, c)) {
          sum += train.cell(r, c);
          ++count;
        }
      if (count == 0)
        throw EncodingError("Preprocessor::fit: column '" + st.name +
                            "' has no available training cells");
      st.mean = sum / double(count);
      double ss = 0.0;
      for (std::size_t r = 0; r < train.n_rows(); ++r)
        if (!train.is_missing(r, c)) {
          const double d = train.cell(r, c) - st.mean;
          ss += d * d;
        }
      st.stddev = std::sqrt(ss / double(count));
      if (st.stddev < 1e-12)
        throw EncodingError("Preprocessor::fit: degenerate column '" + st.name +
                            "' (zero variance)");
      st.out_count = 1;
    } else {
      // Frozen map = train-observed categories, in the column's declared order
      // so the encoding does not depend on row order.
      std::vector<std::uint8_t> seen(train.columns[c].categories.size(), 0);
      std::size_t count = 0;
      for (std::size_t r = 0; r < train.n_rows(); ++r)
        if (!train.is_missing(r, c)) {
          seen[std::size_t(train.cell(r, c))] = 1;
          ++count;
        }
      if (count == 0)
        throw EncodingError("Preprocessor::fit: column '" + st.name +
                            "' has no available training cells");
      for (std::size_t k = 0; k < seen.size(); ++k)
        if (seen[k]) st.categories.push_back(train.columns[c].categories[k]);
      st.out_count = st.categories.size();
    }
    offset += st.out_count;
    pp.cols_.push_back(std::move(st));
  }
  pp.out_dim_ = offset;
  return pp;
}

std::vector<FeatureGroup> Preprocessor::groups() const {
  std::vector<FeatureGroup> g;
  g.reserve(cols_.size());
  for (const auto& c : cols_) g.push_back({c.name, c.out_begin, c.out_count});
  return g;
}

EncodedCohort Preprocessor::encode(const CohortTable& table) const {
  if (table.n_cols() != cols_.size())
    throw EncodingError("Preprocessor::encode: column count mismatch");
  EncodedCohort enc;
  enc.n_rows = table.n_rows();
  enc.n_columns = out_dim_;
  enc.n_bins = n_bins_;
  enc.unit_months = unit_months_;
  enc.groups = groups();
  enc.x.assign(enc.n_rows * out_dim_, 0.0);
  enc.available.assign(enc.n_rows * out_dim_, 0);
  enc.time_bin.resize(enc.n_rows);
  enc.event.resize(enc.n_rows);

  for (std::size_t r = 0; r < enc.n_rows; ++r) {
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      const auto& st = cols_[c];
      if (st.name != table.columns[c].name)
        throw EncodingError("Preprocessor::encode: column '" + table.columns[c].name +
                            "' does not match fitted column '" + st.name + "'");
      if (table.is_missing(r, c)) continue;  // zeros + availability false
      double* out = enc.x.data() + r * out_dim_ + st.out_begin;
      std::uint8_t* avail = enc.available.data() + r * out_dim_ + st.out_begin;
      if (st.kind == ColumnKind::kContinuous) {
        out[0] = (table.cell(r, c) - st.mean) / st.stddev;
        avail[0] = 1;
      } else {
        const auto& label = table.columns[c].categories[std::size_t(table.cell(r, c))];
        auto it = std::find(st.categories.begin(), st.categories.end(), label);
        if (it == st.categories.end())
          throw EncodingError("Preprocessor::encode: category '" + label +
                              "' of column '" + st.name + "' was not seen in training");
        out[std::size_t(it - st.categories.begin())] = 1.0;
        for (std::size_t k = 0; k < st.out_count; ++k) avail[k] = 1;
      }
    }
    const double surv = table.survival_months[r];
    if (surv >= horizon_months_) {
      enc.time_bin[r] = n_bins_ - 1;
      enc.event[r] = 0;  // censored at the horizon
    } else {
      int s = int(std::floor(surv / unit_months_));
      if (s > n_bins_ - 1) s = n_bins_ - 1;
      enc.time_bin[r] = s;
      enc.event[r] = table.event[r];
    }
  }
  return enc;
}

Preprocessor Preprocessor::from_parts(std::vector<ColumnStats> cols, double unit_months,
                                      double horizon_months, int n_bins) {
  Preprocessor pp;
  pp.cols_ = std::move(cols);
  pp.unit_months_ = unit_months;
  pp.horizon_months_ = horizon_months;
  pp.n_bins_ = n_bins;
  pp.out_dim_ = 0;
  for (const auto& c : pp.cols_) pp.out_dim_ += c.out_count;
  return pp;
}

std::tuple<EncodedCohort, EncodedCohort, Preprocessor> fit_apply_preprocessor(
    const CohortTable& train, const CohortTable& eval, double unit_months,
    double horizon_months) {
  Preprocessor pp = Preprocessor::fit(train, unit_months, horizon_months);
  return {pp.encode(train), pp.encode(eval), std::move(pp)};
}

CohortTable generate_synthetic(std::size_t n, const GeneratorSpec& spec, std::uint64_t seed) {
  if (n < 1) throw ConfigError("generate_synthetic: n must be >= 1");
  if (spec.features.empty()) throw ConfigError("generate_synthetic: no features");
  if (spec.missing_rate < 0.0 || spec.missing_rate >= 1.0)
    throw ConfigError("generate_synthetic: missing_rate must lie in [0, 1)");
  if (spec.weibull_shape <= 0.0 || spec.baseline_hazard <= 0.0)
    throw ConfigError("generate_synthetic: weibull_shape and baseline_hazard must be positive");
  if (spec.censor_rate < 0.0) throw ConfigError("generate_synthetic: censor_rate must be >= 0");
  for (const auto& f : spec.features)
    if (f.kind == GenFeature::Kind::kCategorical && f.levels < 2)
      throw ConfigError("generate_synthetic: categorical feature '" + f.name +
                        "' needs >= 2 levels");

  CohortTable table;
  for (const auto& f : spec.features) {
    Column col;
    col.name = f.name;
    if (f.kind == GenFeature::Kind::kCategorical) {
      col.kind = ColumnKind::kCategorical;
      for (int l = 0; l < f.levels; ++l) col.categories.push_back("L" + std::to_string(l));
    } else {
      col.kind = ColumnKind::kContinuous;
    }
    table.columns.push_back(std::move(col));
  }

  Rng rng(seed);
  const std::size_t d = spec.features.size();
  table.cells.assign(n * d, 0.0);
  table.present.assign(n * d, 1);
  table.survival_months.resize(n);
  table.event.resize(n);

  // Fixed draw order per patient: feature values, survival uniform, censor
  // uniform, then one missingness coin per feature.
  for (std::size_t r = 0; r < n; ++r) {
    double eta = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const auto& f = spec.features[c];
      double value = 0.0, score = 0.0;
      switch (f.kind) {
        case GenFeature::Kind::kContinuous:
          value = rng.normal();
          score = value;
          break;
        case GenFeature::Kind::kBinary:
          value = double(rng.below(2));
          score = value;
          break;
        case GenFeature::Kind::kCategorical: {
          const double level = double(rng.below(std::uint64_t(f.levels)));
          value = level;
          score = level - 0.5 * double(f.levels - 1);  // centered level score
          break;
        }
      }
      table.cells[r * d + c] = value;
      eta += f.beta * score;
    }
    const double u_surv = rng.uniform();
    const double u_cens = rng.uniform();
    const double event_time = std::pow(-std::log(1.0 - u_surv) /
                                           (spec.baseline_hazard * std::exp(eta)),
                                       1.0 / spec.weibull_shape);
    const double censor_time =
        spec.censor_rate > 0.0 ? -std::log(1.0 - u_cens) / spec.censor_rate : HUGE_VAL;
    table.survival_months[r] = std::min(event_time, censor_time);
    table.event[r] = event_time <= censor_time ? 1 : 0;
    for (std::size_t c = 0; c < d; ++c)
      if (spec.missing_rate > 0.0 && rng.uniform() < spec.missing_rate)
        table.present[r * d + c] = 0;
  }
  return table;
}

double true_risk_score(const GeneratorSpec& spec, const CohortTable& table, std::size_t row) {
  double eta = 0.0;
  for (std::size_t c = 0; c < spec.features.size(); ++c) {
    if (table.is_missing(row, c)) continue;
    const auto& f = spec.features[c];
    const double v = table.cell(row, c);
    eta += f.beta * (f.kind == GenFeature::Kind::kCategorical
                         ? v - 0.5 * double(f.levels - 1)
                         : v);
  }
  return eta;
}

std::vector<FoldSplit> stratified_kfold(std::span<const int> event, std::size_t k,
                                        std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_kfold: k must be >= 2");
  std::vector<std::size_t> classes[2];
  for (std::size_t i = 0; i < event.size(); ++i) {
    if (event[i] != 0 && event[i] != 1)
      throw StratifyError("stratified_kfold: event indicator must be 0 or 1");
    classes[event[i]].push_back(i);
  }
  for (int cls = 0; cls < 2; ++cls)
    if (classes[cls].size() < k)
      throw StratifyError("stratified_kfold: event class " + std::to_string(cls) +
                          " has " + std::to_string(classes[cls].size()) +
                          " members, fewer than k=" + std::to_string(k));

  std::vector<std::size_t> shuffled[2];
  for (int cls = 0; cls < 2; ++cls) {
    shuffled[cls] = classes[cls];
    Rng rng(derive_seed(seed, 0x10 + std::uint64_t(cls)));
    rng.shuffle(shuffled[cls]);
  }

  std::vector<FoldSplit> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> trainval[2];
    for (int cls = 0; cls < 2; ++cls) {
      for (std::size_t i = 0; i < shuffled[cls].size(); ++i) {
        if (i % k == f)
          folds[f].test.push_back(shuffled[cls][i]);
        else
          trainval[cls].push_back(shuffled[cls][i]);
      }
    }
    // 20% of the training portion, stratified, becomes the validation set.
    for (int cls = 0; cls < 2; ++cls) {
      Rng rng(derive_seed(seed, 0x100 + f * 4 + std::uint64_t(cls)));
      rng.shuffle(trainval[cls]);
      std::size_t n_val = std::size_t(std::llround(0.2 * double(trainval[cls].size())));
      if (n_val >= trainval[cls].size() && n_val > 0) n_val = trainval[cls].size() - 1;
      for (std::size_t i = 0; i < trainval[cls].size(); ++i)
        (i < n_val ? folds[f].val : folds[f].train).push_back(trainval[cls][i]);
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
    std::sort(folds[f].val.begin(), folds[f].val.end());
    std::sort(folds[f].test.begin(), folds[f].test.end());
  }
  return folds;
}

}  // namespace survt
