#include "survt/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "survt/cox.hpp"
#include "survt/imputation.hpp"
#include "survt/metrics.hpp"
#include "survt/mlp.hpp"
#include "survt/rng.hpp"

namespace survt {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
  if (lr < 0.0) throw ConfigError("trainer: lr must be >= 0");
  if (max_epochs < 1) throw ConfigError("trainer: max_epochs must be >= 1");
  if (early_stop_patience < 1 || early_stop_patience >= max_epochs)
    throw ConfigError("trainer: early_stop_patience must lie in [1, max_epochs)");
  if (lr_patience < 1 || lr_patience >= max_epochs)
    throw ConfigError("trainer: lr_patience must lie in [1, max_epochs)");
  if (lr_decay <= 0.0 || lr_decay > 1.0) throw ConfigError("trainer: lr_decay must lie in (0, 1]");
  if (w1 < 0.0 || w2 < 0.0) throw ConfigError("trainer: loss weights must be >= 0");
  if (w1 == 0.0 && w2 == 0.0) throw ConfigError("trainer: both loss weights are zero");
  if (rank_sigma <= 0.0) throw ConfigError("trainer: rank_sigma must be positive");
}

void ExperimentConfig::validate() const {
  trainer.validate();
  if (k_folds < 2) throw ConfigError("experiment: k_folds must be >= 2");
  if (time_units_months.empty()) throw ConfigError("experiment: no time units configured");
  if (pipelines.empty()) throw ConfigError("experiment: no pipelines configured");
  if (jobs < 1) throw ConfigError("experiment: jobs must be >= 1");
  for (const auto& p : pipelines) {
    if (p.model != "transformer" && p.model != "mlp" && p.model != "cox")
      throw ConfigError("experiment: unknown model '" + p.model + "'");
    if (p.imputer != "none" && p.imputer != "mean" && p.imputer != "knn")
      throw ConfigError("experiment: unknown imputer '" + p.imputer + "'");
    if (p.model != "transformer" && p.imputer == "none")
      throw ConfigError("experiment: " + p.model + " needs an imputer");
  }
}

namespace {

struct Adam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int t = 0;
  std::vector<Tensor> m, v;

  explicit Adam(const std::vector<NamedTensor>& params) {
    for (const auto& p : params) {
      m.push_back(Tensor::zeros(p.value.shape));
      v.push_back(Tensor::zeros(p.value.shape));
    }
  }

  void step(std::vector<NamedTensor>& params, const std::vector<const Tensor*>& grads,
            double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& theta = params[i].value.data;
      const auto& g = grads[i]->data;
      for (std::size_t j = 0; j < theta.size(); ++j) {
        m[i].data[j] = beta1 * m[i].data[j] + (1.0 - beta1) * g[j];
        v[i].data[j] = beta2 * v[i].data[j] + (1.0 - beta2) * g[j] * g[j];
        theta[j] -= lr * (m[i].data[j] / c1) / (std::sqrt(v[i].data[j] / c2) + eps);
      }
    }
  }
};

bool has_available_feature(const EncodedCohort& c, std::size_t row) {
  for (auto a : c.row_available(row))
    if (a) return true;
  return false;
}

bool has_acceptable_pair(std::span<const int> bins, std::span<const int> events,
                         std::span<const std::size_t> rows) {
  for (std::size_t i : rows) {
    if (events[i] != 1) continue;
    for (std::size_t j : rows)
      if (j != i && bins[j] > bins[i]) return true;
  }
  return false;
}

struct ValLoss {
  double total = 0.0, l1 = 0.0, l2 = 0.0;
};

ValLoss evaluate_set(const HazardNet& model, const std::vector<EncodedSample>& samples,
                     const std::vector<int>& bins, const std::vector<int>& events,
                     const TrainConfig& cfg) {
  std::vector<std::vector<double>> hazards;
  hazards.reserve(samples.size());
  for (const auto& s : samples) hazards.push_back(model.predict(s).y);
  const LossBatch batch = LossBatch::from_hazards(std::move(hazards), bins, events);
  ValLoss out;
  out.l1 = loss_l1(batch);
  out.l2 = loss_l2(batch, cfg.rank_sigma);
  out.total = cfg.w1 * out.l1 + cfg.w2 * out.l2;
  return out;
}

}  // namespace

TrainResult train(HazardNet& model, const EncodedCohort& train_set,
                  const EncodedCohort& val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.n_rows == 0 || val_set.n_rows == 0)
    throw ConfigError("train: empty training or validation set");

  // Patients with every feature missing cannot be scored; they are dropped
  // here and reported as unpredictable by the fold harness.
  std::vector<std::size_t> train_rows, val_rows;
  for (std::size_t r = 0; r < train_set.n_rows; ++r)
    if (has_available_feature(train_set, r)) train_rows.push_back(r);
  for (std::size_t r = 0; r < val_set.n_rows; ++r)
    if (has_available_feature(val_set, r)) val_rows.push_back(r);
  if (train_rows.empty() || val_rows.empty())
    throw ConfigError("train: no usable patients after dropping all-missing rows");
  if (cfg.w1 == 0.0 && !has_acceptable_pair(train_set.time_bin, train_set.event, train_rows))
    throw ConfigError("train: ranking-only loss (w1=0) needs at least one acceptable pair "
                      "in the training set");

  std::vector<EncodedSample> train_samples, val_samples;
  std::vector<int> train_bins, train_events, val_bins, val_events;
  for (std::size_t r : train_rows) {
    train_samples.push_back(embed_tokens(train_set, r));
    train_bins.push_back(train_set.time_bin[r]);
    train_events.push_back(train_set.event[r]);
  }
  for (std::size_t r : val_rows) {
    val_samples.push_back(embed_tokens(val_set, r));
    val_bins.push_back(val_set.time_bin[r]);
    val_events.push_back(val_set.event[r]);
  }

  auto& params = model.params();
  Adam adam(params);
  Rng rng(derive_seed(cfg.seed, 0x7274));
  Tape tape;

  TrainResult result;
  double lr = cfg.lr;
  double best_val = HUGE_VAL;
  std::vector<Tensor> best_params;
  int epochs_since_best = 0, epochs_since_lr = 0;

  std::vector<std::size_t> order(train_samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
      tape.reset();
      std::vector<Tape::NodeId> param_nodes;
      param_nodes.reserve(params.size());
      for (const auto& p : params) param_nodes.push_back(tape.param(p.value));

      std::vector<Tape::NodeId> ys;
      std::vector<int> bins, events;
      for (std::size_t q = start; q < end; ++q) {
        const std::size_t i = order[q];
        ys.push_back(model.build_forward(tape, param_nodes, train_samples[i]));
        bins.push_back(train_bins[i]);
        events.push_back(train_events[i]);
      }
      const Tape::NodeId loss =
          build_total_loss(tape, ys, bins, events, cfg.w1, cfg.w2, cfg.rank_sigma);
      const double loss_value = tape.value(loss).data[0];
      if (!std::isfinite(loss_value))
        throw ConvergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(n_batches));
      tape.backward(loss);
      std::vector<const Tensor*> grads;
      grads.reserve(param_nodes.size());
      for (auto id : param_nodes) grads.push_back(&tape.grad(id));
      adam.step(params, grads, lr);
      epoch_loss += loss_value;
      ++n_batches;
    }
    result.train_loss.push_back(epoch_loss / double(n_batches));
    result.lr_trace.push_back(lr);

    const ValLoss val = evaluate_set(model, val_samples, val_bins, val_events, cfg);
    result.val_loss.push_back(val.total);
    result.epochs_run = epoch + 1;

    if (val.total < best_val - cfg.improve_tol) {
      best_val = val.total;
      result.best_epoch = epoch;
      best_params.clear();
      for (const auto& p : params) best_params.push_back(p.value);
      epochs_since_best = 0;
      epochs_since_lr = 0;
    } else {
      ++epochs_since_best;
      ++epochs_since_lr;
      if (epochs_since_lr >= cfg.lr_patience) {
        lr *= cfg.lr_decay;
        epochs_since_lr = 0;
      }
      if (epochs_since_best >= cfg.early_stop_patience) break;
    }
  }

  if (result.best_epoch < 0) {  // no epoch improved on +inf: keep the last state
    result.best_epoch = result.epochs_run - 1;
    best_val = result.val_loss.empty() ? 0.0 : result.val_loss.back();
  } else {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].value = best_params[i];
  }
  result.best_val = best_val;
  const ValLoss at_best = evaluate_set(model, val_samples, val_bins, val_events, cfg);
  result.val_l1_at_best = at_best.l1;
  result.val_l2_at_best = at_best.l2;
  return result;
}

double predicted_event_months(std::span<const double> hazard, double unit_months) {
  std::size_t arg = 0;
  for (std::size_t t = 1; t < hazard.size(); ++t)
    if (hazard[t] > hazard[arg]) arg = t;
  return unit_months * (double(arg) + 0.5);
}

namespace {

std::vector<ErrorByBinRow> error_by_bin(const std::vector<std::vector<double>>& hazards,
                                        const std::vector<int>& bins,
                                        const std::vector<int>& events, int n_bins,
                                        double unit_months) {
  std::vector<std::vector<double>> abs_errors(static_cast<std::size_t>(n_bins));
  for (std::size_t i = 0; i < hazards.size(); ++i) {
    if (events[i] != 1) continue;  // no valid target for censored patients
    const double truth = unit_months * (double(bins[i]) + 0.5);
    const double pred = predicted_event_months(hazards[i], unit_months);
    abs_errors[std::size_t(bins[i])].push_back(std::fabs(pred - truth));
  }
  std::vector<ErrorByBinRow> rows;
  for (int b = 0; b < n_bins; ++b) {
    const auto& errs = abs_errors[std::size_t(b)];
    if (errs.empty()) continue;
    ErrorByBinRow row;
    row.bin = b;
    row.count = int(errs.size());
    double mean = 0.0;
    for (double e : errs) mean += e;
    mean /= double(errs.size());
    double ss = 0.0;
    for (double e : errs) ss += (e - mean) * (e - mean);
    row.mean_abs_error_months = mean;
    row.stderr_months =
        errs.size() > 1 ? std::sqrt(ss / double(errs.size() - 1) / double(errs.size())) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

struct FoldTask {
  std::size_t unit_idx = 0;
  std::size_t fold_idx = 0;
};

std::uint64_t hash_indices(const std::vector<std::size_t>& idx) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t v : idx) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// Rows with every feature missing carry no usable signal: no model can score
// them and the kNN imputer has no shared coordinates. They are dropped from
// fitting and counted as unpredictable on the test side.
CohortTable usable_subset(const CohortTable& cohort, const std::vector<std::size_t>& rows,
                          std::size_t& dropped) {
  std::vector<std::size_t> keep;
  keep.reserve(rows.size());
  for (std::size_t r : rows) {
    bool any = false;
    for (std::size_t c = 0; c < cohort.n_cols(); ++c)
      any = any || !cohort.is_missing(r, c);
    if (any)
      keep.push_back(r);
    else
      ++dropped;
  }
  return cohort.subset(keep);
}

std::vector<FoldReport> run_fold(const CohortTable& cohort, const ExperimentConfig& cfg,
                                 const std::vector<FoldSplit>& folds, const FoldTask& task) {
  const double unit = cfg.time_units_months[task.unit_idx];
  const FoldSplit& split = folds[task.fold_idx];
  std::size_t dropped_train = 0, dropped_val = 0, dropped_test = 0;
  const CohortTable train_raw = usable_subset(cohort, split.train, dropped_train);
  const CohortTable val_raw = usable_subset(cohort, split.val, dropped_val);
  const CohortTable test_raw = usable_subset(cohort, split.test, dropped_test);

  // Preprocessing and imputers are fitted on the training rows only.
  struct PreparedData {
    EncodedCohort train, val, test;
  };
  auto prepare = [&](const CohortTable& tr, const CohortTable& va, const CohortTable& te) {
    Preprocessor pp = Preprocessor::fit(tr, unit, cfg.horizon_months);
    return PreparedData{pp.encode(tr), pp.encode(va), pp.encode(te)};
  };

  PreparedData raw;
  bool raw_ready = false;
  std::vector<std::pair<std::string, PreparedData>> imputed;
  auto prepared_for = [&](const std::string& imputer) -> const PreparedData& {
    if (imputer == "none") {
      if (!raw_ready) {
        raw = prepare(train_raw, val_raw, test_raw);
        raw_ready = true;
      }
      return raw;
    }
    for (const auto& [name, data] : imputed)
      if (name == imputer) return data;
    const Imputer imp =
        Imputer::fit(imputer == "mean" ? ImputeStrategy::kMean : ImputeStrategy::kKnn,
                     train_raw, cfg.knn_neighbors);
    imputed.emplace_back(
        imputer, prepare(imp.transform(train_raw), imp.transform(val_raw), imp.transform(test_raw)));
    return imputed.back().second;
  };

  const std::uint64_t unit_seed = derive_seed(cfg.seed, 0xA000 + task.unit_idx);
  const std::uint64_t fold_seed = derive_seed(unit_seed, task.fold_idx);

  std::vector<FoldReport> reports;
  for (std::size_t pi = 0; pi < cfg.pipelines.size(); ++pi) {
    const PipelineSpec& pipe = cfg.pipelines[pi];
    const PreparedData& data = prepared_for(pipe.imputer);

    FoldReport report;
    report.pipeline = pipe.label();
    report.unit_months = unit;
    report.fold = int(task.fold_idx);
    report.n_test = split.test.size();
    report.n_unpredictable = dropped_test;
    report.model_seed = derive_seed(fold_seed, pi * 2);
    report.trainer_seed = derive_seed(fold_seed, pi * 2 + 1);
    report.test_index_hash = hash_indices(split.test);

    std::vector<std::vector<double>> test_hazards;
    std::vector<int> test_bins, test_events;
    auto collect_predictions = [&](const HazardNet& net) {
      for (std::size_t r = 0; r < data.test.n_rows; ++r) {
        if (!has_available_feature(data.test, r)) {
          ++report.n_unpredictable;
          continue;
        }
        test_hazards.push_back(net.predict(embed_tokens(data.test, r)).y);
        test_bins.push_back(data.test.time_bin[r]);
        test_events.push_back(data.test.event[r]);
      }
    };

    try {
      if (pipe.model == "transformer") {
        SurvivalModelConfig mc = cfg.transformer;
        mc.n_columns = int(data.train.n_columns);
        mc.n_bins = data.train.n_bins;
        mc.seed = report.model_seed;
        TransformerSurvival net(mc);
        TrainConfig tc = cfg.trainer;
        tc.seed = report.trainer_seed;
        report.curves = train(net, data.train, data.val, tc);
        collect_predictions(net);
      } else if (pipe.model == "mlp") {
        MlpConfig mc;
        mc.input_dim = int(data.train.n_columns);
        mc.hidden = cfg.mlp_hidden;
        mc.n_bins = data.train.n_bins;
        mc.seed = report.model_seed;
        MlpHazard net(mc);
        TrainConfig tc = cfg.trainer;
        tc.seed = report.trainer_seed;
        report.curves = train(net, data.train, data.val, tc);
        collect_predictions(net);
      } else {  // cox fits on the same training portion; no validation needed
        const CoxModel cox = fit_cox(data.train, cfg.cox_max_iter);
        report.cox_converged = cox.converged;
        for (std::size_t r = 0; r < data.test.n_rows; ++r) {
          const std::vector<double> cif = cox_predict_cif(cox, data.test.row_values(r));
          std::vector<double> hz(cif.size());
          for (std::size_t t = 0; t < cif.size(); ++t)
            hz[t] = t == 0 ? cif[0] : cif[t] - cif[t - 1];
          test_hazards.push_back(std::move(hz));
          test_bins.push_back(data.test.time_bin[r]);
          test_events.push_back(data.test.event[r]);
        }
      }

      {
        RiskMatrix risks;
        risks.cif.reserve(test_hazards.size());
        for (const auto& hz : test_hazards) {
          std::vector<double> cif = hz;
          for (std::size_t t = 1; t < cif.size(); ++t) cif[t] += cif[t - 1];
          risks.cif.push_back(std::move(cif));
        }
        risks.time_bin = test_bins;
        risks.event = test_events;
        report.ct = ct_index(risks);
      }
      report.error_by_bin =
          error_by_bin(test_hazards, test_bins, test_events, data.test.n_bins, unit);
    } catch (const Error& e) {
      throw ConfigError("unit " + std::to_string(unit) + "m, fold " +
                        std::to_string(task.fold_idx) + ", pipeline " + pipe.label() + ": " +
                        e.what());
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace

CrossValResult cross_validate(const CohortTable& cohort, const ExperimentConfig& cfg) {
  cfg.validate();
  cohort.validate();
  const std::vector<FoldSplit> folds =
      stratified_kfold(cohort.event, cfg.k_folds, derive_seed(cfg.seed, 0xF01D));

  std::vector<FoldTask> tasks;
  for (std::size_t u = 0; u < cfg.time_units_months.size(); ++u)
    for (std::size_t f = 0; f < cfg.k_folds; ++f) tasks.push_back({u, f});

  std::vector<std::vector<FoldReport>> results(tasks.size());
  std::vector<std::exception_ptr> failures(tasks.size());
  const std::size_t n_threads = std::min<std::size_t>(std::size_t(cfg.jobs), tasks.size());
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      results[i] = run_fold(cohort, cfg, folds, tasks[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          try {
            results[i] = run_fold(cohort, cfg, folds, tasks[i]);
          } catch (...) {
            failures[i] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    for (const auto& f : failures)
      if (f) std::rethrow_exception(f);
  }

  CrossValResult out;
  for (auto& r : results)
    for (auto& report : r) out.folds.push_back(std::move(report));

  for (const auto& pipe : cfg.pipelines) {
    for (double unit : cfg.time_units_months) {
      AggregateRow row;
      row.pipeline = pipe.label();
      row.unit_months = unit;
      std::vector<double> cts;
      for (const auto& rep : out.folds)
        if (rep.pipeline == row.pipeline && rep.unit_months == unit) cts.push_back(rep.ct);
      row.k = cts.size();
      double mean = 0.0;
      for (double c : cts) mean += c;
      mean /= double(cts.size());
      double ss = 0.0;
      for (double c : cts) ss += (c - mean) * (c - mean);
      row.mean_ct = mean;
      row.stderr_ct =
          cts.size() > 1 ? std::sqrt(ss / double(cts.size() - 1) / double(cts.size())) : 0.0;
      out.aggregate.push_back(std::move(row));
    }
  }
  return out;
}

AblationResult ablation(const CohortTable& cohort, const ExperimentConfig& cfg) {
  const std::pair<double, double> arms[] = {{1.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}};
  AblationResult out;
  for (const auto& [w1, w2] : arms) {
    ExperimentConfig arm_cfg = cfg;
    arm_cfg.pipelines = {{"transformer", "none"}};
    arm_cfg.trainer.w1 = w1;
    arm_cfg.trainer.w2 = w2;
    const CrossValResult cv = cross_validate(cohort, arm_cfg);  // same seed, same folds

    AblationArm arm;
    arm.w1 = w1;
    arm.w2 = w2;
    arm.folds = cv.folds;
    double mean = 0.0;
    for (const auto& rep : cv.folds) {
      mean += rep.ct;
      arm.mean_best_epoch += double(rep.curves.best_epoch);
      arm.mean_val_l1 += rep.curves.val_l1_at_best;
      arm.mean_val_l2 += rep.curves.val_l2_at_best;
    }
    const double n = double(cv.folds.size());
    mean /= n;
    arm.mean_ct = mean;
    arm.mean_best_epoch /= n;
    arm.mean_val_l1 /= n;
    arm.mean_val_l2 /= n;
    double ss = 0.0;
    for (const auto& rep : cv.folds) ss += (rep.ct - mean) * (rep.ct - mean);
    arm.stderr_ct = cv.folds.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    out.arms.push_back(std::move(arm));
  }
  return out;
}

}  // namespace survt
