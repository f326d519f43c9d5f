#pragma once

// Optimization loop and experiment orchestration: Adam over shuffled
// mini-batches with validation-based early stopping and plateau LR decay,
// stratified cross-validation with paired folds across pipelines, and the
// loss ablation harness.

#include <cstdint>
#include <string>
#include <vector>

#include "survt/dataset.hpp"
#include "survt/loss.hpp"
#include "survt/model.hpp"

namespace survt {

struct TrainConfig {
  int batch_size = 32;
  double lr = 1e-4;
  int max_epochs = 1500;
  int early_stop_patience = 200;
  int lr_patience = 100;
  double lr_decay = 0.1;
  double w1 = 1.0;
  double w2 = 1.0;
  double rank_sigma = kRankSigma;
  double improve_tol = 1e-6;  // a val-loss drop below this does not reset patience
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  std::vector<double> train_loss;  // mean per-batch loss, one entry per epoch
  std::vector<double> val_loss;    // full validation-set loss per epoch
  std::vector<double> lr_trace;    // learning rate per epoch, non-increasing
  int best_epoch = -1;             // 0-based epoch whose parameters were kept
  double best_val = 0.0;
  double val_l1_at_best = 0.0;
  double val_l2_at_best = 0.0;
  int epochs_run = 0;
};

// Trains in place and leaves the best-validation parameters in the model.
TrainResult train(HazardNet& model, const EncodedCohort& train_set,
                  const EncodedCohort& val_set, const TrainConfig& cfg);

struct PipelineSpec {
  std::string model;    // transformer | mlp | cox
  std::string imputer;  // none | mean | knn
  std::string label() const { return imputer == "none" ? model : model + "+" + imputer; }
};

struct ExperimentConfig {
  std::size_t k_folds = 5;
  std::vector<double> time_units_months = {12.0};
  double horizon_months = 72.0;
  SurvivalModelConfig transformer;  // n_columns/n_bins filled per fold
  std::vector<int> mlp_hidden = {128, 128};
  TrainConfig trainer;
  int knn_neighbors = 5;
  int cox_max_iter = 100;
  std::vector<PipelineSpec> pipelines = {{"transformer", "none"}};
  int jobs = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ErrorByBinRow {
  int bin = 0;           // true event bin (uncensored patients only)
  int count = 0;
  double mean_abs_error_months = 0.0;
  double stderr_months = 0.0;
};

struct FoldReport {
  std::string pipeline;
  double unit_months = 0.0;
  int fold = -1;
  double ct = 0.0;
  std::size_t n_test = 0;
  std::size_t n_unpredictable = 0;  // test patients with every feature missing
  TrainResult curves;               // empty for cox
  std::vector<ErrorByBinRow> error_by_bin;
  std::uint64_t model_seed = 0;
  std::uint64_t trainer_seed = 0;
  std::uint64_t test_index_hash = 0;  // same across pipelines of a paired fold
  bool cox_converged = true;
};

struct AggregateRow {
  std::string pipeline;
  double unit_months = 0.0;
  double mean_ct = 0.0;
  double stderr_ct = 0.0;
  std::size_t k = 0;
};

struct CrossValResult {
  std::vector<FoldReport> folds;
  std::vector<AggregateRow> aggregate;
};

// Runs every configured pipeline on byte-identical fold splits per time unit.
CrossValResult cross_validate(const CohortTable& cohort, const ExperimentConfig& cfg);

struct AblationArm {
  double w1 = 1.0, w2 = 1.0;
  std::vector<FoldReport> folds;
  double mean_ct = 0.0;
  double stderr_ct = 0.0;
  double mean_best_epoch = 0.0;
  double mean_val_l1 = 0.0;  // decomposition at the best epoch, fold-averaged
  double mean_val_l2 = 0.0;
};

struct AblationResult {
  std::vector<AblationArm> arms;  // weights (1,1), (1,0), (0,1) on paired folds
};

AblationResult ablation(const CohortTable& cohort, const ExperimentConfig& cfg);

// Point prediction for the error-by-bin report: months = unit * (argmax_t y_t + 0.5).
double predicted_event_months(std::span<const double> hazard, double unit_months);

}  // namespace survt
