#include "survt/cli_commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "survt/checkpoint.hpp"
#include "survt/gradcheck.hpp"
#include "survt/imputation.hpp"
#include "survt/metrics.hpp"
#include "survt/rng.hpp"
#include "survt/runconfig.hpp"
#include "survt/shapley.hpp"

namespace survt::cli {

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

RunConfig resolve_config(const RunArgs& args) {
  if (args.config_path.empty()) throw UsageError("a --config file is required");
  RunConfig rc;
  try {
    rc = load_run_config(args.config_path);
    if (!args.profile.empty()) apply_profile(rc, args.profile);
    if (!args.time_unit.empty())
      rc.experiment.time_units_months = {parse_time_unit(args.time_unit)};
    if (args.has_seed) {
      rc.seed = args.seed;
      rc.experiment.seed = args.seed;
    }
  } catch (const SchemaError& e) {
    throw UsageError(e.what());
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return rc;
}

struct LoadedCohort {
  CohortTable table;
  std::string input_kind;
  std::string input_path;
  std::uint64_t input_hash = 0;
};

LoadedCohort obtain_cohort(const RunConfig& rc, const std::string& out_dir,
                           bool write_generated) {
  LoadedCohort lc;
  if (rc.use_generator) {
    lc.table = generate_synthetic(rc.gen_n, rc.generator, rc.gen_seed);
    lc.input_kind = "generator";
    const std::string spec = generator_spec_json(rc.generator, rc.gen_n, rc.gen_seed);
    lc.input_hash = fnv1a64(spec.data(), spec.size());
    if (write_generated && !out_dir.empty()) {
      lc.input_path = out_dir + "/cohort.csv";
      save_csv(lc.table, lc.input_path);
    }
  } else {
    lc.table = load_csv(rc.csv_path);
    lc.input_kind = "csv";
    lc.input_path = rc.csv_path;
    lc.input_hash = fnv1a64_file(rc.csv_path);
  }
  return lc;
}

void require_out_dir(const RunArgs& args) {
  if (args.out_dir.empty()) throw UsageError("an --out directory is required");
  std::filesystem::create_directories(args.out_dir);
}

std::string unit_label(double unit_months) { return fmt(unit_months, "%g") + "m"; }

// Stratified 80/20 split used by the single-model train command.
void train_val_split(std::span<const int> event, std::uint64_t seed,
                     std::vector<std::size_t>& train, std::vector<std::size_t>& val) {
  std::vector<std::size_t> cls[2];
  for (std::size_t i = 0; i < event.size(); ++i) cls[event[i] == 1 ? 1 : 0].push_back(i);
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, 0x59110 + std::uint64_t(c)));
    rng.shuffle(cls[c]);
    const std::size_t n_val = cls[c].size() / 5;
    for (std::size_t i = 0; i < cls[c].size(); ++i)
      (i < n_val ? val : train).push_back(cls[c][i]);
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
}

}  // namespace

int cmd_generate(const RunArgs& args) {
  RunConfig rc = resolve_config(args);
  require_out_dir(args);
  if (!rc.use_generator)
    throw UsageError("generate needs a dataset.generator section in the config");
  ManifestInfo info;
  info.command = "generate";
  info.out_dir = args.out_dir;
  info.started_at = iso8601_utc_now();
  const LoadedCohort lc = obtain_cohort(rc, args.out_dir, true);
  info.input_kind = lc.input_kind;
  info.input_path = lc.input_path;
  info.input_hash = lc.input_hash;
  info.finished_at = iso8601_utc_now();
  write_manifest(rc, info);
  std::printf("wrote %s (%zu patients)\n", lc.input_path.c_str(), lc.table.n_rows());
  return 0;
}

int cmd_train(const RunArgs& args) {
  RunConfig rc = resolve_config(args);
  require_out_dir(args);
  const PipelineSpec pipe = rc.train_pipeline;
  if (pipe.model != "transformer" && pipe.model != "mlp")
    throw UsageError("train supports the transformer and mlp models; crossval runs cox");

  ManifestInfo info;
  info.command = "train";
  info.out_dir = args.out_dir;
  info.started_at = iso8601_utc_now();
  LoadedCohort lc = obtain_cohort(rc, args.out_dir, true);
  info.input_kind = lc.input_kind;
  info.input_path = lc.input_path;
  info.input_hash = lc.input_hash;
  write_manifest(rc, info);

  if (rc.experiment.transformer.n_layers == 12 && rc.experiment.transformer.model_dim >= 272)
    std::fprintf(stderr,
                 "note: full-size profile selected; training at this scale is slow on CPU\n");

  std::vector<std::size_t> train_rows, val_rows;
  train_val_split(lc.table.event, derive_seed(rc.seed, 0x3417), train_rows, val_rows);
  CohortTable train_raw = lc.table.subset(train_rows);
  CohortTable val_raw = lc.table.subset(val_rows);
  if (pipe.imputer != "none") {
    const Imputer imp =
        Imputer::fit(pipe.imputer == "mean" ? ImputeStrategy::kMean : ImputeStrategy::kKnn,
                     train_raw, rc.experiment.knn_neighbors);
    train_raw = imp.transform(train_raw);
    val_raw = imp.transform(val_raw);
  }
  const double unit = rc.experiment.time_units_months.front();
  Preprocessor pp = Preprocessor::fit(train_raw, unit, rc.experiment.horizon_months);
  const EncodedCohort enc_train = pp.encode(train_raw);
  const EncodedCohort enc_val = pp.encode(val_raw);

  TrainConfig tc = rc.experiment.trainer;
  tc.seed = derive_seed(rc.seed, 0x3418);
  TrainResult curves;
  if (pipe.model == "transformer") {
    SurvivalModelConfig mc = rc.experiment.transformer;
    mc.n_columns = int(enc_train.n_columns);
    mc.n_bins = enc_train.n_bins;
    mc.seed = derive_seed(rc.seed, 0x3419);
    TransformerSurvival net(mc);
    curves = train(net, enc_train, enc_val, tc);
    save_checkpoint(args.out_dir + "/checkpoint.bin", "transformer", net, pp);
  } else {
    MlpConfig mc;
    mc.input_dim = int(enc_train.n_columns);
    mc.hidden = rc.experiment.mlp_hidden;
    mc.n_bins = enc_train.n_bins;
    mc.seed = derive_seed(rc.seed, 0x3419);
    MlpHazard net(mc);
    curves = train(net, enc_train, enc_val, tc);
    save_checkpoint(args.out_dir + "/checkpoint.bin", "mlp", net, pp);
  }
  write_text_file(args.out_dir + "/curves.csv", format_curves_csv(curves));
  info.finished_at = iso8601_utc_now();
  write_manifest(rc, info);
  std::printf("best epoch %d, best validation loss %s\n", curves.best_epoch,
              fmt(curves.best_val).c_str());
  return 0;
}

int cmd_crossval(const RunArgs& args) {
  RunConfig rc = resolve_config(args);
  require_out_dir(args);

  ManifestInfo info;
  info.command = "crossval";
  info.out_dir = args.out_dir;
  info.started_at = iso8601_utc_now();
  const LoadedCohort lc = obtain_cohort(rc, args.out_dir, true);
  info.input_kind = lc.input_kind;
  info.input_path = lc.input_path;
  info.input_hash = lc.input_hash;
  write_manifest(rc, info);  // hash and resolved config recorded up front

  if (args.dry_run) {
    std::printf("dry run: manifest written to %s/manifest.json\n", args.out_dir.c_str());
    return 0;
  }
  if (rc.experiment.transformer.n_layers >= 12 && rc.experiment.transformer.model_dim >= 272)
    std::fprintf(stderr,
                 "note: full-size profile selected; expect very long CPU training times\n");

  const CrossValResult result = cross_validate(lc.table, rc.experiment);
  write_text_file(args.out_dir + "/aggregate.csv", format_aggregate_csv(result));
  for (const auto& fold : result.folds) {
    const std::string stem =
        fold.pipeline + "_" + unit_label(fold.unit_months) + "_fold" + std::to_string(fold.fold);
    write_text_file(args.out_dir + "/folds/" + stem + ".json", fold_report_json(fold));
    if (!fold.curves.train_loss.empty())
      write_text_file(args.out_dir + "/curves/" + stem + ".csv",
                      format_curves_csv(fold.curves));
  }
  info.finished_at = iso8601_utc_now();
  write_manifest(rc, info);
  std::printf("%s", format_aggregate_csv(result).c_str());
  return 0;
}

int cmd_ablate(const RunArgs& args) {
  RunConfig rc = resolve_config(args);
  require_out_dir(args);

  ManifestInfo info;
  info.command = "ablate";
  info.out_dir = args.out_dir;
  info.started_at = iso8601_utc_now();
  const LoadedCohort lc = obtain_cohort(rc, args.out_dir, true);
  info.input_kind = lc.input_kind;
  info.input_path = lc.input_path;
  info.input_hash = lc.input_hash;
  write_manifest(rc, info);

  const AblationResult result = ablation(lc.table, rc.experiment);
  write_text_file(args.out_dir + "/ablation.csv", format_ablation_csv(result));
  for (const auto& arm : result.arms) {
    const std::string stem =
        "arm_w1_" + fmt(arm.w1, "%g") + "_w2_" + fmt(arm.w2, "%g");
    write_text_file(args.out_dir + "/arms/" + stem + ".json", ablation_arm_json(arm));
  }
  info.finished_at = iso8601_utc_now();
  write_manifest(rc, info);
  std::printf("%s", format_ablation_csv(result).c_str());
  return 0;
}

int cmd_evaluate(const EvaluateArgs& args) {
  if (args.checkpoint_path.empty() || args.data_csv.empty())
    throw UsageError("evaluate needs --checkpoint and --data");
  const Checkpoint ck = load_checkpoint(args.checkpoint_path);
  const CohortTable table = load_csv(args.data_csv);
  const EncodedCohort enc = ck.preprocessor.encode(table);

  RiskMatrix risks;
  std::size_t unpredictable = 0;
  for (std::size_t r = 0; r < enc.n_rows; ++r) {
    bool any = false;
    for (auto a : enc.row_available(r)) any = any || a;
    if (!any) {
      ++unpredictable;
      continue;
    }
    risks.cif.push_back(ck.net().predict_cif(embed_tokens(enc, r)));
    risks.time_bin.push_back(enc.time_bin[r]);
    risks.event.push_back(enc.event[r]);
  }
  const double ct = ct_index(risks);
  std::printf("ct_index %s (n=%zu, unpredictable=%zu)\n", fmt(ct).c_str(), risks.cif.size(),
              unpredictable);
  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    write_text_file(args.out_dir + "/evaluation.json",
                    std::string("{\n  \"ct_index\": ") + fmt(ct) +
                        ",\n  \"n_scored\": " + std::to_string(risks.cif.size()) +
                        ",\n  \"n_unpredictable\": " + std::to_string(unpredictable) + "\n}\n");
  }
  return 0;
}

int cmd_attribute(const AttributeArgs& args) {
  if (args.checkpoint_path.empty() || args.data_csv.empty() || args.out_dir.empty())
    throw UsageError("attribute needs --checkpoint, --data and --out");
  const Checkpoint ck = load_checkpoint(args.checkpoint_path);
  if (ck.model_kind != "transformer")
    throw UsageError("attribute requires a transformer checkpoint; coalition masking is "
                     "undefined for imputation-based models");
  const CohortTable table = load_csv(args.data_csv);
  const EncodedCohort enc = ck.preprocessor.encode(table);
  std::filesystem::create_directories(args.out_dir);

  // Baseline v(empty) = cohort mean of F(t) over the scorable patients.
  const std::size_t T = std::size_t(ck.net().output_bins());
  std::vector<double> empty_value(T, 0.0);
  std::vector<std::size_t> scorable;
  for (std::size_t r = 0; r < enc.n_rows; ++r) {
    bool any = false;
    for (auto a : enc.row_available(r)) any = any || a;
    if (!any) continue;
    const std::vector<double> cif = ck.net().predict_cif(embed_tokens(enc, r));
    for (std::size_t t = 0; t < T; ++t) empty_value[t] += cif[t];
    scorable.push_back(r);
  }
  if (scorable.empty()) throw MetricError("attribute: no scorable patients in the dataset");
  for (auto& v : empty_value) v /= double(scorable.size());

  std::vector<ShapleyAttribution> attributions;
  std::string long_csv = "patient,feature,time_bin,phi\n";
  for (std::size_t r : scorable) {
    ShapleyAttribution att = shapley_values(ck.net(), embed_tokens(enc, r), enc.groups,
                                            empty_value, args.max_features);
    for (std::size_t f = 0; f < att.features.size(); ++f)
      for (std::size_t t = 0; t < T; ++t)
        long_csv += std::to_string(r) + "," + att.features[f] + "," + std::to_string(t) +
                    "," + fmt(att.phi[f][t], "%.9g") + "\n";
    attributions.push_back(std::move(att));
  }
  write_text_file(args.out_dir + "/shap_long.csv", long_csv);

  const std::vector<ImportanceEntry> ranking = summarize(attributions);
  std::string summary = "{\n  \"importance\": [\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    summary += std::string("    {\"feature\": \"") + ranking[i].feature +
               "\", \"mean_abs_phi\": " + fmt(ranking[i].importance, "%.9g") + "}";
    summary += i + 1 < ranking.size() ? ",\n" : "\n";
  }
  summary += "  ],\n  \"baseline\": \"cohort mean F(t) over " +
             std::to_string(scorable.size()) + " patients\"\n}\n";
  write_text_file(args.out_dir + "/shap_summary.json", summary);
  std::printf("wrote %s and %s\n", (args.out_dir + "/shap_long.csv").c_str(),
              (args.out_dir + "/shap_summary.json").c_str());
  return 0;
}

int cmd_gradcheck(const std::string& profile) {
  if (!profile.empty() && profile != "toy")
    throw UsageError("gradcheck supports the toy profile only");
  constexpr double kTolerance = 1e-4;
  bool ok = true;
  auto report = [&](const std::string& name, double err) {
    const bool pass = err <= kTolerance;
    ok = ok && pass;
    std::printf("%-28s max_rel_error %.3e  %s\n", name.c_str(), err, pass ? "ok" : "FAIL");
  };

  for (const auto& item : primitive_gradient_checks(0xC0FFEE)) report(item.name, item.max_rel_error);

  // End-to-end: toy transformer, batch of 8 with mixed censoring and masks.
  SurvivalModelConfig mc;
  mc.n_layers = 2;
  mc.n_heads = 4;
  mc.model_dim = 32;
  mc.ffn_hidden = 64;
  mc.n_bins = 6;
  mc.n_columns = 5;
  mc.seed = 11;
  TransformerSurvival net(mc);

  Rng rng(0x5EED5);
  std::vector<EncodedSample> samples;
  std::vector<int> bins, events;
  for (int i = 0; i < 8; ++i) {
    std::vector<double> values(5);
    Mask avail(5, 1);
    for (auto& v : values) v = rng.normal();
    avail[std::size_t(rng.below(5))] = 0;  // one missing feature per patient
    samples.push_back(embed_tokens(values, avail));
    bins.push_back(int(rng.below(4)));  // keep away from the clamped last bin
    events.push_back(i % 2);
  }
  report("loss_l1_end_to_end", loss_gradient_error(net, samples, bins, events, 1.0, 0.0));
  report("loss_l2_end_to_end", loss_gradient_error(net, samples, bins, events, 0.0, 1.0));
  report("loss_total_end_to_end", loss_gradient_error(net, samples, bins, events, 1.0, 1.0));

  if (!ok) {
    std::fprintf(stderr, "gradcheck: at least one check exceeded %.0e\n", kTolerance);
    return 1;
  }
  std::printf("all gradient checks passed (tolerance %.0e)\n", kTolerance);
  return 0;
}

}  // namespace survt::cli
