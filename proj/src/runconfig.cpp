#include "survt/runconfig.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace survt {

namespace {

using nlohmann::json;

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

[[noreturn]] void bad_config(const std::string& what) {
  throw SchemaError("run config: " + what);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_config(std::string("field '") + key + "' has the wrong type");
  }
}

GeneratorSpec parse_generator(const json& g, std::size_t& n, std::uint64_t& seed) {
  GeneratorSpec spec;
  n = get_or<std::size_t>(g, "n", 0);
  if (n == 0) bad_config("generator.n must be >= 1");
  seed = get_or<std::uint64_t>(g, "seed", 0);
  spec.weibull_shape = get_or<double>(g, "weibull_shape", spec.weibull_shape);
  spec.baseline_hazard = get_or<double>(g, "baseline_hazard", spec.baseline_hazard);
  spec.censor_rate = get_or<double>(g, "censor_rate", spec.censor_rate);
  spec.missing_rate = get_or<double>(g, "missing_rate", spec.missing_rate);
  if (!g.contains("features") || !g.at("features").is_array() || g.at("features").empty())
    bad_config("generator.features must be a non-empty array");
  for (const auto& f : g.at("features")) {
    GenFeature gf;
    gf.name = get_or<std::string>(f, "name", "");
    if (gf.name.empty()) bad_config("generator feature without a name");
    const std::string kind = get_or<std::string>(f, "kind", "continuous");
    if (kind == "continuous")
      gf.kind = GenFeature::Kind::kContinuous;
    else if (kind == "binary")
      gf.kind = GenFeature::Kind::kBinary;
    else if (kind == "categorical")
      gf.kind = GenFeature::Kind::kCategorical;
    else
      bad_config("generator feature '" + gf.name + "': unknown kind '" + kind + "'");
    gf.levels = get_or<int>(f, "levels", 2);
    gf.beta = get_or<double>(f, "beta", 0.0);
    spec.features.push_back(std::move(gf));
  }
  return spec;
}

json generator_json(const GeneratorSpec& spec, std::size_t n, std::uint64_t seed) {
  json g;
  g["n"] = n;
  g["seed"] = seed;
  g["weibull_shape"] = spec.weibull_shape;
  g["baseline_hazard"] = spec.baseline_hazard;
  g["censor_rate"] = spec.censor_rate;
  g["missing_rate"] = spec.missing_rate;
  g["features"] = json::array();
  for (const auto& f : spec.features) {
    json jf;
    jf["name"] = f.name;
    jf["kind"] = f.kind == GenFeature::Kind::kContinuous  ? "continuous"
                 : f.kind == GenFeature::Kind::kBinary    ? "binary"
                                                          : "categorical";
    if (f.kind == GenFeature::Kind::kCategorical) jf["levels"] = f.levels;
    jf["beta"] = f.beta;
    g["features"].push_back(jf);
  }
  return g;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("run config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("run config: '" + path + "' is not valid JSON: " + e.what());
  }

  static const char* known[] = {"seed",          "dataset",     "time_units_months",
                                "horizon_months", "model",      "mlp_hidden",
                                "trainer",        "pipelines",  "cv",
                                "knn_neighbors",  "cox_max_iter", "train_pipeline"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) bad_config("unknown key '" + it.key() + "'");
  }

  RunConfig rc;
  rc.seed = get_or<std::uint64_t>(j, "seed", 0);
  rc.experiment.seed = rc.seed;

  if (!j.contains("dataset")) bad_config("a dataset section is required");
  const json& ds = j.at("dataset");
  if (ds.contains("csv") && ds.contains("generator"))
    bad_config("dataset: give either csv or generator, not both");
  if (ds.contains("csv")) {
    rc.csv_path = ds.at("csv").get<std::string>();
  } else if (ds.contains("generator")) {
    rc.use_generator = true;
    rc.generator = parse_generator(ds.at("generator"), rc.gen_n, rc.gen_seed);
  } else {
    bad_config("dataset: needs a csv path or a generator section");
  }

  if (j.contains("time_units_months")) {
    rc.experiment.time_units_months.clear();
    for (const auto& u : j.at("time_units_months"))
      rc.experiment.time_units_months.push_back(u.get<double>());
  }
  rc.experiment.horizon_months = get_or<double>(j, "horizon_months", 72.0);

  if (j.contains("model")) {
    const json& m = j.at("model");
    auto& t = rc.experiment.transformer;
    t.n_layers = get_or<int>(m, "n_layers", t.n_layers);
    t.n_heads = get_or<int>(m, "n_heads", t.n_heads);
    t.model_dim = get_or<int>(m, "model_dim", t.model_dim);
    t.ffn_hidden = get_or<int>(m, "ffn_hidden", t.ffn_hidden);
  }
  if (j.contains("mlp_hidden")) {
    rc.experiment.mlp_hidden.clear();
    for (const auto& h : j.at("mlp_hidden")) rc.experiment.mlp_hidden.push_back(h.get<int>());
  }
  if (j.contains("trainer")) {
    const json& t = j.at("trainer");
    auto& tc = rc.experiment.trainer;
    tc.batch_size = get_or<int>(t, "batch_size", tc.batch_size);
    tc.lr = get_or<double>(t, "lr", tc.lr);
    tc.max_epochs = get_or<int>(t, "max_epochs", tc.max_epochs);
    tc.early_stop_patience = get_or<int>(t, "early_stop_patience", tc.early_stop_patience);
    tc.lr_patience = get_or<int>(t, "lr_patience", tc.lr_patience);
    tc.lr_decay = get_or<double>(t, "lr_decay", tc.lr_decay);
    tc.w1 = get_or<double>(t, "w1", tc.w1);
    tc.w2 = get_or<double>(t, "w2", tc.w2);
    tc.rank_sigma = get_or<double>(t, "rank_sigma", tc.rank_sigma);
  }
  if (j.contains("pipelines")) {
    rc.experiment.pipelines.clear();
    for (const auto& p : j.at("pipelines"))
      rc.experiment.pipelines.push_back({get_or<std::string>(p, "model", "transformer"),
                                         get_or<std::string>(p, "imputer", "none")});
  }
  if (j.contains("cv")) {
    const json& cv = j.at("cv");
    rc.experiment.k_folds = get_or<std::size_t>(cv, "k_folds", rc.experiment.k_folds);
    rc.experiment.jobs = get_or<int>(cv, "jobs", rc.experiment.jobs);
  }
  rc.experiment.knn_neighbors = get_or<int>(j, "knn_neighbors", rc.experiment.knn_neighbors);
  rc.experiment.cox_max_iter = get_or<int>(j, "cox_max_iter", rc.experiment.cox_max_iter);
  if (j.contains("train_pipeline")) {
    const json& p = j.at("train_pipeline");
    rc.train_pipeline = {get_or<std::string>(p, "model", "transformer"),
                         get_or<std::string>(p, "imputer", "none")};
  }
  return rc;
}

void apply_profile(RunConfig& cfg, const std::string& profile) {
  auto& t = cfg.experiment.transformer;
  auto& tr = cfg.experiment.trainer;
  if (profile == "paper") {
    t.n_layers = 12;
    t.n_heads = 17;
    t.model_dim = 272;
    t.ffn_hidden = 3072;
    tr.batch_size = 32;
    tr.lr = 1e-4;
    tr.max_epochs = 1500;
    tr.early_stop_patience = 200;
    tr.lr_patience = 100;
    tr.lr_decay = 0.1;
    cfg.experiment.time_units_months = {1.0, 12.0, 24.0};
    cfg.experiment.horizon_months = 72.0;
  } else if (profile == "toy") {
    t.n_layers = 2;
    t.n_heads = 4;
    t.model_dim = 32;
    t.ffn_hidden = 64;
    tr.batch_size = 32;
    tr.lr = 1e-3;
    tr.max_epochs = 40;
    tr.early_stop_patience = 12;
    tr.lr_patience = 6;
    tr.lr_decay = 0.1;
    cfg.experiment.time_units_months = {12.0};
    cfg.experiment.horizon_months = 72.0;
  } else {
    throw ConfigError("unknown profile '" + profile + "' (expected toy or paper)");
  }
  cfg.profile = profile;
}

double parse_time_unit(const std::string& text) {
  if (text.size() < 2) throw ConfigError("time unit '" + text + "' is malformed");
  const char suffix = text.back();
  double n = 0.0;
  try {
    std::size_t used = 0;
    n = std::stod(text.substr(0, text.size() - 1), &used);
    if (used != text.size() - 1) throw std::invalid_argument("trailing junk");
  } catch (const std::exception&) {
    throw ConfigError("time unit '" + text + "' is malformed (use e.g. 1m, 6m, 1y, 2y)");
  }
  if (n <= 0.0) throw ConfigError("time unit must be positive");
  if (suffix == 'm') return n;
  if (suffix == 'y') return n * 12.0;
  throw ConfigError("time unit '" + text + "' must end in m or y");
}

std::string generator_spec_json(const GeneratorSpec& spec, std::size_t n, std::uint64_t seed) {
  return generator_json(spec, n, seed).dump(2);
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "' for hashing");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  return fnv1a64(bytes.data(), bytes.size());
}

std::string resolved_config_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["profile"] = cfg.profile;
  if (cfg.use_generator)
    j["dataset"] = {{"generator", generator_json(cfg.generator, cfg.gen_n, cfg.gen_seed)}};
  else
    j["dataset"] = {{"csv", cfg.csv_path}};
  const auto& e = cfg.experiment;
  j["time_units_months"] = e.time_units_months;
  j["horizon_months"] = e.horizon_months;
  json bins = json::object();
  for (double u : e.time_units_months)
    bins[fmt(u, "%g")] = int(std::llround(e.horizon_months / u));
  j["time_unit_bins"] = bins;
  j["model"] = {{"n_layers", e.transformer.n_layers},
                {"n_heads", e.transformer.n_heads},
                {"model_dim", e.transformer.model_dim},
                {"ffn_hidden", e.transformer.ffn_hidden}};
  j["mlp_hidden"] = e.mlp_hidden;
  j["trainer"] = {{"batch_size", e.trainer.batch_size},
                  {"lr", e.trainer.lr},
                  {"max_epochs", e.trainer.max_epochs},
                  {"early_stop_patience", e.trainer.early_stop_patience},
                  {"lr_patience", e.trainer.lr_patience},
                  {"lr_decay", e.trainer.lr_decay},
                  {"w1", e.trainer.w1},
                  {"w2", e.trainer.w2},
                  {"rank_sigma", e.trainer.rank_sigma}};
  j["pipelines"] = json::array();
  for (const auto& p : e.pipelines)
    j["pipelines"].push_back({{"model", p.model}, {"imputer", p.imputer}});
  j["cv"] = {{"k_folds", e.k_folds}, {"jobs", e.jobs}};
  j["knn_neighbors"] = e.knn_neighbors;
  j["cox_max_iter"] = e.cox_max_iter;
  j["train_pipeline"] = {{"model", cfg.train_pipeline.model},
                         {"imputer", cfg.train_pipeline.imputer}};
  return j.dump(2);
}

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const RunConfig& cfg, const ManifestInfo& info) {
  json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = info.command;
  j["master_seed"] = cfg.seed;
  j["input"] = {{"kind", info.input_kind},
                {"path", info.input_path},
                {"fnv1a64", info.input_hash}};
  j["resolved_config"] = json::parse(resolved_config_json(cfg));
  j["started_at"] = info.started_at;
  j["finished_at"] = info.finished_at;
  write_text_file(info.out_dir + "/manifest.json", j.dump(2) + "\n");
}

std::string format_aggregate_csv(const CrossValResult& result) {
  std::string out = "pipeline,unit_months,mean_ct,stderr_ct,folds\n";
  for (const auto& row : result.aggregate) {
    out += row.pipeline + "," + fmt(row.unit_months, "%g") + "," + fmt(row.mean_ct) + "," +
           fmt(row.stderr_ct) + "," + std::to_string(row.k) + "\n";
  }
  return out;
}

std::string format_curves_csv(const TrainResult& curves) {
  std::string out = "epoch,train_loss,val_loss,lr\n";
  for (std::size_t e = 0; e < curves.train_loss.size(); ++e) {
    out += std::to_string(e) + "," + fmt(curves.train_loss[e], "%.9g") + "," +
           fmt(curves.val_loss[e], "%.9g") + "," + fmt(curves.lr_trace[e], "%.9g") + "\n";
  }
  return out;
}

std::string format_ablation_csv(const AblationResult& result) {
  std::string out = "w1,w2,mean_ct,stderr_ct,mean_best_epoch,mean_val_l1,mean_val_l2\n";
  for (const auto& arm : result.arms) {
    out += fmt(arm.w1, "%g") + "," + fmt(arm.w2, "%g") + "," + fmt(arm.mean_ct) + "," +
           fmt(arm.stderr_ct) + "," + fmt(arm.mean_best_epoch) + "," +
           fmt(arm.mean_val_l1) + "," + fmt(arm.mean_val_l2) + "\n";
  }
  return out;
}

namespace {

json fold_report_to_json(const FoldReport& r) {
  json j;
  j["pipeline"] = r.pipeline;
  j["unit_months"] = r.unit_months;
  j["fold"] = r.fold;
  j["ct_index"] = r.ct;
  j["n_test"] = r.n_test;
  j["n_unpredictable"] = r.n_unpredictable;
  j["model_seed"] = r.model_seed;
  j["trainer_seed"] = r.trainer_seed;
  j["cox_converged"] = r.cox_converged;
  if (!r.curves.train_loss.empty()) {
    j["best_epoch"] = r.curves.best_epoch;
    j["best_val_loss"] = r.curves.best_val;
    j["epochs_run"] = r.curves.epochs_run;
    j["val_l1_at_best"] = r.curves.val_l1_at_best;
    j["val_l2_at_best"] = r.curves.val_l2_at_best;
  }
  j["error_by_bin"] = json::array();
  for (const auto& row : r.error_by_bin)
    j["error_by_bin"].push_back({{"bin", row.bin},
                                 {"count", row.count},
                                 {"mean_abs_error_months", row.mean_abs_error_months},
                                 {"stderr_months", row.stderr_months}});
  return j;
}

}  // namespace

std::string fold_report_json(const FoldReport& report) {
  return fold_report_to_json(report).dump(2) + "\n";
}

std::string ablation_arm_json(const AblationArm& arm) {
  json j;
  j["w1"] = arm.w1;
  j["w2"] = arm.w2;
  j["mean_ct"] = arm.mean_ct;
  j["stderr_ct"] = arm.stderr_ct;
  j["mean_best_epoch"] = arm.mean_best_epoch;
  j["mean_val_l1"] = arm.mean_val_l1;
  j["mean_val_l2"] = arm.mean_val_l2;
  j["folds"] = json::array();
  for (const auto& f : arm.folds) j["folds"].push_back(fold_report_to_json(f));
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot open '" + path + "' for writing");
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace survt
