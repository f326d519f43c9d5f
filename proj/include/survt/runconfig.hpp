#pragma once

// Run configuration (JSON), the run manifest, and deterministic report
// writers. Every number in a report CSV is formatted with fixed precision so
// identical runs produce byte-identical files; wall-clock timestamps live in
// the manifest only.

#include <cstdint>
#include <string>

#include "survt/dataset.hpp"
#include "survt/training.hpp"

namespace survt {

inline constexpr const char* kToolName = "survt";
inline constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
  std::uint64_t seed = 0;
  bool use_generator = false;
  std::string csv_path;
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 0;
  GeneratorSpec generator;
  ExperimentConfig experiment;
  PipelineSpec train_pipeline{"transformer", "none"};
  std::string profile = "custom";
};

RunConfig load_run_config(const std::string& path);  // SchemaError on problems

// Profile overlays; "toy" is the desk-scale default, "paper" the full-size
// protocol (12 layers, 17 heads, 3072 FFN, batch 32, lr 1e-4, patiences
// 200/100, max 1500 epochs, 1m/1y/2y units over a 72-month horizon).
void apply_profile(RunConfig& cfg, const std::string& profile);

// "1m" -> 1, "1y" -> 12, "2y" -> 24, and the general "<n>m" / "<n>y" forms.
double parse_time_unit(const std::string& text);

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_file(const std::string& path);

// Canonical JSON form of a generator run; hashed into the manifest when the
// input is synthetic rather than a file.
std::string generator_spec_json(const GeneratorSpec& spec, std::size_t n, std::uint64_t seed);

// Serialized echo of the resolved configuration, including the derived
// output-vector size per time unit.
std::string resolved_config_json(const RunConfig& cfg);

struct ManifestInfo {
  std::string command;
  std::string out_dir;
  std::string input_kind;  // "csv" | "generator"
  std::string input_path;  // csv only
  std::uint64_t input_hash = 0;
  std::string started_at;
  std::string finished_at;
};

// Written before any computation starts; rewritten with finished_at at the end.
void write_manifest(const RunConfig& cfg, const ManifestInfo& info);

std::string iso8601_utc_now();

std::string format_aggregate_csv(const CrossValResult& result);
std::string format_curves_csv(const TrainResult& curves);
std::string format_ablation_csv(const AblationResult& result);
std::string fold_report_json(const FoldReport& report);
std::string ablation_arm_json(const AblationArm& arm);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace survt
