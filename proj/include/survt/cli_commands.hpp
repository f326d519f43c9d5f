#pragma once

// Subcommand implementations behind the command-line tool. They live in the
// library so tests can drive them directly; the binary is a thin dispatcher.

#include <cstdint>
#include <string>

#include "survt/errors.hpp"

namespace survt::cli {

// Raised for malformed invocations / configs; the binary maps it to exit 2.
struct UsageError : Error { using Error::Error; };

struct RunArgs {
  std::string config_path;
  std::string out_dir;
  std::string profile;    // "", "toy", "paper"
  std::string time_unit;  // "", "1m", "1y", "2y", "<n>m", "<n>y"
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool dry_run = false;
};

int cmd_generate(const RunArgs& args);
int cmd_train(const RunArgs& args);
int cmd_crossval(const RunArgs& args);
int cmd_ablate(const RunArgs& args);

struct EvaluateArgs {
  std::string checkpoint_path;
  std::string data_csv;
  std::string out_dir;  // optional; prints to stdout regardless
};

int cmd_evaluate(const EvaluateArgs& args);

struct AttributeArgs {
  std::string checkpoint_path;
  std::string data_csv;
  std::string out_dir;
  std::size_t max_features = 20;
};

int cmd_attribute(const AttributeArgs& args);

// Gradient-check suite; prints one line per check and fails (exit 1) when any
// max relative error exceeds 1e-4.
int cmd_gradcheck(const std::string& profile);

}  // namespace survt::cli
