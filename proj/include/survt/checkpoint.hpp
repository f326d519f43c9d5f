#pragma once

// Versioned binary model checkpoint: magic + format version, model kind,
// model config, the fitted preprocessor (so a saved model can encode new
// CSVs consistently), and every named parameter tensor as raw 64-bit floats.
// Round-trips are bit-exact: save -> load -> identical outputs.

#include <memory>
#include <string>

#include "survt/dataset.hpp"
#include "survt/mlp.hpp"
#include "survt/model.hpp"

namespace survt {

struct Checkpoint {
  std::string model_kind;  // "transformer" | "mlp"
  SurvivalModelConfig transformer_config;
  MlpConfig mlp_config;
  Preprocessor preprocessor;
  std::unique_ptr<HazardNet> model;

  const HazardNet& net() const { return *model; }
};

void save_checkpoint(const std::string& path, const std::string& model_kind,
                     const HazardNet& model, const Preprocessor& preprocessor);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace survt
