#pragma once

// Feed-forward hazard baseline trained with the same loss and loop as the
// transformer. Reads only the value column of a sample, so it expects fully
// imputed inputs.

#include <cstdint>
#include <vector>

#include "survt/model.hpp"

namespace survt {

struct MlpConfig {
  int input_dim = 0;
  std::vector<int> hidden = {128, 128};
  int n_bins = 6;
  std::uint64_t seed = 0;

  void validate() const;
};

class MlpHazard : public HazardNet {
 public:
  explicit MlpHazard(const MlpConfig& cfg);

  std::vector<NamedTensor>& params() override { return params_; }
  const std::vector<NamedTensor>& params() const override { return params_; }
  int output_bins() const override { return cfg_.n_bins; }
  Tape::NodeId build_forward(Tape& tape, std::span<const Tape::NodeId> param_nodes,
                             const EncodedSample& sample) const override;

  const MlpConfig& config() const { return cfg_; }

 private:
  MlpConfig cfg_;
  std::vector<NamedTensor> params_;
};

}  // namespace survt
