#pragma once

// Transformer encoder for tabular survival data. Each post-encoding column
// becomes one token (one-hot position + scalar value); missing features are
// masked out of every attention softmax as keys and excluded from the pooled
// mean, so the forward pass never reads their values.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "survt/dataset.hpp"
#include "survt/tensor.hpp"

namespace survt {

struct SurvivalModelConfig {
  int n_layers = 12;
  int n_heads = 17;
  int model_dim = 272;  // smallest multiple of 17 with >= 16 units per head
  int ffn_hidden = 3072;
  int n_bins = 6;     // T, output vector length
  int n_columns = 0;  // d, post-encoding feature count
  std::uint64_t seed = 0;

  void validate() const;
};

// d x (d+1) token matrix: columns 0..d-1 are the identity positional block,
// column d holds the feature value (0 when unavailable).
struct EncodedSample {
  Tensor tokens;
  Mask token_mask;
};

EncodedSample embed_tokens(std::span<const double> values,
                           std::span<const std::uint8_t> available);
EncodedSample embed_tokens(const EncodedCohort& cohort, std::size_t row);

// Per-bin event probabilities from the softmax head; sums to 1.
struct HazardVector {
  std::vector<double> y;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Anything trained by the shared loop: owns named parameters and can build
// its forward pass on a tape given parameter nodes in params() order.
class HazardNet {
 public:
  virtual ~HazardNet() = default;
  virtual std::vector<NamedTensor>& params() = 0;
  virtual const std::vector<NamedTensor>& params() const = 0;
  virtual int output_bins() const = 0;
  virtual Tape::NodeId build_forward(Tape& tape, std::span<const Tape::NodeId> param_nodes,
                                     const EncodedSample& sample) const = 0;

  HazardVector predict(const EncodedSample& sample) const;
  // Prefix sums of the hazard vector: F(s) = sum_{t<=s} y_t.
  std::vector<double> predict_cif(const EncodedSample& sample) const;
};

class TransformerSurvival : public HazardNet {
 public:
  explicit TransformerSurvival(const SurvivalModelConfig& cfg);

  std::vector<NamedTensor>& params() override { return params_; }
  const std::vector<NamedTensor>& params() const override { return params_; }
  int output_bins() const override { return cfg_.n_bins; }
  Tape::NodeId build_forward(Tape& tape, std::span<const Tape::NodeId> param_nodes,
                             const EncodedSample& sample) const override;

  const SurvivalModelConfig& config() const { return cfg_; }

 private:
  SurvivalModelConfig cfg_;
  std::vector<NamedTensor> params_;
};

}  // namespace survt
