#include "survt/mlp.hpp"

#include <cmath>

#include "survt/rng.hpp"

namespace survt {

void MlpConfig::validate() const {
  if (input_dim < 1) throw ConfigError("mlp config: input_dim must be >= 1");
  if (n_bins < 2) throw ConfigError("mlp config: n_bins must be >= 2");
  for (int h : hidden)
    if (h < 1) throw ConfigError("mlp config: hidden sizes must be >= 1");
}

MlpHazard::MlpHazard(const MlpConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  std::size_t in = std::size_t(cfg_.input_dim);
  int idx = 0;
  for (int h : cfg_.hidden) {
    Tensor w({in, std::size_t(h)});
    const double limit = std::sqrt(6.0 / double(in + std::size_t(h)));
    for (auto& v : w.data) v = rng.uniform(-limit, limit);
    params_.push_back({"fc" + std::to_string(idx) + ".w", std::move(w)});
    params_.push_back({"fc" + std::to_string(idx) + ".b", Tensor({std::size_t(h)})});
    in = std::size_t(h);
    ++idx;
  }
  Tensor w({in, std::size_t(cfg_.n_bins)});
  const double limit = std::sqrt(6.0 / double(in + std::size_t(cfg_.n_bins)));
  for (auto& v : w.data) v = rng.uniform(-limit, limit);
  params_.push_back({"head.w", std::move(w)});
  params_.push_back({"head.b", Tensor({std::size_t(cfg_.n_bins)})});
}

Tape::NodeId MlpHazard::build_forward(Tape& t, std::span<const Tape::NodeId> p,
                                      const EncodedSample& sample) const {
  const std::size_t d = sample.tokens.rows();
  if (d != std::size_t(cfg_.input_dim))
    throw ShapeError("mlp forward: sample width does not match input_dim");
  if (p.size() != params_.size()) throw ShapeError("mlp forward: wrong parameter node count");
  // Value column only; missing cells are zeros, so imputed data is expected.
  Tensor values({d});
  for (std::size_t i = 0; i < d; ++i) values.data[i] = sample.tokens.at(i, d);
  Tape::NodeId h = t.constant(std::move(values));
  std::size_t off = 0;
  for (std::size_t l = 0; l < cfg_.hidden.size(); ++l, off += 2)
    h = t.relu(t.add(t.matmul(h, p[off]), p[off + 1]));
  const Tape::NodeId logits = t.add(t.matmul(h, p[off]), p[off + 1]);
  const Mask all_bins(std::size_t(cfg_.n_bins), 1);
  return t.softmax_with_mask(logits, all_bins);
}

}  // namespace survt
