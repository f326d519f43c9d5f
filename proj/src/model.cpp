#include "survt/model.hpp"

#include <cmath>

#include "survt/rng.hpp"

namespace survt {

void SurvivalModelConfig::validate() const {
  if (n_layers < 1) throw ConfigError("model config: n_layers must be >= 1");
  if (n_heads < 1) throw ConfigError("model config: n_heads must be >= 1");
  if (model_dim < 1 || model_dim % n_heads != 0)
    throw ConfigError("model config: model_dim must be a positive multiple of n_heads");
  if (ffn_hidden < 1) throw ConfigError("model config: ffn_hidden must be >= 1");
  if (n_bins < 2) throw ConfigError("model config: n_bins must be >= 2");
  if (n_columns < 1) throw ConfigError("model config: n_columns must be >= 1");
}

EncodedSample embed_tokens(std::span<const double> values,
                           std::span<const std::uint8_t> available) {
  if (values.size() != available.size())
    throw ShapeError("embed_tokens: values and availability lengths differ");
  const std::size_t d = values.size();
  EncodedSample s;
  s.tokens = Tensor({d, d + 1});
  s.token_mask.assign(available.begin(), available.end());
  for (std::size_t i = 0; i < d; ++i) {
    s.tokens.at(i, i) = 1.0;
    s.tokens.at(i, d) = available[i] ? values[i] : 0.0;
  }
  return s;
}

EncodedSample embed_tokens(const EncodedCohort& cohort, std::size_t row) {
  return embed_tokens(cohort.row_values(row), cohort.row_available(row));
}

HazardVector HazardNet::predict(const EncodedSample& sample) const {
  Tape tape;
  std::vector<Tape::NodeId> nodes;
  nodes.reserve(params().size());
  for (const auto& p : params()) nodes.push_back(tape.constant(p.value));
  const Tape::NodeId y = build_forward(tape, nodes, sample);
  return HazardVector{tape.value(y).data};
}

std::vector<double> HazardNet::predict_cif(const EncodedSample& sample) const {
  std::vector<double> cif = predict(sample).y;
  for (std::size_t t = 1; t < cif.size(); ++t) cif[t] += cif[t - 1];
  return cif;
}

namespace {

Tensor xavier_matrix(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor w({fan_in, fan_out});
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  for (auto& v : w.data) v = rng.uniform(-limit, limit);
  return w;
}

Tensor ones_row(std::size_t n) {
  Tensor t({n});
  for (auto& v : t.data) v = 1.0;
  return t;
}

}  // namespace

TransformerSurvival::TransformerSurvival(const SurvivalModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const std::size_t d = std::size_t(cfg_.n_columns);
  const std::size_t dm = std::size_t(cfg_.model_dim);
  const std::size_t ffn = std::size_t(cfg_.ffn_hidden);
  const std::size_t bins = std::size_t(cfg_.n_bins);

  auto mat = [&](const std::string& name, std::size_t in, std::size_t out) {
    params_.push_back({name, xavier_matrix(in, out, rng)});
  };
  auto zero_vec = [&](const std::string& name, std::size_t n) {
    params_.push_back({name, Tensor({n})});
  };
  auto one_vec = [&](const std::string& name, std::size_t n) {
    params_.push_back({name, ones_row(n)});
  };

  mat("token_proj.w", d + 1, dm);
  zero_vec("token_proj.b", dm);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    one_vec(pre + "ln1.gain", dm);
    zero_vec(pre + "ln1.bias", dm);
    mat(pre + "attn.wq", dm, dm);
    zero_vec(pre + "attn.bq", dm);
    // No key bias: a shared shift on every key cancels inside the row
    // softmax, so the parameter could never influence the output.
    mat(pre + "attn.wk", dm, dm);
    mat(pre + "attn.wv", dm, dm);
    zero_vec(pre + "attn.bv", dm);
    mat(pre + "attn.wo", dm, dm);
    zero_vec(pre + "attn.bo", dm);
    one_vec(pre + "ln2.gain", dm);
    zero_vec(pre + "ln2.bias", dm);
    mat(pre + "ffn.w1", dm, ffn);
    zero_vec(pre + "ffn.b1", ffn);
    mat(pre + "ffn.w2", ffn, dm);
    zero_vec(pre + "ffn.b2", dm);
  }
  one_vec("final_ln.gain", dm);
  zero_vec("final_ln.bias", dm);
  mat("head.w", dm, bins);
  zero_vec("head.b", bins);
}

Tape::NodeId TransformerSurvival::build_forward(Tape& t, std::span<const Tape::NodeId> p,
                                                const EncodedSample& sample) const {
  const std::size_t d = std::size_t(cfg_.n_columns);
  if (sample.token_mask.size() != d || sample.tokens.rows() != d ||
      sample.tokens.cols() != d + 1)
    throw ShapeError("forward: sample does not match the configured feature count");
  bool any = false;
  for (auto m : sample.token_mask) any = any || m;
  if (!any) throw MaskError("forward: no available features");
  if (p.size() != params_.size()) throw ShapeError("forward: wrong parameter node count");

  const int heads = cfg_.n_heads;
  const std::size_t dk = std::size_t(cfg_.model_dim) / std::size_t(heads);
  const double att_scale = 1.0 / std::sqrt(double(dk));

  const Tape::NodeId x = t.constant(sample.tokens);
  Tape::NodeId h = t.add_rows(t.matmul(x, p[0]), p[1]);
  std::size_t off = 2;
  for (int l = 0; l < cfg_.n_layers; ++l, off += 15) {
    // Pre-norm attention block with the availability mask on the keys.
    const Tape::NodeId n1 = t.layer_norm(h, p[off + 0], p[off + 1]);
    const Tape::NodeId q = t.add_rows(t.matmul(n1, p[off + 2]), p[off + 3]);
    const Tape::NodeId k = t.matmul(n1, p[off + 4]);
    const Tape::NodeId v = t.add_rows(t.matmul(n1, p[off + 5]), p[off + 6]);
    Tape::NodeId ctx = 0;
    for (int head = 0; head < heads; ++head) {
      const std::size_t begin = std::size_t(head) * dk;
      const Tape::NodeId qh = t.slice_cols(q, begin, dk);
      const Tape::NodeId kh = t.slice_cols(k, begin, dk);
      const Tape::NodeId vh = t.slice_cols(v, begin, dk);
      const Tape::NodeId scores = t.scale(t.matmul(qh, t.transpose(kh)), att_scale);
      const Tape::NodeId attn = t.softmax_with_mask(scores, sample.token_mask);
      const Tape::NodeId head_ctx = t.matmul(attn, vh);
      ctx = head == 0 ? head_ctx : t.concat_cols(ctx, head_ctx);
    }
    h = t.add(h, t.add_rows(t.matmul(ctx, p[off + 7]), p[off + 8]));
    // Pre-norm position-wise feed-forward block.
    const Tape::NodeId n2 = t.layer_norm(h, p[off + 9], p[off + 10]);
    const Tape::NodeId hidden = t.relu(t.add_rows(t.matmul(n2, p[off + 11]), p[off + 12]));
    h = t.add(h, t.add_rows(t.matmul(hidden, p[off + 13]), p[off + 14]));
  }
  const Tape::NodeId fin = t.layer_norm(h, p[off], p[off + 1]);
  const Tape::NodeId pooled = t.mean_over_masked_rows(fin, sample.token_mask);
  const Tape::NodeId logits = t.add(t.matmul(pooled, p[off + 2]), p[off + 3]);
  const Mask all_bins(std::size_t(cfg_.n_bins), 1);
  return t.softmax_with_mask(logits, all_bins);
}

}  // namespace survt
