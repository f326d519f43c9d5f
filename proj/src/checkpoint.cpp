#include "survt/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace survt {

namespace {

constexpr char kMagic[8] = {'S', 'V', 'T', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_str(std::ostream& out, const std::string& s) {
  write_u32(out, std::uint32_t(s.size()));
  out.write(s.data(), std::streamsize(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::string read_str(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), std::streamsize(n));
  return s;
}

void write_preprocessor(std::ostream& out, const Preprocessor& pp) {
  write_f64(out, pp.unit_months());
  write_f64(out, pp.horizon_months());
  write_u32(out, std::uint32_t(pp.n_bins()));
  write_u32(out, std::uint32_t(pp.column_stats().size()));
  for (const auto& c : pp.column_stats()) {
    write_str(out, c.name);
    write_u32(out, c.kind == ColumnKind::kContinuous ? 0 : 1);
    write_f64(out, c.mean);
    write_f64(out, c.stddev);
    write_u32(out, std::uint32_t(c.categories.size()));
    for (const auto& cat : c.categories) write_str(out, cat);
    write_u64(out, c.out_begin);
    write_u64(out, c.out_count);
  }
}

Preprocessor read_preprocessor(std::istream& in) {
  const double unit = read_f64(in);
  const double horizon = read_f64(in);
  const int bins = int(read_u32(in));
  const std::uint32_t n_cols = read_u32(in);
  std::vector<Preprocessor::ColumnStats> cols;
  for (std::uint32_t i = 0; i < n_cols; ++i) {
    Preprocessor::ColumnStats c;
    c.name = read_str(in);
    c.kind = read_u32(in) == 0 ? ColumnKind::kContinuous : ColumnKind::kCategorical;
    c.mean = read_f64(in);
    c.stddev = read_f64(in);
    const std::uint32_t n_cats = read_u32(in);
    for (std::uint32_t k = 0; k < n_cats; ++k) c.categories.push_back(read_str(in));
    c.out_begin = std::size_t(read_u64(in));
    c.out_count = std::size_t(read_u64(in));
    cols.push_back(std::move(c));
  }
  return Preprocessor::from_parts(std::move(cols), unit, horizon, bins);
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& model_kind,
                     const HazardNet& model, const Preprocessor& preprocessor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("save_checkpoint: cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kFormatVersion);
  write_str(out, model_kind);

  if (model_kind == "transformer") {
    const auto& cfg = dynamic_cast<const TransformerSurvival&>(model).config();
    write_u32(out, std::uint32_t(cfg.n_layers));
    write_u32(out, std::uint32_t(cfg.n_heads));
    write_u32(out, std::uint32_t(cfg.model_dim));
    write_u32(out, std::uint32_t(cfg.ffn_hidden));
    write_u32(out, std::uint32_t(cfg.n_bins));
    write_u32(out, std::uint32_t(cfg.n_columns));
    write_u64(out, cfg.seed);
  } else if (model_kind == "mlp") {
    const auto& cfg = dynamic_cast<const MlpHazard&>(model).config();
    write_u32(out, std::uint32_t(cfg.input_dim));
    write_u32(out, std::uint32_t(cfg.hidden.size()));
    for (int h : cfg.hidden) write_u32(out, std::uint32_t(h));
    write_u32(out, std::uint32_t(cfg.n_bins));
    write_u64(out, cfg.seed);
  } else {
    throw ConfigError("save_checkpoint: unknown model kind '" + model_kind + "'");
  }

  write_preprocessor(out, preprocessor);

  write_u32(out, std::uint32_t(model.params().size()));
  for (const auto& p : model.params()) {
    write_str(out, p.name);
    write_u32(out, std::uint32_t(p.value.shape.size()));
    for (auto d : p.value.shape) write_u64(out, d);
    for (double v : p.value.data) write_f64(out, v);
  }
  if (!out) throw SchemaError("save_checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("load_checkpoint: cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw SchemaError("load_checkpoint: '" + path + "' is not a checkpoint file");
  const std::uint32_t version = read_u32(in);
  if (version != kFormatVersion)
    throw SchemaError("load_checkpoint: unsupported format version " + std::to_string(version));

  Checkpoint ck;
  ck.model_kind = read_str(in);
  if (ck.model_kind == "transformer") {
    SurvivalModelConfig cfg;
    cfg.n_layers = int(read_u32(in));
    cfg.n_heads = int(read_u32(in));
    cfg.model_dim = int(read_u32(in));
    cfg.ffn_hidden = int(read_u32(in));
    cfg.n_bins = int(read_u32(in));
    cfg.n_columns = int(read_u32(in));
    cfg.seed = read_u64(in);
    ck.transformer_config = cfg;
    ck.model = std::make_unique<TransformerSurvival>(cfg);
  } else if (ck.model_kind == "mlp") {
    MlpConfig cfg;
    cfg.input_dim = int(read_u32(in));
    const std::uint32_t n_hidden = read_u32(in);
    cfg.hidden.clear();
    for (std::uint32_t i = 0; i < n_hidden; ++i) cfg.hidden.push_back(int(read_u32(in)));
    cfg.n_bins = int(read_u32(in));
    cfg.seed = read_u64(in);
    ck.mlp_config = cfg;
    ck.model = std::make_unique<MlpHazard>(cfg);
  } else {
    throw SchemaError("load_checkpoint: unknown model kind '" + ck.model_kind + "'");
  }

  ck.preprocessor = read_preprocessor(in);

  const std::uint32_t n_params = read_u32(in);
  auto& params = ck.model->params();
  if (n_params != params.size())
    throw SchemaError("load_checkpoint: parameter count mismatch");
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = read_str(in);
    if (name != params[i].name)
      throw SchemaError("load_checkpoint: unexpected parameter '" + name + "'");
    const std::uint32_t ndim = read_u32(in);
    std::vector<std::size_t> shape;
    for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(std::size_t(read_u64(in)));
    if (shape != params[i].value.shape)
      throw SchemaError("load_checkpoint: shape mismatch for '" + name + "'");
    for (auto& v : params[i].value.data) v = read_f64(in);
  }
  if (!in) throw SchemaError("load_checkpoint: truncated file '" + path + "'");
  return ck;
}

}  // namespace survt
