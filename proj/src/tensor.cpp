#include "survt/tensor.hpp"

#include <cmath>
#include <string>

namespace survt {

namespace {

std::string shape_str(const Tensor& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape[i]);
  }
  return s + ")";
}

std::size_t shape_numel(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)) {
  data.assign(shape_numel(shape), 0.0);
}

Tensor Tensor::scalar(double v) {
  Tensor t({1});
  t.data[0] = v;
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  Tensor t;
  t.shape = {values.size()};
  t.data = std::move(values);
  return t;
}

Tensor Tensor::matrix(std::size_t r, std::size_t c, std::vector<double> values) {
  if (values.size() != r * c)
    throw ShapeError("Tensor::matrix: " + std::to_string(values.size()) +
                     " values for a " + std::to_string(r) + "x" + std::to_string(c) +
                     " matrix");
  Tensor t;
  t.shape = {r, c};
  t.data = std::move(values);
  return t;
}

Tape::NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::constant(Tensor v) {
  Node n;
  n.val = std::move(v);
  return push(std::move(n));
}

Tape::NodeId Tape::param(Tensor v) {
  Node n;
  n.val = std::move(v);
  n.needs_grad = true;
  NodeId id = push(std::move(n));
  params_.push_back(id);
  return id;
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& av = nodes_[a].val;
  const Tensor& bv = nodes_[b].val;
  if (bv.shape.size() != 2 || av.cols() != bv.shape[0])
    throw ShapeError("matmul: " + shape_str(av) + " x " + shape_str(bv));
  const std::size_t r = av.rows(), k = av.cols(), c = bv.shape[1];

  Node n;
  n.op = Op::kMatmul;
  n.a = a;
  n.b = b;
  n.needs_grad = wants_grad(a) || wants_grad(b);
  n.val = av.shape.size() == 1 ? Tensor({c}) : Tensor({r, c});
  const double* A = av.data.data();
  const double* B = bv.data.data();
  double* O = n.val.data.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* arow = A + i * k;
    double* orow = O + i * c;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = arow[kk];
      if (aik == 0.0) continue;  // one-hot token rows are mostly zero
      const double* brow = B + kk * c;
      for (std::size_t j = 0; j < c; ++j) orow[j] += aik * brow[j];
    }
  }
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& av = nodes_[a].val;
  const Tensor& bv = nodes_[b].val;
  if (av.shape != bv.shape)
    throw ShapeError("add: " + shape_str(av) + " vs " + shape_str(bv));
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.needs_grad = wants_grad(a) || wants_grad(b);
  n.val = av;
  for (std::size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] += bv.data[i];
  return push(std::move(n));
}

Tape::NodeId Tape::add_rows(NodeId m, NodeId v) {
  const Tensor& mv = nodes_[m].val;
  const Tensor& vv = nodes_[v].val;
  if (vv.shape.size() != 1 || vv.cols() != mv.cols())
    throw ShapeError("add_rows: " + shape_str(mv) + " vs " + shape_str(vv));
  Node n;
  n.op = Op::kAddRows;
  n.a = m;
  n.b = v;
  n.needs_grad = wants_grad(m) || wants_grad(v);
  n.val = mv;
  const std::size_t r = mv.rows(), c = mv.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) n.val.data[i * c + j] += vv.data[j];
  return push(std::move(n));
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  const Tensor& av = nodes_[a].val;
  const Tensor& bv = nodes_[b].val;
  if (av.shape != bv.shape)
    throw ShapeError("sub: " + shape_str(av) + " vs " + shape_str(bv));
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.needs_grad = wants_grad(a) || wants_grad(b);
  n.val = av;
  for (std::size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] -= bv.data[i];
  return push(std::move(n));
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& av = nodes_[a].val;
  const Tensor& bv = nodes_[b].val;
  if (av.shape != bv.shape)
    throw ShapeError("mul: " + shape_str(av) + " vs " + shape_str(bv));
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.needs_grad = wants_grad(a) || wants_grad(b);
  n.val = av;
  for (std::size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] *= bv.data[i];
  return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, double factor) {
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.s0 = factor;
  n.needs_grad = wants_grad(a);
  n.val = nodes_[a].val;
  for (auto& x : n.val.data) x *= factor;
  return push(std::move(n));
}

Tape::NodeId Tape::add_scalar(NodeId a, double c) {
  Node n;
  n.op = Op::kAddScalar;
  n.a = a;
  n.s0 = c;
  n.needs_grad = wants_grad(a);
  n.val = nodes_[a].val;
  for (auto& x : n.val.data) x += c;
  return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a;
  n.needs_grad = wants_grad(a);
  n.val = nodes_[a].val;
  for (auto& x : n.val.data)
    if (x < 0.0) x = 0.0;
  return push(std::move(n));
}

Tape::NodeId Tape::log(NodeId a) {
  Node n;
  n.op = Op::kLog;
  n.a = a;
  n.needs_grad = wants_grad(a);
  n.val = nodes_[a].val;
  for (auto& x : n.val.data) {
    if (x <= 0.0) throw NumericError("log: non-positive input");
    x = std::log(x);
  }
  return push(std::move(n));
}

Tape::NodeId Tape::log_clamped(NodeId a, double floor) {
  if (floor <= 0.0) throw ConfigError("log_clamped: floor must be positive");
  Node n;
  n.op = Op::kLogClamped;
  n.a = a;
  n.s0 = floor;
  n.needs_grad = wants_grad(a);
  n.val = nodes_[a].val;
  for (auto& x : n.val.data) x = std::log(x > floor ? x : floor);
  return push(std::move(n));
}

Tape::NodeId Tape::exp(NodeId a) {
  Node n;
  n.op = Op::kExp;
  n.a = a;
  n.needs_grad = wants_grad(a);
  n.val = nodes_[a].val;
  for (auto& x : n.val.data) {
    x = std::exp(x);
    if (!std::isfinite(x)) throw NumericError("exp: overflow");
  }
  return push(std::move(n));
}

Tape::NodeId Tape::softmax_with_mask(NodeId a, const Mask& keep) {
  const Tensor& av = nodes_[a].val;
  const std::size_t r = av.rows(), c = av.cols();
  if (keep.size() != c)
    throw ShapeError("softmax_with_mask: mask length " + std::to_string(keep.size()) +
                     " vs row width " + std::to_string(c));
  Node n;
  n.op = Op::kSoftmaxMask;
  n.a = a;
  n.mask = keep;
  n.needs_grad = wants_grad(a);
  n.val = av;
  for (std::size_t i = 0; i < r; ++i) {
    double* row = n.val.data.data() + i * c;
    double mx = -HUGE_VAL;
    for (std::size_t j = 0; j < c; ++j)
      if (keep[j] && row[j] > mx) mx = row[j];
    if (mx == -HUGE_VAL)
      throw MaskError("softmax_with_mask: all positions masked in row " + std::to_string(i));
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      row[j] = keep[j] ? std::exp(row[j] - mx) : 0.0;
      total += row[j];
    }
    const double inv = 1.0 / total;
    for (std::size_t j = 0; j < c; ++j) row[j] *= inv;
  }
  return push(std::move(n));
}

Tape::NodeId Tape::layer_norm(NodeId a, NodeId gain, NodeId bias, double eps) {
  const Tensor& av = nodes_[a].val;
  const Tensor& gv = nodes_[gain].val;
  const Tensor& bv = nodes_[bias].val;
  const std::size_t r = av.rows(), c = av.cols();
  if (gv.numel() != c || bv.numel() != c)
    throw ShapeError("layer_norm: gain/bias width mismatch with " + shape_str(av));
  Node n;
  n.op = Op::kLayerNorm;
  n.a = a;
  n.b = gain;
  n.c = bias;
  n.s0 = eps;
  n.needs_grad = wants_grad(a) || wants_grad(gain) || wants_grad(bias);
  n.val = av;
  for (std::size_t i = 0; i < r; ++i) {
    double* row = n.val.data.data() + i * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= double(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = row[j] - mean;
      var += d * d;
    }
    var /= double(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j)
      row[j] = (row[j] - mean) * inv * gv.data[j] + bv.data[j];
  }
  return push(std::move(n));
}

Tape::NodeId Tape::mean_over_masked_rows(NodeId a, const Mask& keep) {
  const Tensor& av = nodes_[a].val;
  const std::size_t r = av.rows(), c = av.cols();
  if (keep.size() != r)
    throw ShapeError("mean_over_masked_rows: mask length " + std::to_string(keep.size()) +
                     " vs " + std::to_string(r) + " rows");
  std::size_t kept = 0;
  for (auto k : keep) kept += k ? 1 : 0;
  if (kept == 0) throw MaskError("mean_over_masked_rows: empty pool");
  Node n;
  n.op = Op::kMeanMaskedRows;
  n.a = a;
  n.mask = keep;
  n.s0 = 1.0 / double(kept);
  n.needs_grad = wants_grad(a);
  n.val = Tensor({c});
  for (std::size_t i = 0; i < r; ++i) {
    if (!keep[i]) continue;
    const double* row = av.data.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) n.val.data[j] += row[j];
  }
  for (auto& x : n.val.data) x *= n.s0;
  return push(std::move(n));
}

Tape::NodeId Tape::concat_cols(NodeId a, NodeId b) {
  const Tensor& av = nodes_[a].val;
  const Tensor& bv = nodes_[b].val;
  if (av.rows() != bv.rows() || av.shape.size() != bv.shape.size())
    throw ShapeError("concat_cols: " + shape_str(av) + " vs " + shape_str(bv));
  const std::size_t r = av.rows(), ca = av.cols(), cb = bv.cols();
  Node n;
  n.op = Op::kConcatCols;
  n.a = a;
  n.b = b;
  n.i0 = ca;
  n.needs_grad = wants_grad(a) || wants_grad(b);
  n.val = av.shape.size() == 1 ? Tensor({ca + cb}) : Tensor({r, ca + cb});
  for (std::size_t i = 0; i < r; ++i) {
    double* out = n.val.data.data() + i * (ca + cb);
    const double* ra = av.data.data() + i * ca;
    const double* rb = bv.data.data() + i * cb;
    for (std::size_t j = 0; j < ca; ++j) out[j] = ra[j];
    for (std::size_t j = 0; j < cb; ++j) out[ca + j] = rb[j];
  }
  return push(std::move(n));
}

Tape::NodeId Tape::slice_cols(NodeId a, std::size_t begin, std::size_t count) {
  const Tensor& av = nodes_[a].val;
  if (av.shape.size() != 2 || begin + count > av.cols())
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", +" +
                     std::to_string(count) + ") out of " + shape_str(av));
  const std::size_t r = av.rows(), c = av.cols();
  Node n;
  n.op = Op::kSliceCols;
  n.a = a;
  n.i0 = begin;
  n.i1 = count;
  n.needs_grad = wants_grad(a);
  n.val = Tensor({r, count});
  for (std::size_t i = 0; i < r; ++i) {
    const double* src = av.data.data() + i * c + begin;
    double* dst = n.val.data.data() + i * count;
    for (std::size_t j = 0; j < count; ++j) dst[j] = src[j];
  }
  return push(std::move(n));
}

Tape::NodeId Tape::transpose(NodeId a) {
  const Tensor& av = nodes_[a].val;
  if (av.shape.size() != 2) throw ShapeError("transpose: expected a matrix, got " + shape_str(av));
  const std::size_t r = av.shape[0], c = av.shape[1];
  Node n;
  n.op = Op::kTranspose;
  n.a = a;
  n.needs_grad = wants_grad(a);
  n.val = Tensor({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) n.val.data[j * r + i] = av.data[i * c + j];
  return push(std::move(n));
}

Tape::NodeId Tape::cumsum(NodeId a) {
  const Tensor& av = nodes_[a].val;
  if (av.shape.size() != 1) throw ShapeError("cumsum: expected a 1-D tensor, got " + shape_str(av));
  Node n;
  n.op = Op::kCumsum;
  n.a = a;
  n.needs_grad = wants_grad(a);
  n.val = av;
  double run = 0.0;
  for (auto& x : n.val.data) {
    run += x;
    x = run;
  }
  return push(std::move(n));
}

Tape::NodeId Tape::pick(NodeId a, std::size_t flat_index) {
  const Tensor& av = nodes_[a].val;
  if (flat_index >= av.numel())
    throw ShapeError("pick: index " + std::to_string(flat_index) + " out of " + shape_str(av));
  Node n;
  n.op = Op::kPick;
  n.a = a;
  n.i0 = flat_index;
  n.needs_grad = wants_grad(a);
  n.val = Tensor::scalar(av.data[flat_index]);
  return push(std::move(n));
}

Tape::NodeId Tape::sum(NodeId a) {
  const Tensor& av = nodes_[a].val;
  Node n;
  n.op = Op::kSum;
  n.a = a;
  n.needs_grad = wants_grad(a);
  double total = 0.0;
  for (auto x : av.data) total += x;
  n.val = Tensor::scalar(total);
  return push(std::move(n));
}

Tensor& Tape::grad_buffer(NodeId id) {
  Tensor& g = grads_[id];
  if (g.data.empty()) g = Tensor::zeros(nodes_[id].val.shape);
  return g;
}

void Tape::backward(NodeId loss) {
  if (backward_done_) throw Error("backward: already called on this tape");
  if (!nodes_[loss].val.is_scalar())
    throw ShapeError("backward: loss must be a scalar, got " + shape_str(nodes_[loss].val));
  backward_done_ = true;
  grads_.assign(nodes_.size(), Tensor{});
  grad_buffer(loss).data[0] = 1.0;
  for (NodeId id = loss + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.needs_grad || n.op == Op::kLeaf) continue;
    if (grads_[id].data.empty()) continue;  // never reached from the loss
    backprop_node(id);
  }
  // Parameters untouched by the loss still report a (zero) gradient.
  for (NodeId p : params_) grad_buffer(p);
}

void Tape::backprop_node(NodeId id) {
  Node& n = nodes_[id];
  const Tensor& g = grads_[id];
  switch (n.op) {
    case Op::kMatmul: {
      const Tensor& av = nodes_[n.a].val;
      const Tensor& bv = nodes_[n.b].val;
      const std::size_t r = av.rows(), k = av.cols(), c = bv.shape[1];
      if (wants_grad(n.a)) {
        Tensor& da = grad_buffer(n.a);
        for (std::size_t i = 0; i < r; ++i) {
          const double* grow = g.data.data() + i * c;
          double* darow = da.data.data() + i * k;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double* brow = bv.data.data() + kk * c;
            double acc = 0.0;
            for (std::size_t j = 0; j < c; ++j) acc += grow[j] * brow[j];
            darow[kk] += acc;
          }
        }
      }
      if (wants_grad(n.b)) {
        Tensor& db = grad_buffer(n.b);
        for (std::size_t i = 0; i < r; ++i) {
          const double* arow = av.data.data() + i * k;
          const double* grow = g.data.data() + i * c;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            if (aik == 0.0) continue;
            double* dbrow = db.data.data() + kk * c;
            for (std::size_t j = 0; j < c; ++j) dbrow[j] += aik * grow[j];
          }
        }
      }
      break;
    }
    case Op::kAdd: {
      for (NodeId side : {n.a, n.b}) {
        if (!wants_grad(side)) continue;
        Tensor& d = grad_buffer(side);
        for (std::size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i];
      }
      break;
    }
    case Op::kAddRows: {
      const std::size_t r = nodes_[n.a].val.rows(), c = nodes_[n.a].val.cols();
      if (wants_grad(n.a)) {
        Tensor& d = grad_buffer(n.a);
        for (std::size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i];
      }
      if (wants_grad(n.b)) {
        Tensor& d = grad_buffer(n.b);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) d.data[j] += g.data[i * c + j];
      }
      break;
    }
    case Op::kSub: {
      if (wants_grad(n.a)) {
        Tensor& d = grad_buffer(n.a);
        for (std::size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i];
      }
      if (wants_grad(n.b)) {
        Tensor& d = grad_buffer(n.b);
        for (std::size_t i = 0; i < g.data.size(); ++i) d.data[i] -= g.data[i];
      }
      break;
    }
    case Op::kMul: {
      const Tensor& av = nodes_[n.a].val;
      const Tensor& bv = nodes_[n.b].val;
      if (wants_grad(n.a)) {
        Tensor& d = grad_buffer(n.a);
        for (std::size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i] * bv.data[i];
      }
      if (wants_grad(n.b)) {
        Tensor& d = grad_buffer(n.b);
        for (std::size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i] * av.data[i];
      }
      break;
    }
    case Op::kScale: {
      Tensor& d = grad_buffer(n.a);
      for (std::size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i] * n.s0;
      break;
    }
    case Op::kAddScalar: {
      Tensor& d = grad_buffer(n.a);
      for (std::size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i];
      break;
    }
    case Op::kRelu: {
      const Tensor& av = nodes_[n.a].val;
      Tensor& d = grad_buffer(n.a);
      for (std::size_t i = 0; i < g.data.size(); ++i)
        if (av.data[i] > 0.0) d.data[i] += g.data[i];
      break;
    }
    case Op::kLog: {
      const Tensor& av = nodes_[n.a].val;
      Tensor& d = grad_buffer(n.a);
      for (std::size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i] / av.data[i];
      break;
    }
    case Op::kLogClamped: {
      const Tensor& av = nodes_[n.a].val;
      Tensor& d = grad_buffer(n.a);
      for (std::size_t i = 0; i < g.data.size(); ++i)
        if (av.data[i] > n.s0) d.data[i] += g.data[i] / av.data[i];
      break;
    }
    case Op::kExp: {
      Tensor& d = grad_buffer(n.a);
      for (std::size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i] * n.val.data[i];
      break;
    }
    case Op::kSoftmaxMask: {
      const std::size_t r = n.val.rows(), c = n.val.cols();
      Tensor& d = grad_buffer(n.a);
      for (std::size_t i = 0; i < r; ++i) {
        const double* p = n.val.data.data() + i * c;
        const double* gr = g.data.data() + i * c;
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += p[j] * gr[j];
        double* drow = d.data.data() + i * c;
        for (std::size_t j = 0; j < c; ++j)
          if (n.mask[j]) drow[j] += p[j] * (gr[j] - dot);
      }
      break;
    }
    case Op::kLayerNorm: {
      const Tensor& av = nodes_[n.a].val;
      const Tensor& gv = nodes_[n.b].val;
      const std::size_t r = av.rows(), c = av.cols();
      const double eps = n.s0;
      const bool need_a = wants_grad(n.a);
      const bool need_g = wants_grad(n.b);
      const bool need_b = wants_grad(n.c);
      for (std::size_t i = 0; i < r; ++i) {
        const double* x = av.data.data() + i * c;
        const double* gr = g.data.data() + i * c;
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += x[j];
        mean /= double(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          const double dd = x[j] - mean;
          var += dd * dd;
        }
        var /= double(c);
        const double inv = 1.0 / std::sqrt(var + eps);
        if (need_g) {
          Tensor& dg = grad_buffer(n.b);
          for (std::size_t j = 0; j < c; ++j) dg.data[j] += gr[j] * (x[j] - mean) * inv;
        }
        if (need_b) {
          Tensor& db = grad_buffer(n.c);
          for (std::size_t j = 0; j < c; ++j) db.data[j] += gr[j];
        }
        if (need_a) {
          // dxhat_j = gr_j * gain_j; dx via the standard two-sum form.
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            const double dxh = gr[j] * gv.data[j];
            const double xh = (x[j] - mean) * inv;
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh;
          }
          Tensor& da = grad_buffer(n.a);
          double* darow = da.data.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) {
            const double dxh = gr[j] * gv.data[j];
            const double xh = (x[j] - mean) * inv;
            darow[j] += inv * (dxh - (sum_dxhat + xh * sum_dxhat_xhat) / double(c));
          }
        }
      }
      break;
    }
    case Op::kMeanMaskedRows: {
      const std::size_t r = nodes_[n.a].val.rows(), c = nodes_[n.a].val.cols();
      Tensor& d = grad_buffer(n.a);
      for (std::size_t i = 0; i < r; ++i) {
        if (!n.mask[i]) continue;
        double* drow = d.data.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) drow[j] += g.data[j] * n.s0;
      }
      break;
    }
    case Op::kConcatCols: {
      const std::size_t r = n.val.rows(), ca = n.i0, cb = n.val.cols() - n.i0;
      if (wants_grad(n.a)) {
        Tensor& d = grad_buffer(n.a);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < ca; ++j) d.data[i * ca + j] += g.data[i * (ca + cb) + j];
      }
      if (wants_grad(n.b)) {
        Tensor& d = grad_buffer(n.b);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < cb; ++j)
            d.data[i * cb + j] += g.data[i * (ca + cb) + ca + j];
      }
      break;
    }
    case Op::kSliceCols: {
      const std::size_t r = n.val.rows(), c = nodes_[n.a].val.cols();
      Tensor& d = grad_buffer(n.a);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n.i1; ++j)
          d.data[i * c + n.i0 + j] += g.data[i * n.i1 + j];
      break;
    }
    case Op::kTranspose: {
      const std::size_t out_r = n.val.shape[0], out_c = n.val.shape[1];
      Tensor& d = grad_buffer(n.a);  // shaped {out_c, out_r}
      for (std::size_t i = 0; i < out_r; ++i)
        for (std::size_t j = 0; j < out_c; ++j)
          d.data[j * out_r + i] += g.data[i * out_c + j];
      break;
    }
    case Op::kCumsum: {
      Tensor& d = grad_buffer(n.a);
      double run = 0.0;
      for (std::size_t i = g.data.size(); i-- > 0;) {
        run += g.data[i];
        d.data[i] += run;
      }
      break;
    }
    case Op::kPick: {
      Tensor& d = grad_buffer(n.a);
      d.data[n.i0] += g.data[0];
      break;
    }
    case Op::kSum: {
      Tensor& d = grad_buffer(n.a);
      for (auto& x : d.data) x += g.data[0];
      break;
    }
    case Op::kLeaf:
      break;
  }
}

const Tensor& Tape::grad(NodeId id) const {
  if (!backward_done_) throw Error("grad: backward has not run");
  if (grads_[id].data.empty())
    throw Error("grad: no gradient recorded for node " + std::to_string(id));
  return grads_[id];
}

void Tape::reset() {
  nodes_.clear();
  grads_.clear();
  params_.clear();
  backward_done_ = false;
}

double gradient_check(const std::function<Tape::NodeId(Tape&, Tape::NodeId)>& f,
                      const Tensor& x, double step) {
  if (step < 1e-6 || step > 1e-3)
    throw ConfigError("gradient_check: step must lie in [1e-6, 1e-3]");
  Tape tape;
  const Tape::NodeId xs = tape.param(x);
  const Tape::NodeId loss = f(tape, xs);
  if (!tape.value(loss).is_scalar())
    throw ShapeError("gradient_check: f must produce a scalar");
  tape.backward(loss);
  const Tensor analytic = tape.grad(xs);

  auto eval = [&](const Tensor& xv) {
    Tape t;
    const Tape::NodeId id = t.param(xv);
    const double v = t.value(f(t, id)).data[0];
    if (!std::isfinite(v)) throw NumericError("gradient_check: non-finite function value");
    return v;
  };

  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    probe.data[i] = x.data[i] + step;
    const double fp = eval(probe);
    probe.data[i] = x.data[i] - step;
    const double fm = eval(probe);
    probe.data[i] = x.data[i];
    const double numeric = (fp - fm) / (2.0 * step);
    const double a = analytic.data[i];
    const double rel = std::fabs(a - numeric) / (std::fabs(a) + std::fabs(numeric) + 1e-12);
    if (rel > worst) worst = rel;
  }
  return worst;
}

}  // namespace survt
