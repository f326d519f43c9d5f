#pragma once

// Dense 64-bit float tensors plus a reverse-mode differentiation tape limited
// to the primitives the survival encoder needs. Data is row-major; a 1-D
// tensor acts as a row vector wherever a matrix operand is expected.
//
// Masking happens inside softmax_with_mask (pre-activation set to -inf), so
// masked positions carry weight exactly 0 and receive exactly zero gradient.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "survt/errors.hpp"

namespace survt {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);

  static Tensor zeros(std::vector<std::size_t> dims) { return Tensor(std::move(dims)); }
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> values);
  static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> values);

  std::size_t numel() const { return data.size(); }
  bool is_scalar() const { return numel() == 1; }
  // 2-D accessors; a 1-D tensor behaves as a single row.
  std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
  std::size_t cols() const { return shape.empty() ? 0 : shape.back(); }
  double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
};

// Availability / keep mask; nonzero means kept.
using Mask = std::vector<std::uint8_t>;

inline constexpr double kLayerNormEps = 1e-5;

class Tape {
 public:
  using NodeId = std::uint32_t;

  // Leaves. Constants are excluded from gradient propagation.
  NodeId constant(Tensor v);
  NodeId param(Tensor v);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);       // same shape
  NodeId add_rows(NodeId m, NodeId v);  // broadcast 1-D v over the rows of m
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  NodeId scale(NodeId a, double factor);
  NodeId add_scalar(NodeId a, double c);
  NodeId relu(NodeId a);
  NodeId log(NodeId a);  // NumericError on non-positive input
  // log(max(x, floor)); gradient is zero inside the clamp region.
  NodeId log_clamped(NodeId a, double floor);
  NodeId exp(NodeId a);
  // Row-wise softmax; entries with keep==0 get -inf pre-activation, hence
  // weight exactly 0. A row with no kept entries raises MaskError.
  NodeId softmax_with_mask(NodeId a, const Mask& keep);
  // Normalizes the last axis to zero mean / unit variance, then applies the
  // learned gain and bias (both 1-D of the row width).
  NodeId layer_norm(NodeId a, NodeId gain, NodeId bias, double eps = kLayerNormEps);
  // Mean over rows with keep!=0; raises MaskError when no row is kept.
  NodeId mean_over_masked_rows(NodeId a, const Mask& keep);
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId slice_cols(NodeId a, std::size_t begin, std::size_t count);
  NodeId transpose(NodeId a);
  NodeId cumsum(NodeId a);                        // 1-D prefix sums
  NodeId pick(NodeId a, std::size_t flat_index);  // single element as a scalar
  NodeId sum(NodeId a);

  const Tensor& value(NodeId id) const { return nodes_[id].val; }

  // Reverse-mode accumulation from a scalar loss. One call per tape; every
  // param node gets a gradient afterwards (zero if the loss never saw it).
  void backward(NodeId loss);
  const Tensor& grad(NodeId id) const;

  std::size_t size() const { return nodes_.size(); }
  void reset();  // drop all nodes, keep capacity

 private:
  enum class Op : std::uint8_t {
    kLeaf, kMatmul, kAdd, kAddRows, kSub, kMul, kScale, kAddScalar, kRelu,
    kLog, kLogClamped, kExp, kSoftmaxMask, kLayerNorm, kMeanMaskedRows,
    kConcatCols, kSliceCols, kTranspose, kCumsum, kPick, kSum,
  };
  struct Node {
    Op op = Op::kLeaf;
    NodeId a = 0, b = 0, c = 0;
    double s0 = 0.0;
    std::size_t i0 = 0, i1 = 0;
    Mask mask;
    Tensor val;
    bool needs_grad = false;
  };

  NodeId push(Node n);
  bool wants_grad(NodeId id) const { return nodes_[id].needs_grad; }
  Tensor& grad_buffer(NodeId id);
  void backprop_node(NodeId id);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<NodeId> params_;
  bool backward_done_ = false;
};

// Max relative error between the tape gradient of f at x and central
// differences with the given step: max_i |g_i - n_i| / (|g_i| + |n_i| + 1e-12).
// f must build a scalar from the node it is handed.
double gradient_check(const std::function<Tape::NodeId(Tape&, Tape::NodeId)>& f,
                      const Tensor& x, double step);

}  // namespace survt
