#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace splitbench {

/// Dimensions of one tensor. For batched data the leading entry is the
/// batch size; per-sample shapes omit it.
using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);
bool same_shape(const Shape& a, const Shape& b);

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized on demand during backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Accumulates this node's grad into its parents' grads. Empty for leaves.
  std::function<void(TensorNode&)> backprop;
};

}  // namespace detail

/// Dense n-dimensional array of 64-bit reals with reverse-mode autodiff.
///
/// Copying a Tensor copies the handle, not the storage; the underlying node
/// is shared. Graphs are built implicitly by the ops below and freed when
/// the last handle goes away. Single-threaded by design: a tensor may be
/// moved across threads but never mutated concurrently.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  bool requires_grad() const;

  const std::vector<double>& values() const;
  std::vector<double>& values();  // in-place weight updates; leaves only

  bool has_grad() const;
  const std::vector<double>& grad() const;
  void zero_grad();

  /// Value of a one-element tensor.
  double item() const;

  /// Reverse-mode pass seeded with d(loss)/d(loss) = 1. The receiver must
  /// be a one-element tensor produced from a recorded tape.
  void backward();

  /// Reverse-mode pass seeded with an externally supplied gradient, e.g.
  /// the boundary gradient a server sends back across a model split.
  void backward(const std::vector<double>& seed);

  /// A leaf tensor holding a copy of the values, cut off from any tape.
  Tensor detach(bool requires_grad = false) const;

  std::shared_ptr<detail::TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// ---- differentiable ops used by layers and losses ----

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                      int stride, int padding);
Tensor transposed_conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                                 int stride, int padding);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor maxpool2d(const Tensor& x, int kernel, int stride);
Tensor upsample2d_nearest(const Tensor& x, int factor);
/// Reshapes each sample to `per_sample`; the batch dimension is kept.
Tensor reshape_per_sample(const Tensor& x, const Shape& per_sample);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul_scalar(const Tensor& a, double s);
Tensor div(const Tensor& a, const Tensor& b);          // one-element tensors
Tensor sqrt_clamped(const Tensor& a);                  // sqrt(max(v,0)), subgradient 0 at 0
Tensor mean_all(const Tensor& a);
Tensor sum_all(const Tensor& a);

/// Mean cross-entropy of row-wise softmax(logits) against integer labels.
Tensor cross_entropy_softmax(const Tensor& logits, const std::vector<int>& labels);
/// Mean squared error over all elements.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

/// Sample distance correlation between two batches (leading dim = batch).
/// Each sample is flattened to a vector. Returns a differentiable scalar in
/// [0, 1]; by convention 0 when either argument has zero distance variance.
Tensor distance_correlation(const Tensor& x, const Tensor& z);

}  // namespace splitbench
