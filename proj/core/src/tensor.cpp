#include "splitbench/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace splitbench {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

void ensure_grad(TensorNode& n) {
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
}

NodePtr make_node(Shape shape, std::vector<double> value,
                  std::vector<NodePtr> parents,
                  std::function<void(TensorNode&)> backprop) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  for (const auto& p : parents) needs = needs || (p && p->requires_grad);
  node->requires_grad = needs;
  if (needs) {
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
  }
  return node;
}

const TensorNode& req(const Tensor& t, const char* what) {
  if (!t.defined()) throw std::invalid_argument(std::string(what) + ": undefined tensor");
  return *t.node();
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " wants " +
                                std::to_string(numel(shape)) + " values, got " +
                                std::to_string(values.size()));
  }
  node_ = std::make_shared<detail::TensorNode>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return Tensor(shape, std::vector<double>(numel(shape), 0.0), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor(Shape{}, std::vector<double>{v}, requires_grad);
}

const Shape& Tensor::shape() const { return req(*this, "shape").shape; }
std::size_t Tensor::size() const { return req(*this, "size").value.size(); }
bool Tensor::requires_grad() const { return req(*this, "requires_grad").requires_grad; }

const std::vector<double>& Tensor::values() const { return req(*this, "values").value; }
std::vector<double>& Tensor::values() { return node_->value; }

bool Tensor::has_grad() const {
  return defined() && node_->grad.size() == node_->value.size();
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) throw std::runtime_error("grad: no gradient recorded for this tensor");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (defined()) node_->grad.clear();
}

double Tensor::item() const {
  const auto& n = req(*this, "item");
  if (n.value.size() != 1) {
    throw std::invalid_argument("item: tensor has " + std::to_string(n.value.size()) +
                                " elements, expected 1");
  }
  return n.value[0];
}

void Tensor::backward() {
  if (size() != 1) {
    throw std::invalid_argument("backward: loss must be a one-element tensor, got shape " +
                                shape_str(shape()));
  }
  backward(std::vector<double>{1.0});
}

void Tensor::backward(const std::vector<double>& seed) {
  if (!defined()) throw std::invalid_argument("backward: undefined tensor");
  detail::TensorNode& root = *node_;
  if (!root.backprop && root.parents.empty() && !root.requires_grad) {
    throw std::runtime_error("backward: tensor has no recorded tape");
  }
  if (seed.size() != root.value.size()) {
    throw std::invalid_argument("backward: seed gradient has " + std::to_string(seed.size()) +
                                " elements, tensor has " + std::to_string(root.value.size()));
  }

  // Iterative DFS topological order over parents.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  struct Frame {
    TensorNode* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({node_.get(), 0});
  seen.insert(node_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TensorNode* p = f.node->parents[f.next_parent++].get();
      if (p && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  ensure_grad(root);
  for (std::size_t i = 0; i < seed.size(); ++i) root.grad[i] += seed[i];

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backprop) {
      ensure_grad(*n);
      n->backprop(*n);
    }
  }
}

Tensor Tensor::detach(bool requires_grad) const {
  const auto& n = req(*this, "detach");
  return Tensor(n.shape, n.value, requires_grad);
}

// ---------------------------------------------------------------------------
// elementwise and reduction ops
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  const auto& an = req(a, "add");
  const auto& bn = req(b, "add");
  if (!same_shape(an.shape, bn.shape)) {
    throw std::invalid_argument("add: shape mismatch " + shape_str(an.shape) + " vs " +
                                shape_str(bn.shape));
  }
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an.value[i] + bn.value[i];
  auto pa = a.node();
  auto pb = b.node();
  return Tensor(make_node(an.shape, std::move(out), {pa, pb}, [pa, pb](TensorNode& self) {
    if (pa->requires_grad) {
      ensure_grad(*pa);
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      ensure_grad(*pb);
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i];
    }
  }));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto& an = req(a, "mul");
  const auto& bn = req(b, "mul");
  if (!same_shape(an.shape, bn.shape)) {
    throw std::invalid_argument("mul: shape mismatch " + shape_str(an.shape) + " vs " +
                                shape_str(bn.shape));
  }
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an.value[i] * bn.value[i];
  auto pa = a.node();
  auto pb = b.node();
  return Tensor(make_node(an.shape, std::move(out), {pa, pb}, [pa, pb](TensorNode& self) {
    if (pa->requires_grad) {
      ensure_grad(*pa);
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      ensure_grad(*pb);
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->value[i];
    }
  }));
}

Tensor mul_scalar(const Tensor& a, double s) {
  const auto& an = req(a, "mul_scalar");
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an.value[i] * s;
  auto pa = a.node();
  return Tensor(make_node(an.shape, std::move(out), {pa}, [pa, s](TensorNode& self) {
    if (!pa->requires_grad) return;
    ensure_grad(*pa);
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * s;
  }));
}

Tensor div(const Tensor& a, const Tensor& b) {
  const auto& an = req(a, "div");
  const auto& bn = req(b, "div");
  if (an.value.size() != 1 || bn.value.size() != 1) {
    throw std::invalid_argument("div: defined for one-element tensors only");
  }
  std::vector<double> out{an.value[0] / bn.value[0]};
  auto pa = a.node();
  auto pb = b.node();
  return Tensor(make_node(an.shape, std::move(out), {pa, pb}, [pa, pb](TensorNode& self) {
    const double g = self.grad[0];
    const double bv = pb->value[0];
    if (pa->requires_grad) {
      ensure_grad(*pa);
      pa->grad[0] += g / bv;
    }
    if (pb->requires_grad) {
      ensure_grad(*pb);
      pb->grad[0] += -g * pa->value[0] / (bv * bv);
    }
  }));
}

Tensor sqrt_clamped(const Tensor& a) {
  const auto& an = req(a, "sqrt_clamped");
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(std::max(an.value[i], 0.0));
  auto pa = a.node();
  return Tensor(make_node(an.shape, std::move(out), {pa}, [pa](TensorNode& self) {
    if (!pa->requires_grad) return;
    ensure_grad(*pa);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      // subgradient 0 at the clamp, matching the relu convention
      if (self.value[i] > 0.0) pa->grad[i] += self.grad[i] * 0.5 / self.value[i];
    }
  }));
}

Tensor mean_all(const Tensor& a) {
  const auto& an = req(a, "mean_all");
  const double inv = 1.0 / static_cast<double>(an.value.size());
  double acc = 0.0;
  for (double v : an.value) acc += v;
  auto pa = a.node();
  return Tensor(make_node(Shape{}, {acc * inv}, {pa}, [pa, inv](TensorNode& self) {
    if (!pa->requires_grad) return;
    ensure_grad(*pa);
    const double g = self.grad[0] * inv;
    for (std::size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += g;
  }));
}

Tensor sum_all(const Tensor& a) {
  const auto& an = req(a, "sum_all");
  double acc = 0.0;
  for (double v : an.value) acc += v;
  auto pa = a.node();
  return Tensor(make_node(Shape{}, {acc}, {pa}, [pa](TensorNode& self) {
    if (!pa->requires_grad) return;
    ensure_grad(*pa);
    const double g = self.grad[0];
    for (std::size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += g;
  }));
}

Tensor relu(const Tensor& x) {
  const auto& xn = req(x, "relu");
  std::vector<double> out(xn.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xn.value[i] > 0.0 ? xn.value[i] : 0.0;
  auto px = x.node();
  return Tensor(make_node(xn.shape, std::move(out), {px}, [px](TensorNode& self) {
    if (!px->requires_grad) return;
    ensure_grad(*px);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      // subgradient at 0 is 0
      if (px->value[i] > 0.0) px->grad[i] += self.grad[i];
    }
  }));
}

Tensor sigmoid(const Tensor& x) {
  const auto& xn = req(x, "sigmoid");
  std::vector<double> out(xn.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xn.value[i]));
  auto px = x.node();
  return Tensor(make_node(xn.shape, std::move(out), {px}, [px](TensorNode& self) {
    if (!px->requires_grad) return;
    ensure_grad(*px);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double s = self.value[i];
      px->grad[i] += self.grad[i] * s * (1.0 - s);
    }
  }));
}

// ---------------------------------------------------------------------------
// layer kernels
// ---------------------------------------------------------------------------

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const auto& xn = req(x, "dense");
  const auto& wn = req(weight, "dense");
  if (xn.shape.size() != 2) {
    throw std::invalid_argument("dense: input must be [batch, features], got " +
                                shape_str(xn.shape));
  }
  const int batch = xn.shape[0];
  const int in = xn.shape[1];
  if (wn.shape.size() != 2 || wn.shape[1] != in) {
    throw std::invalid_argument("dense: weight " + shape_str(wn.shape) +
                                " incompatible with input " + shape_str(xn.shape));
  }
  const int out_f = wn.shape[0];
  const bool has_bias = bias.defined();
  const double* bv = has_bias ? bias.values().data() : nullptr;

  std::vector<double> out(static_cast<std::size_t>(batch) * out_f, 0.0);
  for (int n = 0; n < batch; ++n) {
    const double* xr = xn.value.data() + static_cast<std::size_t>(n) * in;
    double* yr = out.data() + static_cast<std::size_t>(n) * out_f;
    for (int o = 0; o < out_f; ++o) {
      const double* wr = wn.value.data() + static_cast<std::size_t>(o) * in;
      double acc = has_bias ? bv[o] : 0.0;
      for (int i = 0; i < in; ++i) acc += xr[i] * wr[i];
      yr[o] = acc;
    }
  }

  auto px = x.node();
  auto pw = weight.node();
  auto pb = bias.defined() ? bias.node() : nullptr;
  return Tensor(make_node(
      Shape{batch, out_f}, std::move(out), {px, pw, pb},
      [px, pw, pb, batch, in, out_f](TensorNode& self) {
        if (px->requires_grad) ensure_grad(*px);
        if (pw->requires_grad) ensure_grad(*pw);
        if (pb && pb->requires_grad) ensure_grad(*pb);
        for (int n = 0; n < batch; ++n) {
          const double* gy = self.grad.data() + static_cast<std::size_t>(n) * out_f;
          const double* xr = px->value.data() + static_cast<std::size_t>(n) * in;
          for (int o = 0; o < out_f; ++o) {
            const double g = gy[o];
            if (g == 0.0) continue;
            const double* wr = pw->value.data() + static_cast<std::size_t>(o) * in;
            if (px->requires_grad) {
              double* gx = px->grad.data() + static_cast<std::size_t>(n) * in;
              for (int i = 0; i < in; ++i) gx[i] += g * wr[i];
            }
            if (pw->requires_grad) {
              double* gw = pw->grad.data() + static_cast<std::size_t>(o) * in;
              for (int i = 0; i < in; ++i) gw[i] += g * xr[i];
            }
            if (pb && pb->requires_grad) pb->grad[o] += g;
          }
        }
      }));
}

namespace {

struct ConvDims {
  int batch, ic, h, w, oc, kh, kw, oh, ow;
};

ConvDims conv_dims(const Shape& x, const Shape& weight, int stride, int padding) {
  if (x.size() != 4) {
    throw std::invalid_argument("conv2d: input must be [batch, channels, h, w], got " +
                                shape_str(x));
  }
  ConvDims d;
  d.batch = x[0];
  d.ic = x[1];
  d.h = x[2];
  d.w = x[3];
  d.oc = weight[0];
  d.kh = weight[2];
  d.kw = weight[3];
  if (weight[1] != d.ic) {
    throw std::invalid_argument("conv2d: weight expects " + std::to_string(weight[1]) +
                                " input channels, input has " + std::to_string(d.ic));
  }
  d.oh = (d.h + 2 * padding - d.kh) / stride + 1;
  d.ow = (d.w + 2 * padding - d.kw) / stride + 1;
  if (d.oh <= 0 || d.ow <= 0) {
    throw std::invalid_argument("conv2d: kernel does not fit input " + shape_str(x));
  }
  return d;
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                      int stride, int padding) {
  const auto& xn = req(x, "conv2d");
  const auto& wn = req(weight, "conv2d");
  const ConvDims d = conv_dims(xn.shape, wn.shape, stride, padding);
  const bool has_bias = bias.defined();
  const double* bv = has_bias ? bias.values().data() : nullptr;

  std::vector<double> out(static_cast<std::size_t>(d.batch) * d.oc * d.oh * d.ow, 0.0);
  const std::size_t in_plane = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t out_plane = static_cast<std::size_t>(d.oh) * d.ow;
  for (int n = 0; n < d.batch; ++n) {
    for (int oc = 0; oc < d.oc; ++oc) {
      double* yp = out.data() + ((static_cast<std::size_t>(n) * d.oc + oc) * out_plane);
      for (int oy = 0; oy < d.oh; ++oy) {
        for (int ox = 0; ox < d.ow; ++ox) {
          double acc = has_bias ? bv[oc] : 0.0;
          for (int ic = 0; ic < d.ic; ++ic) {
            const double* xp = xn.value.data() + ((static_cast<std::size_t>(n) * d.ic + ic) * in_plane);
            const double* wp = wn.value.data() +
                ((static_cast<std::size_t>(oc) * d.ic + ic) * d.kh * d.kw);
            for (int ky = 0; ky < d.kh; ++ky) {
              const int iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= d.h) continue;
              for (int kx = 0; kx < d.kw; ++kx) {
                const int ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= d.w) continue;
                acc += xp[static_cast<std::size_t>(iy) * d.w + ix] * wp[ky * d.kw + kx];
              }
            }
          }
          yp[static_cast<std::size_t>(oy) * d.ow + ox] = acc;
        }
      }
    }
  }

  auto px = x.node();
  auto pw = weight.node();
  auto pb = bias.defined() ? bias.node() : nullptr;
  return Tensor(make_node(
      Shape{d.batch, d.oc, d.oh, d.ow}, std::move(out), {px, pw, pb},
      [px, pw, pb, d, stride, padding](TensorNode& self) {
        if (px->requires_grad) ensure_grad(*px);
        if (pw->requires_grad) ensure_grad(*pw);
        if (pb && pb->requires_grad) ensure_grad(*pb);
        const std::size_t in_plane = static_cast<std::size_t>(d.h) * d.w;
        const std::size_t out_plane = static_cast<std::size_t>(d.oh) * d.ow;
        for (int n = 0; n < d.batch; ++n) {
          for (int oc = 0; oc < d.oc; ++oc) {
            const double* gy = self.grad.data() + ((static_cast<std::size_t>(n) * d.oc + oc) * out_plane);
            for (int oy = 0; oy < d.oh; ++oy) {
              for (int ox = 0; ox < d.ow; ++ox) {
                const double g = gy[static_cast<std::size_t>(oy) * d.ow + ox];
                if (g == 0.0) continue;
                if (pb && pb->requires_grad) pb->grad[oc] += g;
                for (int ic = 0; ic < d.ic; ++ic) {
                  const std::size_t xoff = (static_cast<std::size_t>(n) * d.ic + ic) * in_plane;
                  const std::size_t woff = (static_cast<std::size_t>(oc) * d.ic + ic) *
                                           static_cast<std::size_t>(d.kh) * d.kw;
                  for (int ky = 0; ky < d.kh; ++ky) {
                    const int iy = oy * stride - padding + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    for (int kx = 0; kx < d.kw; ++kx) {
                      const int ix = ox * stride - padding + kx;
                      if (ix < 0 || ix >= d.w) continue;
                      const std::size_t xi = xoff + static_cast<std::size_t>(iy) * d.w + ix;
                      const std::size_t wi = woff + static_cast<std::size_t>(ky) * d.kw + kx;
                      if (px->requires_grad) px->grad[xi] += g * pw->value[wi];
                      if (pw->requires_grad) pw->grad[wi] += g * px->value[xi];
                    }
                  }
                }
              }
            }
          }
        }
      }));
}

Tensor transposed_conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                                 int stride, int padding) {
  const auto& xn = req(x, "transposed_conv2d");
  const auto& wn = req(weight, "transposed_conv2d");
  if (xn.shape.size() != 4) {
    throw std::invalid_argument("transposed_conv2d: input must be [batch, channels, h, w], got " +
                                shape_str(xn.shape));
  }
  const int batch = xn.shape[0], ic = xn.shape[1], h = xn.shape[2], w = xn.shape[3];
  // weight layout [in_channels, out_channels, kh, kw]
  if (wn.shape.size() != 4 || wn.shape[0] != ic) {
    throw std::invalid_argument("transposed_conv2d: weight " + shape_str(wn.shape) +
                                " incompatible with input " + shape_str(xn.shape));
  }
  const int oc = wn.shape[1], kh = wn.shape[2], kw = wn.shape[3];
  const int oh = (h - 1) * stride - 2 * padding + kh;
  const int ow = (w - 1) * stride - 2 * padding + kw;
  if (oh <= 0 || ow <= 0) {
    throw std::invalid_argument("transposed_conv2d: output would be empty for input " +
                                shape_str(xn.shape));
  }
  const bool has_bias = bias.defined();

  std::vector<double> out(static_cast<std::size_t>(batch) * oc * oh * ow, 0.0);
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  if (has_bias) {
    const double* bv = bias.values().data();
    for (int n = 0; n < batch; ++n)
      for (int o = 0; o < oc; ++o) {
        double* yp = out.data() + ((static_cast<std::size_t>(n) * oc + o) * out_plane);
        for (std::size_t i = 0; i < out_plane; ++i) yp[i] = bv[o];
      }
  }
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < ic; ++c) {
      const double* xp = xn.value.data() + ((static_cast<std::size_t>(n) * ic + c) * in_plane);
      for (int o = 0; o < oc; ++o) {
        const double* wp = wn.value.data() +
            ((static_cast<std::size_t>(c) * oc + o) * kh * kw);
        double* yp = out.data() + ((static_cast<std::size_t>(n) * oc + o) * out_plane);
        for (int iy = 0; iy < h; ++iy) {
          for (int ix = 0; ix < w; ++ix) {
            const double xv = xp[static_cast<std::size_t>(iy) * w + ix];
            if (xv == 0.0) continue;
            for (int ky = 0; ky < kh; ++ky) {
              const int oy = iy * stride - padding + ky;
              if (oy < 0 || oy >= oh) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int ox = ix * stride - padding + kx;
                if (ox < 0 || ox >= ow) continue;
                yp[static_cast<std::size_t>(oy) * ow + ox] += xv * wp[ky * kw + kx];
              }
            }
          }
        }
      }
    }
  }

  auto px = x.node();
  auto pw = weight.node();
  auto pb = bias.defined() ? bias.node() : nullptr;
  return Tensor(make_node(
      Shape{batch, oc, oh, ow}, std::move(out), {px, pw, pb},
      [px, pw, pb, batch, ic, h, w, oc, kh, kw, oh, ow, stride, padding](TensorNode& self) {
        if (px->requires_grad) ensure_grad(*px);
        if (pw->requires_grad) ensure_grad(*pw);
        if (pb && pb->requires_grad) ensure_grad(*pb);
        const std::size_t in_plane = static_cast<std::size_t>(h) * w;
        const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
        if (pb && pb->requires_grad) {
          for (int n = 0; n < batch; ++n)
            for (int o = 0; o < oc; ++o) {
              const double* gy = self.grad.data() + ((static_cast<std::size_t>(n) * oc + o) * out_plane);
              double acc = 0.0;
              for (std::size_t i = 0; i < out_plane; ++i) acc += gy[i];
              pb->grad[o] += acc;
            }
        }
        for (int n = 0; n < batch; ++n) {
          for (int c = 0; c < ic; ++c) {
            const std::size_t xoff = (static_cast<std::size_t>(n) * ic + c) * in_plane;
            for (int o = 0; o < oc; ++o) {
              const std::size_t woff = (static_cast<std::size_t>(c) * oc + o) *
                                       static_cast<std::size_t>(kh) * kw;
              const double* gy = self.grad.data() + ((static_cast<std::size_t>(n) * oc + o) * out_plane);
              for (int iy = 0; iy < h; ++iy) {
                for (int ix = 0; ix < w; ++ix) {
                  const std::size_t xi = xoff + static_cast<std::size_t>(iy) * w + ix;
                  for (int ky = 0; ky < kh; ++ky) {
                    const int oy = iy * stride - padding + ky;
                    if (oy < 0 || oy >= oh) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                      const int ox = ix * stride - padding + kx;
                      if (ox < 0 || ox >= ow) continue;
                      const double g = gy[static_cast<std::size_t>(oy) * ow + ox];
                      const std::size_t wi = woff + static_cast<std::size_t>(ky) * kw + kx;
                      if (px->requires_grad) px->grad[xi] += g * pw->value[wi];
                      if (pw->requires_grad) pw->grad[wi] += g * px->value[xi];
                    }
                  }
                }
              }
            }
          }
        }
      }));
}

Tensor maxpool2d(const Tensor& x, int kernel, int stride) {
  const auto& xn = req(x, "maxpool2d");
  if (xn.shape.size() != 4) {
    throw std::invalid_argument("maxpool2d: input must be [batch, channels, h, w], got " +
                                shape_str(xn.shape));
  }
  if (stride <= 0) stride = kernel;
  const int batch = xn.shape[0], c = xn.shape[1], h = xn.shape[2], w = xn.shape[3];
  if (h < kernel || w < kernel) {
    throw std::invalid_argument("maxpool2d: window " + std::to_string(kernel) +
                                " does not fit input " + shape_str(xn.shape));
  }
  const int oh = (h - kernel) / stride + 1;
  const int ow = (w - kernel) / stride + 1;

  std::vector<double> out(static_cast<std::size_t>(batch) * c * oh * ow);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  std::size_t oi = 0;
  for (int n = 0; n < batch; ++n) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t xoff = (static_cast<std::size_t>(n) * c + ch) * in_plane;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++oi) {
          double best = -1e308;
          std::size_t best_i = 0;
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride + ky;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride + kx;
              const std::size_t xi = xoff + static_cast<std::size_t>(iy) * w + ix;
              if (xn.value[xi] > best) {
                best = xn.value[xi];
                best_i = xi;
              }
            }
          }
          out[oi] = best;
          (*argmax)[oi] = best_i;
        }
      }
    }
  }
  (void)out_plane;

  auto px = x.node();
  return Tensor(make_node(Shape{batch, c, oh, ow}, std::move(out), {px},
                          [px, argmax](TensorNode& self) {
                            if (!px->requires_grad) return;
                            ensure_grad(*px);
                            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                              px->grad[(*argmax)[i]] += self.grad[i];
                            }
                          }));
}

Tensor upsample2d_nearest(const Tensor& x, int factor) {
  const auto& xn = req(x, "upsample2d");
  if (xn.shape.size() != 4) {
    throw std::invalid_argument("upsample2d: input must be [batch, channels, h, w], got " +
                                shape_str(xn.shape));
  }
  const int batch = xn.shape[0], c = xn.shape[1], h = xn.shape[2], w = xn.shape[3];
  const int oh = h * factor, ow = w * factor;
  std::vector<double> out(static_cast<std::size_t>(batch) * c * oh * ow);
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  for (int n = 0; n < batch; ++n) {
    for (int ch = 0; ch < c; ++ch) {
      const double* xp = xn.value.data() + (static_cast<std::size_t>(n) * c + ch) * in_plane;
      double* yp = out.data() + (static_cast<std::size_t>(n) * c + ch) * out_plane;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          yp[static_cast<std::size_t>(oy) * ow + ox] =
              xp[static_cast<std::size_t>(oy / factor) * w + (ox / factor)];
    }
  }
  auto px = x.node();
  return Tensor(make_node(
      Shape{batch, c, oh, ow}, std::move(out), {px},
      [px, batch, c, h, w, factor](TensorNode& self) {
        if (!px->requires_grad) return;
        ensure_grad(*px);
        const int oh = h * factor, ow = w * factor;
        const std::size_t in_plane = static_cast<std::size_t>(h) * w;
        const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
        for (int n = 0; n < batch; ++n)
          for (int ch = 0; ch < c; ++ch) {
            double* gx = px->grad.data() + (static_cast<std::size_t>(n) * c + ch) * in_plane;
            const double* gy = self.grad.data() + (static_cast<std::size_t>(n) * c + ch) * out_plane;
            for (int oy = 0; oy < oh; ++oy)
              for (int ox = 0; ox < ow; ++ox)
                gx[static_cast<std::size_t>(oy / factor) * w + (ox / factor)] +=
                    gy[static_cast<std::size_t>(oy) * ow + ox];
          }
      }));
}

Tensor reshape_per_sample(const Tensor& x, const Shape& per_sample) {
  const auto& xn = req(x, "reshape");
  if (xn.shape.empty()) throw std::invalid_argument("reshape: input must be batched");
  const int batch = xn.shape[0];
  Shape in_sample(xn.shape.begin() + 1, xn.shape.end());
  if (numel(in_sample) != numel(per_sample)) {
    throw std::invalid_argument("reshape: cannot view sample " + shape_str(in_sample) + " as " +
                                shape_str(per_sample));
  }
  Shape out_shape{batch};
  out_shape.insert(out_shape.end(), per_sample.begin(), per_sample.end());
  auto px = x.node();
  return Tensor(make_node(std::move(out_shape), xn.value, {px}, [px](TensorNode& self) {
    if (!px->requires_grad) return;
    ensure_grad(*px);
    for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
  }));
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

Tensor cross_entropy_softmax(const Tensor& logits, const std::vector<int>& labels) {
  const auto& ln = req(logits, "cross_entropy");
  if (ln.shape.size() != 2) {
    throw std::invalid_argument("cross_entropy: logits must be [batch, classes], got " +
                                shape_str(ln.shape));
  }
  const int batch = ln.shape[0], classes = ln.shape[1];
  if (static_cast<int>(labels.size()) != batch) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(batch));
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw std::invalid_argument("cross_entropy: label " + std::to_string(y) +
                                  " out of range [0," + std::to_string(classes) + ")");
    }
  }

  auto softmax = std::make_shared<std::vector<double>>(ln.value.size());
  double loss = 0.0;
  for (int n = 0; n < batch; ++n) {
    const double* row = ln.value.data() + static_cast<std::size_t>(n) * classes;
    double* srow = softmax->data() + static_cast<std::size_t>(n) * classes;
    double mx = row[0];
    for (int k = 1; k < classes; ++k) mx = std::max(mx, row[k]);
    double denom = 0.0;
    for (int k = 0; k < classes; ++k) denom += std::exp(row[k] - mx);
    const double lse = mx + std::log(denom);
    for (int k = 0; k < classes; ++k) srow[k] = std::exp(row[k] - lse);
    loss += lse - row[labels[n]];
  }
  loss /= batch;

  auto pl = logits.node();
  auto labels_copy = std::make_shared<std::vector<int>>(labels);
  return Tensor(make_node(
      Shape{}, {loss}, {pl}, [pl, softmax, labels_copy, batch, classes](TensorNode& self) {
        if (!pl->requires_grad) return;
        ensure_grad(*pl);
        const double g = self.grad[0] / batch;
        for (int n = 0; n < batch; ++n) {
          double* gr = pl->grad.data() + static_cast<std::size_t>(n) * classes;
          const double* srow = softmax->data() + static_cast<std::size_t>(n) * classes;
          for (int k = 0; k < classes; ++k) gr[k] += g * srow[k];
          gr[(*labels_copy)[n]] -= g;
        }
      }));
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  const auto& pn = req(pred, "mse");
  const auto& tn = req(target, "mse");
  if (!same_shape(pn.shape, tn.shape)) {
    throw std::invalid_argument("mse: shape mismatch " + shape_str(pn.shape) + " vs " +
                                shape_str(tn.shape));
  }
  const double inv = 1.0 / static_cast<double>(pn.value.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < pn.value.size(); ++i) {
    const double d = pn.value[i] - tn.value[i];
    loss += d * d;
  }
  loss *= inv;
  auto pp = pred.node();
  auto pt = target.node();
  return Tensor(make_node(Shape{}, {loss}, {pp, pt}, [pp, pt, inv](TensorNode& self) {
    const double g = self.grad[0] * 2.0 * inv;
    if (pp->requires_grad) {
      ensure_grad(*pp);
      for (std::size_t i = 0; i < pp->grad.size(); ++i)
        pp->grad[i] += g * (pp->value[i] - pt->value[i]);
    }
    if (pt->requires_grad) {
      ensure_grad(*pt);
      for (std::size_t i = 0; i < pt->grad.size(); ++i)
        pt->grad[i] += g * (pt->value[i] - pp->value[i]);
    }
  }));
}

// ---------------------------------------------------------------------------
// distance correlation
// ---------------------------------------------------------------------------

namespace {

/// Euclidean distance matrix [n,n] over samples (rows) of x.
Tensor pairwise_distance(const Tensor& x) {
  const auto& xn = *x.node();
  const int n = xn.shape[0];
  const int k = static_cast<int>(xn.value.size()) / n;
  std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double* a = xn.value.data() + static_cast<std::size_t>(i) * k;
      const double* b = xn.value.data() + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int t = 0; t < k; ++t) {
        const double d = a[t] - b[t];
        acc += d * d;
      }
      const double dist = std::sqrt(acc);
      out[static_cast<std::size_t>(i) * n + j] = dist;
      out[static_cast<std::size_t>(j) * n + i] = dist;
    }
  }
  auto px = x.node();
  return Tensor(make_node(Shape{n, n}, std::move(out), {px}, [px, n, k](TensorNode& self) {
    if (!px->requires_grad) return;
    ensure_grad(*px);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double dist = self.value[static_cast<std::size_t>(i) * n + j];
        if (dist <= 0.0) continue;  // coincident samples: subgradient 0
        const double g = self.grad[static_cast<std::size_t>(i) * n + j] / dist;
        if (g == 0.0) continue;
        const double* a = px->value.data() + static_cast<std::size_t>(i) * k;
        const double* b = px->value.data() + static_cast<std::size_t>(j) * k;
        double* ga = px->grad.data() + static_cast<std::size_t>(i) * k;
        double* gb = px->grad.data() + static_cast<std::size_t>(j) * k;
        for (int t = 0; t < k; ++t) {
          const double diff = (a[t] - b[t]) * g;
          ga[t] += diff;
          gb[t] -= diff;
        }
      }
    }
  }));
}

/// Double centering A = D - rowmean - colmean + grandmean. The centering
/// operator is self-adjoint, so the backward pass is itself.
std::vector<double> center_values(const std::vector<double>& d, int n) {
  std::vector<double> row(n, 0.0), col(n, 0.0);
  double grand = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = d[static_cast<std::size_t>(i) * n + j];
      row[i] += v;
      col[j] += v;
      grand += v;
    }
  for (int i = 0; i < n; ++i) row[i] /= n;
  for (int j = 0; j < n; ++j) col[j] /= n;
  grand /= static_cast<double>(n) * n;
  std::vector<double> out(d.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(i) * n + j] =
          d[static_cast<std::size_t>(i) * n + j] - row[i] - col[j] + grand;
  return out;
}

Tensor double_center(const Tensor& d) {
  const auto& dn = *d.node();
  const int n = dn.shape[0];
  auto pd = d.node();
  return Tensor(make_node(dn.shape, center_values(dn.value, n), {pd}, [pd, n](TensorNode& self) {
    if (!pd->requires_grad) return;
    ensure_grad(*pd);
    std::vector<double> g = center_values(self.grad, n);
    for (std::size_t i = 0; i < g.size(); ++i) pd->grad[i] += g[i];
  }));
}

}  // namespace

Tensor distance_correlation(const Tensor& x, const Tensor& z) {
  const auto& xn = req(x, "distance_correlation");
  const auto& zn = req(z, "distance_correlation");
  if (xn.shape.empty() || zn.shape.empty() || xn.shape[0] != zn.shape[0]) {
    throw std::invalid_argument("distance_correlation: batch dimensions differ: " +
                                shape_str(xn.shape) + " vs " + shape_str(zn.shape));
  }
  const int n = xn.shape[0];
  if (n < 2) {
    throw std::invalid_argument("distance_correlation: needs at least 2 samples, got " +
                                std::to_string(n));
  }

  Tensor a = double_center(pairwise_distance(x));
  Tensor b = double_center(pairwise_distance(z));
  Tensor dcov2 = mean_all(mul(a, b));
  Tensor dvarx2 = mean_all(mul(a, a));
  Tensor dvarz2 = mean_all(mul(b, b));

  // Degenerate distance variance: dCor is 0 by convention (constant, no grad).
  if (dvarx2.item() <= 0.0 || dvarz2.item() <= 0.0) return Tensor::scalar(0.0);

  Tensor denom = sqrt_clamped(mul(sqrt_clamped(dvarx2), sqrt_clamped(dvarz2)));
  return div(sqrt_clamped(dcov2), denom);
}

}  // namespace splitbench
