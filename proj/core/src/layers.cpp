#include "splitbench/layers.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace splitbench {

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::TransposedConv2d: return "transposed_conv2d";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::Upsample2d: return "upsample2d";
    case LayerKind::Reshape: return "reshape";
  }
  return "unknown";
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "dense") return LayerKind::Dense;
  if (name == "conv2d") return LayerKind::Conv2d;
  if (name == "relu") return LayerKind::Relu;
  if (name == "maxpool2d") return LayerKind::MaxPool2d;
  if (name == "flatten") return LayerKind::Flatten;
  if (name == "transposed_conv2d") return LayerKind::TransposedConv2d;
  if (name == "sigmoid") return LayerKind::Sigmoid;
  if (name == "upsample2d") return LayerKind::Upsample2d;
  if (name == "reshape") return LayerKind::Reshape;
  throw std::invalid_argument("unknown layer kind: " + name);
}

Layer Layer::dense(int in, int out, bool bias) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("dense: features must be positive");
  Layer l;
  l.kind = LayerKind::Dense;
  l.in_features = in;
  l.out_features = out;
  l.has_bias = bias;
  return l;
}

Layer Layer::conv2d(int in_ch, int out_ch, int kernel, int stride, int padding, bool bias) {
  if (in_ch <= 0 || out_ch <= 0 || kernel <= 0 || stride <= 0 || padding < 0) {
    throw std::invalid_argument("conv2d: bad hyperparameters");
  }
  Layer l;
  l.kind = LayerKind::Conv2d;
  l.in_channels = in_ch;
  l.out_channels = out_ch;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  l.has_bias = bias;
  return l;
}

Layer Layer::transposed_conv2d(int in_ch, int out_ch, int kernel, int stride, int padding,
                               bool bias) {
  if (in_ch <= 0 || out_ch <= 0 || kernel <= 0 || stride <= 0 || padding < 0) {
    throw std::invalid_argument("transposed_conv2d: bad hyperparameters");
  }
  Layer l;
  l.kind = LayerKind::TransposedConv2d;
  l.in_channels = in_ch;
  l.out_channels = out_ch;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  l.has_bias = bias;
  return l;
}

Layer Layer::relu() {
  Layer l;
  l.kind = LayerKind::Relu;
  return l;
}

Layer Layer::sigmoid() {
  Layer l;
  l.kind = LayerKind::Sigmoid;
  return l;
}

Layer Layer::maxpool2d(int kernel, int stride) {
  if (kernel <= 0) throw std::invalid_argument("maxpool2d: kernel must be positive");
  Layer l;
  l.kind = LayerKind::MaxPool2d;
  l.kernel = kernel;
  l.stride = stride > 0 ? stride : kernel;
  return l;
}

Layer Layer::flatten() {
  Layer l;
  l.kind = LayerKind::Flatten;
  return l;
}

Layer Layer::upsample2d(int factor) {
  if (factor <= 0) throw std::invalid_argument("upsample2d: factor must be positive");
  Layer l;
  l.kind = LayerKind::Upsample2d;
  l.factor = factor;
  return l;
}

Layer Layer::reshape(Shape target) {
  if (target.empty()) throw std::invalid_argument("reshape: empty target shape");
  Layer l;
  l.kind = LayerKind::Reshape;
  l.target_shape = std::move(target);
  return l;
}

namespace {

[[noreturn]] void shape_error(const Layer& l, const Shape& in, const std::string& why) {
  throw std::invalid_argument(l.describe() + ": input " + shape_str(in) + " rejected: " + why);
}

}  // namespace

Shape Layer::output_shape(const Shape& in) const {
  switch (kind) {
    case LayerKind::Dense:
      if (in.size() != 1 || in[0] != in_features) {
        shape_error(*this, in, "expected [" + std::to_string(in_features) + "]");
      }
      return {out_features};
    case LayerKind::Conv2d: {
      if (in.size() != 3 || in[0] != in_channels) {
        shape_error(*this, in,
                    "expected [" + std::to_string(in_channels) + ", h, w]");
      }
      const int oh = (in[1] + 2 * padding - kernel) / stride + 1;
      const int ow = (in[2] + 2 * padding - kernel) / stride + 1;
      if (oh <= 0 || ow <= 0) shape_error(*this, in, "kernel does not fit");
      return {out_channels, oh, ow};
    }
    case LayerKind::TransposedConv2d: {
      if (in.size() != 3 || in[0] != in_channels) {
        shape_error(*this, in,
                    "expected [" + std::to_string(in_channels) + ", h, w]");
      }
      const int oh = (in[1] - 1) * stride - 2 * padding + kernel;
      const int ow = (in[2] - 1) * stride - 2 * padding + kernel;
      if (oh <= 0 || ow <= 0) shape_error(*this, in, "output would be empty");
      return {out_channels, oh, ow};
    }
    case LayerKind::Relu:
    case LayerKind::Sigmoid:
      return in;
    case LayerKind::MaxPool2d: {
      if (in.size() != 3) shape_error(*this, in, "expected [channels, h, w]");
      if (in[1] < kernel || in[2] < kernel) shape_error(*this, in, "window does not fit");
      return {in[0], (in[1] - kernel) / stride + 1, (in[2] - kernel) / stride + 1};
    }
    case LayerKind::Flatten:
      if (in.empty()) shape_error(*this, in, "nothing to flatten");
      return {static_cast<int>(numel(in))};
    case LayerKind::Upsample2d:
      if (in.size() != 3) shape_error(*this, in, "expected [channels, h, w]");
      return {in[0], in[1] * factor, in[2] * factor};
    case LayerKind::Reshape:
      if (numel(in) != numel(target_shape)) {
        shape_error(*this, in, "cannot view as " + shape_str(target_shape));
      }
      return target_shape;
  }
  throw std::logic_error("output_shape: unhandled kind");
}

Tensor Layer::forward(const Tensor& x) const {
  switch (kind) {
    case LayerKind::Dense:
      return dense_forward(x, weight, has_bias ? bias : Tensor());
    case LayerKind::Conv2d:
      return conv2d_forward(x, weight, has_bias ? bias : Tensor(), stride, padding);
    case LayerKind::TransposedConv2d:
      return transposed_conv2d_forward(x, weight, has_bias ? bias : Tensor(), stride, padding);
    case LayerKind::Relu:
      return splitbench::relu(x);
    case LayerKind::Sigmoid:
      return splitbench::sigmoid(x);
    case LayerKind::MaxPool2d:
      return splitbench::maxpool2d(x, kernel, stride);
    case LayerKind::Flatten: {
      const Shape& s = x.shape();
      Shape sample(s.begin() + 1, s.end());
      return reshape_per_sample(x, Shape{static_cast<int>(numel(sample))});
    }
    case LayerKind::Upsample2d:
      return upsample2d_nearest(x, factor);
    case LayerKind::Reshape:
      return reshape_per_sample(x, target_shape);
  }
  throw std::logic_error("forward: unhandled kind");
}

void Layer::init_weights(Rng& rng) {
  auto fill = [&rng](Tensor& t, double bound) {
    for (double& v : t.values()) v = rng.uniform(-bound, bound);
  };
  switch (kind) {
    case LayerKind::Dense: {
      const double bound = std::sqrt(1.0 / in_features);
      weight = Tensor::zeros({out_features, in_features}, true);
      fill(weight, bound);
      if (has_bias) {
        bias = Tensor::zeros({out_features}, true);
        fill(bias, bound);
      }
      return;
    }
    case LayerKind::Conv2d: {
      const double bound = std::sqrt(1.0 / (in_channels * kernel * kernel));
      weight = Tensor::zeros({out_channels, in_channels, kernel, kernel}, true);
      fill(weight, bound);
      if (has_bias) {
        bias = Tensor::zeros({out_channels}, true);
        fill(bias, bound);
      }
      return;
    }
    case LayerKind::TransposedConv2d: {
      const double bound = std::sqrt(1.0 / (in_channels * kernel * kernel));
      weight = Tensor::zeros({in_channels, out_channels, kernel, kernel}, true);
      fill(weight, bound);
      if (has_bias) {
        bias = Tensor::zeros({out_channels}, true);
        fill(bias, bound);
      }
      return;
    }
    default:
      return;  // parameter-free
  }
}

bool Layer::parameterized() const {
  return kind == LayerKind::Dense || kind == LayerKind::Conv2d ||
         kind == LayerKind::TransposedConv2d;
}

std::vector<Tensor> Layer::parameters() const {
  std::vector<Tensor> out;
  if (weight.defined()) out.push_back(weight);
  if (bias.defined()) out.push_back(bias);
  return out;
}

long long Layer::parameter_count() const {
  switch (kind) {
    case LayerKind::Dense:
      return static_cast<long long>(in_features) * out_features + (has_bias ? out_features : 0);
    case LayerKind::Conv2d:
    case LayerKind::TransposedConv2d:
      return static_cast<long long>(in_channels) * out_channels * kernel * kernel +
             (has_bias ? out_channels : 0);
    default:
      return 0;
  }
}

double Layer::forward_flops(const Shape& in) const {
  const Shape out = output_shape(in);
  switch (kind) {
    case LayerKind::Dense:
      return 2.0 * in_features * out_features + (has_bias ? out_features : 0);
    case LayerKind::Conv2d:
      // one multiply-add pair per kernel tap and output element
      return 2.0 * numel(out) * in_channels * kernel * kernel;
    case LayerKind::TransposedConv2d:
      return 2.0 * numel(in) * out_channels * kernel * kernel;
    case LayerKind::Relu:
    case LayerKind::Sigmoid:
      return static_cast<double>(numel(out));
    case LayerKind::MaxPool2d:
      return static_cast<double>(numel(out)) * kernel * kernel;
    case LayerKind::Upsample2d:
      return static_cast<double>(numel(out));
    case LayerKind::Flatten:
    case LayerKind::Reshape:
      return 0.0;
  }
  return 0.0;
}

bool Layer::in_place() const {
  return kind == LayerKind::Relu || kind == LayerKind::Flatten || kind == LayerKind::Reshape;
}

std::string Layer::describe() const {
  std::ostringstream os;
  os << layer_kind_name(kind);
  switch (kind) {
    case LayerKind::Dense:
      os << "(" << in_features << "->" << out_features << (has_bias ? "" : ", no bias") << ")";
      break;
    case LayerKind::Conv2d:
    case LayerKind::TransposedConv2d:
      os << "(" << in_channels << "->" << out_channels << ", k" << kernel << ", s" << stride
         << ", p" << padding << ")";
      break;
    case LayerKind::MaxPool2d:
      os << "(k" << kernel << ", s" << stride << ")";
      break;
    case LayerKind::Upsample2d:
      os << "(x" << factor << ")";
      break;
    case LayerKind::Reshape:
      os << "(" << shape_str(target_shape) << ")";
      break;
    default:
      break;
  }
  return os.str();
}

}  // namespace splitbench
