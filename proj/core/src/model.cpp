#include "splitbench/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "splitbench/rng.hpp"

namespace splitbench {

SequentialModel::SequentialModel(std::string name_, Shape input_shape_,
                                 std::vector<Layer> layers_)
    : name(std::move(name_)), input_shape(std::move(input_shape_)), layers(std::move(layers_)) {
  // Validate composition once at construction.
  Shape s = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      s = layers[i].output_shape(s);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("model '" + name + "' layer " + std::to_string(i) + ": " +
                                  e.what());
    }
  }
}

void SequentialModel::init_weights(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers) l.init_weights(rng);
}

Tensor SequentialModel::forward(const Tensor& x) const {
  const Shape& s = x.shape();
  Shape sample(s.begin() + 1, s.end());
  if (sample != input_shape) {
    throw std::invalid_argument("model '" + name + "': input sample shape " + shape_str(sample) +
                                " != declared " + shape_str(input_shape));
  }
  return splitbench::forward(layers, x);
}

Shape SequentialModel::output_shape() const {
  Shape s = input_shape;
  for (const auto& l : layers) s = l.output_shape(s);
  return s;
}

std::vector<Tensor> SequentialModel::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : layers) {
    for (auto& p : l.parameters()) out.push_back(p);
  }
  return out;
}

long long SequentialModel::parameter_count() const {
  long long n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

SequentialModel SequentialModel::clone() const {
  SequentialModel copy = *this;
  for (auto& l : copy.layers) {
    if (l.weight.defined()) l.weight = l.weight.detach(true);
    if (l.bias.defined()) l.bias = l.bias.detach(true);
  }
  return copy;
}

Tensor forward(const std::vector<Layer>& layers, const Tensor& input) {
  Tensor x = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      x = layers[i].forward(x);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("layer " + std::to_string(i) + " (" + layers[i].describe() +
                                  "): " + e.what());
    }
  }
  return x;
}

PartitionedModel cut(const SequentialModel& model, int d) {
  if (d < 0 || d > model.num_layers()) {
    throw std::invalid_argument("cut: index " + std::to_string(d) + " out of range [0," +
                                std::to_string(model.num_layers()) + "] for model '" +
                                model.name + "'");
  }
  PartitionedModel p;
  p.cut_index = d;

  p.client.name = model.name + ".client";
  p.client.input_shape = model.input_shape;
  p.client.layers.assign(model.layers.begin(), model.layers.begin() + d);

  Shape boundary = model.input_shape;
  for (int i = 0; i < d; ++i) boundary = model.layers[i].output_shape(boundary);

  p.server.name = model.name + ".server";
  p.server.input_shape = boundary;
  p.server.layers.assign(model.layers.begin() + d, model.layers.end());
  return p;
}

bool WeightVector::layout_matches(const WeightVector& other) const {
  if (layout.size() != other.layout.size()) return false;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& a = layout[i];
    const auto& b = other.layout[i];
    if (a.layer_index != b.layer_index || a.tensor != b.tensor || a.shape != b.shape ||
        a.offset != b.offset) {
      return false;
    }
  }
  return true;
}

WeightVector flatten_weights(const SequentialModel& model) {
  WeightVector wv;
  for (int i = 0; i < model.num_layers(); ++i) {
    const Layer& l = model.layers[i];
    auto append = [&wv, i](const Tensor& t, const char* tag) {
      if (!t.defined()) return;
      wv.layout.push_back({i, tag, t.shape(), wv.values.size()});
      const auto& v = t.values();
      wv.values.insert(wv.values.end(), v.begin(), v.end());
    };
    append(l.weight, "weight");
    append(l.bias, "bias");
  }
  return wv;
}

void load_weights(SequentialModel& model, const WeightVector& weights) {
  WeightVector current = flatten_weights(model);
  if (!current.layout_matches(weights)) {
    throw std::invalid_argument("load_weights: layout mismatch for model '" + model.name + "'");
  }
  for (const auto& seg : weights.layout) {
    Layer& l = model.layers[seg.layer_index];
    Tensor& t = seg.tensor == "weight" ? l.weight : l.bias;
    auto& dst = t.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = weights.values[seg.offset + i];
  }
}

namespace {

WeightVector average(std::span<const WeightVector> weights, const char* what) {
  if (weights.empty()) throw std::invalid_argument(std::string(what) + ": empty input list");
  const WeightVector& first = weights.front();
  for (const auto& w : weights) {
    if (!w.layout_matches(first)) {
      throw std::invalid_argument(std::string(what) + ": mismatched weight layouts");
    }
  }
  // Per-coordinate mean over a sorted gather: summation order is canonical,
  // so the result is permutation invariant, and averaging k equal values
  // returns the value bit-exactly.
  const std::size_t k = weights.size();
  WeightVector out;
  out.layout = first.layout;
  out.values.resize(first.values.size());
  std::vector<double> gather(k);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) gather[j] = weights[j].values[i];
    std::sort(gather.begin(), gather.end());
    if (gather.front() == gather.back()) {
      out.values[i] = gather.front();
      continue;
    }
    double acc = 0.0;
    for (double v : gather) acc += v;
    out.values[i] = acc / static_cast<double>(k);
  }
  return out;
}

}  // namespace

WeightVector fed_avg(std::span<const WeightVector> weights) { return average(weights, "fed_avg"); }

WeightVector ser_avg(std::span<const WeightVector> server_weights) {
  return average(server_weights, "ser_avg");
}

void sgd_step(const SequentialModel& model, double lr) {
  for (auto& p : model.parameters()) {
    if (!p.has_grad()) continue;
    Tensor t = p;
    auto& v = t.values();
    const auto& g = t.grad();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    t.zero_grad();
  }
}

void zero_grads(const SequentialModel& model) {
  for (auto& p : model.parameters()) {
    Tensor t = p;
    t.zero_grad();
  }
}

MemoryDemand memory_demand(const SequentialModel& part, int batch) {
  if (batch <= 0) throw std::invalid_argument("memory_demand: batch must be positive");
  MemoryDemand m;
  m.weight_bytes = 8 * part.parameter_count();
  Shape s = part.input_shape;
  long long elems = 0;
  for (const auto& l : part.layers) {
    s = l.output_shape(s);
    if (!l.in_place()) elems += static_cast<long long>(numel(s));
  }
  m.activation_bytes = 8ll * batch * elems;
  return m;
}

}  // namespace splitbench
