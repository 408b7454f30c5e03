#include "splitbench/profiles.hpp"

#include <stdexcept>

namespace splitbench {

long long LayerProfile::output_elements_at(int d) const {
  if (d < 0 || d > num_layers()) {
    throw std::invalid_argument("profile '" + model_name + "': cut " + std::to_string(d) +
                                " out of range [0," + std::to_string(num_layers()) + "]");
  }
  if (d == 0) return static_cast<long long>(numel(input_shape));
  return layers[d - 1].output_elements;
}

long long LayerProfile::boundary_bytes(int d, int batch) const {
  return 8ll * batch * output_elements_at(d);
}

double LayerProfile::cumulative_flops(int d) const {
  if (d < 0 || d > num_layers()) {
    throw std::invalid_argument("profile '" + model_name + "': cut out of range");
  }
  double acc = 0.0;
  for (int i = 0; i < d; ++i) acc += layers[i].forward_flops;
  return acc;
}

long long LayerProfile::cumulative_params(int d) const {
  if (d < 0 || d > num_layers()) {
    throw std::invalid_argument("profile '" + model_name + "': cut out of range");
  }
  long long acc = 0;
  for (int i = 0; i < d; ++i) acc += layers[i].params;
  return acc;
}

MemoryDemand LayerProfile::client_memory(int d, int batch) const {
  MemoryDemand m;
  m.weight_bytes = 8 * cumulative_params(d);
  long long elems = 0;
  for (int i = 0; i < d; ++i) {
    if (!layers[i].in_place) elems += layers[i].output_elements;
  }
  m.activation_bytes = 8ll * batch * elems;
  return m;
}

MemoryDemand LayerProfile::server_memory(int d, int batch) const {
  MemoryDemand full = full_memory(batch);
  MemoryDemand client = client_memory(d, batch);
  return {full.weight_bytes - client.weight_bytes,
          full.activation_bytes - client.activation_bytes};
}

MemoryDemand LayerProfile::full_memory(int batch) const {
  return client_memory(num_layers(), batch);
}

int LayerProfile::index_of(const std::string& layer_name) const {
  for (int i = 0; i < num_layers(); ++i) {
    if (layers[i].name == layer_name) return i;
  }
  return -1;
}

namespace {

/// Incremental builder tracking spatial dims; all shapes [channels, h, w].
struct ProfileBuilder {
  LayerProfile p;
  int c, h, w;

  ProfileBuilder(std::string name, int channels, int height, int width) {
    p.model_name = std::move(name);
    p.input_shape = {channels, height, width};
    c = channels;
    h = height;
    w = width;
  }

  void conv(const std::string& name, int out_ch, int k, int pad) {
    const int oh = h + 2 * pad - k + 1;
    const int ow = w + 2 * pad - k + 1;
    const long long out = static_cast<long long>(out_ch) * oh * ow;
    p.layers.push_back({name, out,
                        static_cast<long long>(c) * out_ch * k * k + out_ch,
                        2.0 * static_cast<double>(out) * c * k * k, false});
    c = out_ch;
    h = oh;
    w = ow;
  }

  void relu(const std::string& name) {
    const long long out = static_cast<long long>(c) * h * w;
    p.layers.push_back({name, out, 0, static_cast<double>(out), true});
  }

  void pool(const std::string& name, int k) {
    h /= k;
    w /= k;
    const long long out = static_cast<long long>(c) * h * w;
    p.layers.push_back({name, out, 0, static_cast<double>(out) * k * k, false});
  }

  /// Adaptive average pool to a fixed spatial size.
  void avgpool(const std::string& name, int oh, int ow) {
    h = oh;
    w = ow;
    const long long out = static_cast<long long>(c) * h * w;
    p.layers.push_back({name, out, 0, static_cast<double>(out), false});
  }

  long long flat() const { return static_cast<long long>(c) * h * w; }

  void flatten(const std::string& name) {
    p.layers.push_back({name, flat(), 0, 0.0, true});
  }

  void fc(const std::string& name, long long in, long long out) {
    p.layers.push_back({name, out, in * out + out, 2.0 * static_cast<double>(in) * out, false});
  }

  void fc_relu(const std::string& name, long long n) {
    p.layers.push_back({name, n, 0, static_cast<double>(n), true});
  }
};

}  // namespace

LayerProfile vgg16_profile() {
  // Standard 13-conv/3-fc configuration with the 7x7 adaptive pool ahead of
  // the classifier, profiled at 32x32 input with a 10-class head. ReLUs run
  // in place, so they add no activation buffers.
  ProfileBuilder b("vgg16", 3, 32, 32);
  const int widths[5] = {64, 128, 256, 512, 512};
  const int convs_per_block[5] = {2, 2, 3, 3, 3};
  for (int block = 0; block < 5; ++block) {
    const std::string bn = std::to_string(block + 1);
    for (int i = 0; i < convs_per_block[block]; ++i) {
      const std::string suffix = bn + "_" + std::to_string(i + 1);
      b.conv("conv" + suffix, widths[block], 3, 1);
      b.relu("relu" + suffix);
    }
    b.pool("pool" + bn, 2);
  }
  b.avgpool("avgpool", 7, 7);
  const long long flat = b.flat();
  b.flatten("flatten");
  b.fc("fc1", flat, 4096);
  b.fc_relu("relu_fc1", 4096);
  b.fc("fc2", 4096, 4096);
  b.fc_relu("relu_fc2", 4096);
  b.fc("fc3", 4096, 10);
  return b.p;
}

LayerProfile lenet_profile() {
  ProfileBuilder b("lenet", 1, 32, 32);
  b.conv("conv1", 6, 5, 2);
  b.relu("relu1");
  b.pool("pool1", 2);
  b.conv("conv2", 16, 5, 0);
  b.relu("relu2");
  b.pool("pool2", 2);
  const long long flat = b.flat();
  b.flatten("flatten");
  b.fc("fc1", flat, 120);
  b.fc_relu("relu_fc1", 120);
  b.fc("fc2", 120, 84);
  b.fc_relu("relu_fc2", 84);
  b.fc("fc3", 84, 10);
  return b.p;
}

LayerProfile cnn1d_profile() {
  // Two conv blocks over a length-784 signal; cuts 3 and 6 land after the
  // pooling layers.
  LayerProfile p;
  p.model_name = "cnn1d";
  p.input_shape = {1, 784};
  auto conv1d = [](const std::string& name, int in_ch, int out_ch, int len, int k) {
    return LayerProfileEntry{name, static_cast<long long>(out_ch) * len,
                             static_cast<long long>(in_ch) * out_ch * k + out_ch,
                             2.0 * static_cast<double>(out_ch) * len * in_ch * k, false};
  };
  auto relu1d = [](const std::string& name, long long n) {
    return LayerProfileEntry{name, n, 0, static_cast<double>(n), true};
  };
  auto pool1d = [](const std::string& name, int ch, int len, int k) {
    return LayerProfileEntry{name, static_cast<long long>(ch) * len,
                             0, static_cast<double>(ch) * len * k, false};
  };

  p.layers.push_back(conv1d("conv1", 1, 32, 784, 25));      // pad 12 keeps length
  p.layers.push_back(relu1d("relu1", 32ll * 784));
  p.layers.push_back(pool1d("pool1", 32, 261, 3));          // (784-3)/3+1
  p.layers.push_back(conv1d("conv2", 32, 64, 261, 25));     // pad 12 keeps length
  p.layers.push_back(relu1d("relu2", 64ll * 261));
  p.layers.push_back(pool1d("pool2", 64, 87, 3));           // (261-3)/3+1
  p.layers.push_back({"flatten", 64ll * 87, 0, 0.0, true});
  p.layers.push_back({"fc1", 1024, 64ll * 87 * 1024 + 1024,
                      2.0 * 64 * 87 * 1024, false});
  p.layers.push_back(relu1d("relu_fc1", 1024));
  p.layers.push_back({"fc2", 12, 1024ll * 12 + 12, 2.0 * 1024 * 12, false});
  return p;
}

LayerProfile profile_model(const SequentialModel& model) {
  LayerProfile p;
  p.model_name = model.name;
  p.input_shape = model.input_shape;
  Shape s = model.input_shape;
  for (int i = 0; i < model.num_layers(); ++i) {
    const Layer& l = model.layers[i];
    const double flops = l.forward_flops(s);
    s = l.output_shape(s);
    p.layers.push_back({layer_kind_name(l.kind) + "_" + std::to_string(i),
                        static_cast<long long>(numel(s)), l.parameter_count(), flops,
                        l.in_place()});
  }
  return p;
}

nlohmann::json profile_to_json(const LayerProfile& profile) {
  nlohmann::json j;
  j["model"] = profile.model_name;
  j["input_shape"] = profile.input_shape;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& e : profile.layers) {
    layers.push_back({{"name", e.name},
                      {"output_elements", e.output_elements},
                      {"params", e.params},
                      {"flops", e.forward_flops},
                      {"in_place", e.in_place}});
  }
  j["layers"] = layers;
  return j;
}

LayerProfile profile_from_json(const nlohmann::json& j) {
  LayerProfile p;
  p.model_name = j.value("model", "profile");
  p.input_shape = j.at("input_shape").get<Shape>();
  for (const auto& e : j.at("layers")) {
    p.layers.push_back({e.at("name").get<std::string>(),
                        e.at("output_elements").get<long long>(),
                        e.at("params").get<long long>(), e.at("flops").get<double>(),
                        e.value("in_place", false)});
  }
  return p;
}

}  // namespace splitbench
