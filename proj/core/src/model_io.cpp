#include "splitbench/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace splitbench {

using nlohmann::json;

json model_to_json(const SequentialModel& model) {
  json j;
  j["name"] = model.name;
  j["input_shape"] = model.input_shape;
  json layers = json::array();
  for (const auto& l : model.layers) {
    json lj;
    lj["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::Dense:
        lj["in"] = l.in_features;
        lj["out"] = l.out_features;
        lj["bias"] = l.has_bias;
        break;
      case LayerKind::Conv2d:
      case LayerKind::TransposedConv2d:
        lj["in_channels"] = l.in_channels;
        lj["out_channels"] = l.out_channels;
        lj["kernel"] = l.kernel;
        lj["stride"] = l.stride;
        lj["padding"] = l.padding;
        lj["bias"] = l.has_bias;
        break;
      case LayerKind::MaxPool2d:
        lj["kernel"] = l.kernel;
        lj["stride"] = l.stride;
        break;
      case LayerKind::Upsample2d:
        lj["factor"] = l.factor;
        break;
      case LayerKind::Reshape:
        lj["target_shape"] = l.target_shape;
        break;
      default:
        break;
    }
    layers.push_back(lj);
  }
  j["layers"] = layers;
  return j;
}

SequentialModel model_from_json(const json& j) {
  if (!j.contains("layers") || !j.contains("input_shape")) {
    throw std::invalid_argument("model json: missing 'layers' or 'input_shape'");
  }
  std::vector<Layer> layers;
  for (const auto& lj : j.at("layers")) {
    const LayerKind kind = layer_kind_from_name(lj.at("kind").get<std::string>());
    switch (kind) {
      case LayerKind::Dense:
        layers.push_back(Layer::dense(lj.at("in").get<int>(), lj.at("out").get<int>(),
                                      lj.value("bias", true)));
        break;
      case LayerKind::Conv2d:
        layers.push_back(Layer::conv2d(lj.at("in_channels").get<int>(),
                                       lj.at("out_channels").get<int>(),
                                       lj.at("kernel").get<int>(), lj.value("stride", 1),
                                       lj.value("padding", 0), lj.value("bias", true)));
        break;
      case LayerKind::TransposedConv2d:
        layers.push_back(Layer::transposed_conv2d(
            lj.at("in_channels").get<int>(), lj.at("out_channels").get<int>(),
            lj.at("kernel").get<int>(), lj.value("stride", 1), lj.value("padding", 0),
            lj.value("bias", true)));
        break;
      case LayerKind::MaxPool2d:
        layers.push_back(Layer::maxpool2d(lj.at("kernel").get<int>(), lj.value("stride", 0)));
        break;
      case LayerKind::Relu:
        layers.push_back(Layer::relu());
        break;
      case LayerKind::Sigmoid:
        layers.push_back(Layer::sigmoid());
        break;
      case LayerKind::Flatten:
        layers.push_back(Layer::flatten());
        break;
      case LayerKind::Upsample2d:
        layers.push_back(Layer::upsample2d(lj.at("factor").get<int>()));
        break;
      case LayerKind::Reshape:
        layers.push_back(Layer::reshape(lj.at("target_shape").get<Shape>()));
        break;
    }
  }
  return SequentialModel(j.value("name", "model"), j.at("input_shape").get<Shape>(),
                         std::move(layers));
}

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'B', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64_le(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

std::uint64_t get_u64_le(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const WeightVector& weights) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);

  json header;
  header["count"] = weights.values.size();
  json layout = json::array();
  for (const auto& seg : weights.layout) {
    layout.push_back({{"layer", seg.layer_index},
                      {"tensor", seg.tensor},
                      {"shape", seg.shape},
                      {"offset", seg.offset}});
  }
  header["layout"] = layout;
  const std::string header_str = header.dump();

  os.write(kCheckpointMagic, 8);
  put_u64_le(os, header_str.size());
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (double d : weights.values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
    put_u64_le(os, bits);
  }
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

WeightVector load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);

  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  }
  const std::uint64_t header_len = get_u64_le(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw std::runtime_error("load_checkpoint: truncated header in " + path);
  const json header = json::parse(header_str);

  WeightVector wv;
  for (const auto& seg : header.at("layout")) {
    wv.layout.push_back({seg.at("layer").get<int>(), seg.at("tensor").get<std::string>(),
                         seg.at("shape").get<Shape>(), seg.at("offset").get<std::size_t>()});
  }
  const std::size_t count = header.at("count").get<std::size_t>();
  wv.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    wv.values[i] = std::bit_cast<double>(get_u64_le(is));
  }
  if (!is) throw std::runtime_error("load_checkpoint: truncated data in " + path);
  return wv;
}

SequentialModel builtin_model(const std::string& name) {
  if (name == "digits_cnn") {
    return SequentialModel("digits_cnn", {1, 8, 8},
                           {Layer::conv2d(1, 4, 3, 1, 1), Layer::relu(),
                            Layer::conv2d(4, 8, 4, 2, 1), Layer::relu(), Layer::flatten(),
                            Layer::dense(128, 32), Layer::relu(), Layer::dense(32, 10)});
  }
  if (name == "digits_mlp") {
    return SequentialModel("digits_mlp", {1, 8, 8},
                           {Layer::flatten(), Layer::dense(64, 32), Layer::relu(),
                            Layer::dense(32, 16), Layer::relu(), Layer::dense(16, 10)});
  }
  if (name == "synth1d_mlp") {
    return SequentialModel("synth1d_mlp", {32},
                           {Layer::dense(32, 24), Layer::relu(), Layer::dense(24, 12),
                            Layer::relu(), Layer::dense(12, 4)});
  }
  throw std::invalid_argument("builtin_model: unknown model '" + name + "'");
}

std::vector<std::string> builtin_model_names() {
  return {"digits_cnn", "digits_mlp", "synth1d_mlp"};
}

}  // namespace splitbench
