#include "splitbench/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "splitbench/rng.hpp"

namespace splitbench {

double tau(int n_correct, int n_reconstructed) {
  if (n_reconstructed <= 0) {
    throw std::invalid_argument("tau: n_reconstructed must be positive");
  }
  if (n_correct < 0 || n_correct > n_reconstructed) {
    throw std::invalid_argument("tau: n_correct out of [0, n_reconstructed]");
  }
  return 1.0 - static_cast<double>(n_correct) / static_cast<double>(n_reconstructed);
}

nlohmann::json AttackReport::to_json() const {
  return {{"n_reconstructed", n_reconstructed},
          {"n_correct", n_correct},
          {"tau", tau},
          {"reconstruction_mse", reconstruction_mse},
          {"reconstruction_shape", reconstructions.defined() ? reconstructions.shape() : Shape{}}};
}

namespace {

/// Copy of the architecture with weight values dropped; the attacker knows
/// the structure, never the trained parameters.
SequentialModel arch_only(const SequentialModel& model, const std::string& name) {
  SequentialModel out = model;
  out.name = name;
  for (auto& l : out.layers) {
    l.weight = Tensor();
    l.bias = Tensor();
  }
  return out;
}

}  // namespace

SequentialModel build_autoencoder(const SequentialModel& client_arch) {
  if (client_arch.empty()) {
    throw std::invalid_argument("build_autoencoder: client architecture is empty");
  }
  // Input shape of every client layer, for the mirrors.
  std::vector<Shape> in_shapes;
  Shape s = client_arch.input_shape;
  for (const auto& l : client_arch.layers) {
    in_shapes.push_back(s);
    s = l.output_shape(s);
  }

  std::vector<Layer> decoder;
  for (int i = client_arch.num_layers() - 1; i >= 0; --i) {
    const Layer& l = client_arch.layers[i];
    const Shape& in = in_shapes[i];
    switch (l.kind) {
      case LayerKind::Relu:
      case LayerKind::Sigmoid:
        continue;  // decoder supplies its own activations
      case LayerKind::Dense:
        decoder.push_back(Layer::dense(l.out_features, l.in_features));
        break;
      case LayerKind::Conv2d: {
        if ((in[1] + 2 * l.padding - l.kernel) % l.stride != 0 ||
            (in[2] + 2 * l.padding - l.kernel) % l.stride != 0) {
          throw std::invalid_argument("build_autoencoder: layer " + std::to_string(i) + " (" +
                                      l.describe() +
                                      ") floors its output size; a transposed conv cannot "
                                      "restore the input shape exactly");
        }
        decoder.push_back(
            Layer::transposed_conv2d(l.out_channels, l.in_channels, l.kernel, l.stride,
                                     l.padding));
        break;
      }
      case LayerKind::MaxPool2d: {
        const Shape out = l.output_shape(in);
        if (l.stride != l.kernel || out[1] * l.stride != in[1] || out[2] * l.stride != in[2]) {
          throw std::invalid_argument("build_autoencoder: layer " + std::to_string(i) + " (" +
                                      l.describe() +
                                      ") cannot be inverted by nearest-neighbor upsampling");
        }
        decoder.push_back(Layer::upsample2d(l.stride));
        break;
      }
      case LayerKind::Flatten:
        decoder.push_back(Layer::reshape(in));
        break;
      default:
        throw std::invalid_argument("build_autoencoder: no mirror rule for layer " +
                                    std::to_string(i) + " (" + l.describe() + ")");
    }
    decoder.push_back(Layer::relu());
  }
  if (decoder.empty()) {
    throw std::invalid_argument("build_autoencoder: client has no shape-changing layers");
  }
  // terminal activation: sigmoid onto [0,1] instead of the last relu
  decoder.back() = Layer::sigmoid();

  std::vector<Layer> layers;
  SequentialModel encoder = arch_only(client_arch, "encoder");
  layers.insert(layers.end(), encoder.layers.begin(), encoder.layers.end());
  layers.insert(layers.end(), decoder.begin(), decoder.end());
  SequentialModel ae("autoencoder", client_arch.input_shape, std::move(layers));
  if (ae.output_shape() != client_arch.input_shape) {
    throw std::logic_error("build_autoencoder: decoder does not restore the input shape");
  }
  return ae;
}

namespace {

struct MiniBatch {
  Tensor x;
  std::vector<int> y;
};

std::vector<MiniBatch> shuffled_batches(const Dataset& data, int batch_size, Rng& rng) {
  std::vector<int> idx = rng.permutation(static_cast<int>(data.size()));
  const int n = static_cast<int>(idx.size());
  const int bs = std::min(batch_size, n);
  const int nb = std::max(1, n / bs);
  std::vector<MiniBatch> out;
  for (int b = 0; b < nb; ++b) {
    std::vector<int> sel(idx.begin() + b * bs, idx.begin() + std::min(n, (b + 1) * bs));
    Dataset d = data.subset(sel);
    out.push_back({d.inputs, d.labels});
  }
  return out;
}

}  // namespace

AttackReport run_attack(const SequentialModel& victim_client_arch,
                        const SequentialModel& victim_full_arch,
                        const std::vector<InterceptedBatch>& captured, const Dataset& source,
                        const Dataset& attacker_data, const AttackConfig& config) {
  if (config.autoencoder_epochs < 1 || config.classifier_epochs < 1) {
    throw std::invalid_argument("run_attack: epochs must be >= 1");
  }
  if (captured.empty()) throw std::invalid_argument("run_attack: nothing captured");

  // 1. train the mirrored autoencoder on the attacker's own dataset
  SequentialModel ae = build_autoencoder(victim_client_arch);
  ae.init_weights(derive_seed(config.seed, 1));
  Rng ae_rng(derive_seed(config.seed, 3));
  for (int e = 0; e < config.autoencoder_epochs; ++e) {
    for (const auto& b : shuffled_batches(attacker_data, config.batch_size, ae_rng)) {
      Tensor x = b.x.detach();
      Tensor loss = mse_loss(ae.forward(x), x);
      loss.backward();
      sgd_step(ae, config.learning_rate);
    }
  }

  // 2. freeze; decode the captured intermediate data
  const PartitionedModel enc_dec = cut(ae, victim_client_arch.num_layers());
  const SequentialModel& decoder = enc_dec.server;
  const Shape expected = enc_dec.client.output_shape();

  std::vector<double> rec_values;
  std::vector<int> true_labels;
  double mse_sum = 0.0;
  long long mse_count = 0;
  Shape rec_shape;
  for (const auto& cap : captured) {
    const Shape& cs = cap.intermediate.shape();
    Shape sample(cs.begin() + 1, cs.end());
    if (sample != expected) {
      throw std::invalid_argument("run_attack: captured sample shape " + shape_str(sample) +
                                  " does not match the encoder output " + shape_str(expected));
    }
    Tensor rec = decoder.forward(cap.intermediate.detach());
    const auto& rv = rec.values();
    rec_values.insert(rec_values.end(), rv.begin(), rv.end());
    true_labels.insert(true_labels.end(), cap.labels.begin(), cap.labels.end());
    rec_shape = rec.shape();
    const auto& sv = cap.source.values();
    for (std::size_t i = 0; i < sv.size(); ++i) {
      const double d = rv[i] - sv[i];
      mse_sum += d * d;
    }
    mse_count += static_cast<long long>(sv.size());
  }
  rec_shape[0] = static_cast<int>(true_labels.size());
  Tensor reconstructions(rec_shape, std::move(rec_values));

  // 3. fresh classifier with the victim's full architecture, true source data
  SequentialModel classifier = arch_only(victim_full_arch, "attack_classifier");
  classifier.init_weights(derive_seed(config.seed, 2));
  Rng cls_rng(derive_seed(config.seed, 4));
  for (int e = 0; e < config.classifier_epochs; ++e) {
    for (const auto& b : shuffled_batches(source, config.batch_size, cls_rng)) {
      Tensor loss = cross_entropy_softmax(classifier.forward(b.x.detach()), b.y);
      loss.backward();
      sgd_step(classifier, config.learning_rate);
    }
  }

  // 4. classify the reconstructions against the true labels
  const int n = static_cast<int>(true_labels.size());
  Tensor logits = classifier.forward(reconstructions.detach());
  const auto& lv = logits.values();
  const int classes = logits.shape()[1];
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    const double* row = lv.data() + static_cast<std::size_t>(i) * classes;
    int best = 0;
    for (int k = 1; k < classes; ++k) {
      if (row[k] > row[best]) best = k;
    }
    if (best == true_labels[i]) ++correct;
  }

  AttackReport report;
  report.reconstructions = reconstructions;
  report.n_reconstructed = n;
  report.n_correct = correct;
  report.tau = tau(correct, n);
  report.reconstruction_mse = mse_sum / static_cast<double>(mse_count);
  return report;
}

void write_pgm_grid(const std::string& path, const Tensor& images, int columns) {
  const Shape& s = images.shape();
  if (s.size() != 4 || s[1] != 1) {
    throw std::invalid_argument("write_pgm_grid: expected [n,1,h,w], got " + shape_str(s));
  }
  const int n = s[0], h = s[2], w = s[3];
  const int cols = std::min(columns, n);
  const int rows = (n + cols - 1) / cols;
  std::vector<unsigned char> canvas(static_cast<std::size_t>(rows * h) * (cols * w), 0);
  const auto& v = images.values();
  for (int i = 0; i < n; ++i) {
    const int gy = (i / cols) * h, gx = (i % cols) * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double val = std::clamp(v[(static_cast<std::size_t>(i) * h + y) * w + x], 0.0, 1.0);
        canvas[static_cast<std::size_t>(gy + y) * (cols * w) + gx + x] =
            static_cast<unsigned char>(val * 255.0 + 0.5);
      }
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_pgm_grid: cannot open " + path);
  os << "P5\n" << cols * w << " " << rows * h << "\n255\n";
  os.write(reinterpret_cast<const char*>(canvas.data()),
           static_cast<std::streamsize>(canvas.size()));
}

}  // namespace splitbench
