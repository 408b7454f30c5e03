#include "splitbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "splitbench/rng.hpp"

namespace splitbench {

Shape Dataset::sample_shape() const {
  const Shape& s = inputs.shape();
  return Shape(s.begin() + 1, s.end());
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
  const Shape sample = sample_shape();
  const std::size_t stride = numel(sample);
  std::vector<double> values;
  values.reserve(indices.size() * stride);
  std::vector<int> lab;
  lab.reserve(indices.size());
  const auto& src = inputs.values();
  for (int idx : indices) {
    if (idx < 0 || idx >= static_cast<int>(size())) {
      throw std::invalid_argument("subset: index " + std::to_string(idx) + " out of range");
    }
    values.insert(values.end(), src.begin() + idx * stride, src.begin() + (idx + 1) * stride);
    lab.push_back(labels[idx]);
  }
  Shape shape{static_cast<int>(indices.size())};
  shape.insert(shape.end(), sample.begin(), sample.end());
  return Dataset{Tensor(std::move(shape), std::move(values)), std::move(lab), num_classes};
}

Dataset Dataset::slice(int begin, int end) const {
  std::vector<int> idx;
  for (int i = begin; i < end; ++i) idx.push_back(i);
  return subset(idx);
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  if (a.sample_shape() != b.sample_shape() || a.num_classes != b.num_classes) {
    throw std::invalid_argument("concat: incompatible datasets");
  }
  std::vector<double> values = a.inputs.values();
  const auto& bv = b.inputs.values();
  values.insert(values.end(), bv.begin(), bv.end());
  std::vector<int> labels = a.labels;
  labels.insert(labels.end(), b.labels.begin(), b.labels.end());
  Shape shape = a.inputs.shape();
  shape[0] += b.inputs.shape()[0];
  return Dataset{Tensor(std::move(shape), std::move(values)), std::move(labels), a.num_classes};
}

namespace {

// 8x8 glyph bitmaps, one byte per row, bit 7 = leftmost pixel.
constexpr unsigned char kDigitGlyphs[10][8] = {
    {0x3C, 0x66, 0x6E, 0x76, 0x66, 0x66, 0x3C, 0x00},  // 0
    {0x18, 0x38, 0x18, 0x18, 0x18, 0x18, 0x7E, 0x00},  // 1
    {0x3C, 0x66, 0x06, 0x0C, 0x18, 0x30, 0x7E, 0x00},  // 2
    {0x3C, 0x66, 0x06, 0x1C, 0x06, 0x66, 0x3C, 0x00},  // 3
    {0x0C, 0x1C, 0x3C, 0x6C, 0x7E, 0x0C, 0x0C, 0x00},  // 4
    {0x7E, 0x60, 0x7C, 0x06, 0x06, 0x66, 0x3C, 0x00},  // 5
    {0x1C, 0x30, 0x60, 0x7C, 0x66, 0x66, 0x3C, 0x00},  // 6
    {0x7E, 0x06, 0x0C, 0x18, 0x30, 0x30, 0x30, 0x00},  // 7
    {0x3C, 0x66, 0x66, 0x3C, 0x66, 0x66, 0x3C, 0x00},  // 8
    {0x3C, 0x66, 0x66, 0x3E, 0x06, 0x0C, 0x38, 0x00},  // 9
};

constexpr unsigned char kLetterGlyphs[10][8] = {
    {0x18, 0x3C, 0x66, 0x66, 0x7E, 0x66, 0x66, 0x00},  // A
    {0x7C, 0x66, 0x66, 0x7C, 0x66, 0x66, 0x7C, 0x00},  // B
    {0x3C, 0x66, 0x60, 0x60, 0x60, 0x66, 0x3C, 0x00},  // C
    {0x78, 0x6C, 0x66, 0x66, 0x66, 0x6C, 0x78, 0x00},  // D
    {0x7E, 0x60, 0x60, 0x78, 0x60, 0x60, 0x7E, 0x00},  // E
    {0x7E, 0x60, 0x60, 0x78, 0x60, 0x60, 0x60, 0x00},  // F
    {0x3C, 0x66, 0x60, 0x6E, 0x66, 0x66, 0x3C, 0x00},  // G
    {0x66, 0x66, 0x66, 0x7E, 0x66, 0x66, 0x66, 0x00},  // H
    {0x3C, 0x18, 0x18, 0x18, 0x18, 0x18, 0x3C, 0x00},  // I
    {0x1E, 0x0C, 0x0C, 0x0C, 0x0C, 0x6C, 0x38, 0x00},  // J
};

Dataset render_glyphs(const unsigned char glyphs[10][8], int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> values(static_cast<std::size_t>(n) * 64);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const int cls = static_cast<int>(rng.index(10));
    labels[i] = cls;
    const int dy = static_cast<int>(rng.index(3)) - 1;
    const int dx = static_cast<int>(rng.index(3)) - 1;
    double* img = values.data() + static_cast<std::size_t>(i) * 64;
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const int sy = y - dy, sx = x - dx;
        double v = 0.0;
        if (sy >= 0 && sy < 8 && sx >= 0 && sx < 8) {
          v = (glyphs[cls][sy] >> (7 - sx)) & 1 ? 1.0 : 0.0;
        }
        v += rng.normal(0.0, 0.15);
        img[y * 8 + x] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return Dataset{Tensor({n, 1, 8, 8}, std::move(values)), std::move(labels), 10};
}

}  // namespace

Dataset make_synthetic_digits(int n, std::uint64_t seed) {
  return render_glyphs(kDigitGlyphs, n, seed);
}

Dataset make_synthetic_letters(int n, std::uint64_t seed) {
  return render_glyphs(kLetterGlyphs, n, seed);
}

Dataset make_synthetic_1d(int n, int num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("make_synthetic_1d: need >= 2 classes");
  constexpr int kLen = 32;
  Rng rng(seed);
  std::vector<double> values(static_cast<std::size_t>(n) * kLen);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const int cls = static_cast<int>(rng.index(static_cast<std::size_t>(num_classes)));
    labels[i] = cls;
    const double phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double freq = 1.0 + cls;
    double* row = values.data() + static_cast<std::size_t>(i) * kLen;
    for (int t = 0; t < kLen; ++t) {
      row[t] = std::sin(2.0 * 3.14159265358979323846 * freq * t / kLen + phase) +
               rng.normal(0.0, 0.1);
    }
  }
  return Dataset{Tensor({n, kLen}, std::move(values)), std::move(labels), num_classes};
}

namespace {

std::uint32_t read_u32_be(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("load_idx: cannot open " + images_path);
  if (read_u32_be(img) != 0x00000803) {
    throw std::runtime_error("load_idx: " + images_path + " is not an IDX3 image file");
  }
  const int n = static_cast<int>(read_u32_be(img));
  const int rows = static_cast<int>(read_u32_be(img));
  const int cols = static_cast<int>(read_u32_be(img));
  std::vector<unsigned char> raw(static_cast<std::size_t>(n) * rows * cols);
  img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!img) throw std::runtime_error("load_idx: truncated image data in " + images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("load_idx: cannot open " + labels_path);
  if (read_u32_be(lab) != 0x00000801) {
    throw std::runtime_error("load_idx: " + labels_path + " is not an IDX1 label file");
  }
  const int nl = static_cast<int>(read_u32_be(lab));
  if (nl != n) throw std::runtime_error("load_idx: image/label count mismatch");
  std::vector<unsigned char> raw_labels(n);
  lab.read(reinterpret_cast<char*>(raw_labels.data()), n);
  if (!lab) throw std::runtime_error("load_idx: truncated label data in " + labels_path);

  std::vector<double> values(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) values[i] = raw[i] / 255.0;
  std::vector<int> labels(raw_labels.begin(), raw_labels.end());
  int num_classes = 0;
  for (int l : labels) num_classes = std::max(num_classes, l + 1);
  return Dataset{Tensor({n, 1, rows, cols}, std::move(values)), std::move(labels), num_classes};
}

namespace {

std::vector<int> indices_with_labels(const Dataset& d, int lo, int hi) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(d.size()); ++i) {
    if (d.labels[i] >= lo && d.labels[i] < hi) out.push_back(i);
  }
  return out;
}

/// part indices + mix_fraction * |full| uniform draws from the full set.
std::vector<int> augment_with_mix(const Dataset& d, std::vector<int> part, double mix_fraction,
                                  Rng& rng) {
  const int extra = static_cast<int>(mix_fraction * static_cast<double>(d.size()));
  for (int i = 0; i < extra; ++i) part.push_back(static_cast<int>(rng.index(d.size())));
  return part;
}

std::vector<Dataset> deal_round_robin(const Dataset& d, const std::vector<int>& indices,
                                      const std::vector<int>& clients, int num_clients) {
  std::vector<std::vector<int>> per_client(num_clients);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    per_client[clients[i % clients.size()]].push_back(indices[i]);
  }
  std::vector<Dataset> out;
  for (int c = 0; c < num_clients; ++c) out.push_back(d.subset(per_client[c]));
  return out;
}

}  // namespace

PartitionedData partition_dataset(const Dataset& train, const Dataset& test,
                                  const DatasetSpec& spec, int num_clients) {
  if (num_clients < 1) throw std::invalid_argument("partition_dataset: need >= 1 clients");
  if (spec.mix_fraction < 0.0 || spec.mix_fraction > 1.0) {
    throw std::invalid_argument("partition_dataset: mix_fraction must be in [0,1]");
  }
  PartitionedData out;
  out.union_test = test;
  Rng rng(derive_seed(spec.seed, 0x9a7));

  if (spec.partition == PartitionScheme::Iid) {
    std::vector<int> train_perm = rng.permutation(static_cast<int>(train.size()));
    std::vector<int> test_perm = rng.permutation(static_cast<int>(test.size()));
    for (int c = 0; c < num_clients; ++c) {
      std::vector<int> tr, te;
      for (std::size_t i = c; i < train_perm.size(); i += num_clients) tr.push_back(train_perm[i]);
      for (std::size_t i = c; i < test_perm.size(); i += num_clients) te.push_back(test_perm[i]);
      out.train_shards.push_back(train.subset(tr));
      out.test_shards.push_back(test.subset(te));
      out.part_of_client.push_back(0);
    }
    return out;
  }

  // TwoPartNonIid
  const int k = train.num_classes;
  if (k % 2 != 0) {
    throw std::invalid_argument("partition_dataset: two_part_noniid needs an even class count, got " +
                                std::to_string(k));
  }
  const int half = k / 2;
  std::vector<std::vector<int>> train_parts = {indices_with_labels(train, 0, half),
                                               indices_with_labels(train, half, k)};
  std::vector<std::vector<int>> test_parts = {indices_with_labels(test, 0, half),
                                              indices_with_labels(test, half, k)};
  for (int p = 0; p < 2; ++p) {
    train_parts[p] = augment_with_mix(train, std::move(train_parts[p]), spec.mix_fraction, rng);
    test_parts[p] = augment_with_mix(test, std::move(test_parts[p]), spec.mix_fraction, rng);
    out.test_parts.push_back(test.subset(test_parts[p]));
  }

  // clients alternate across the two parts
  std::vector<std::vector<int>> clients_of_part(2);
  for (int c = 0; c < num_clients; ++c) {
    out.part_of_client.push_back(c % 2);
    clients_of_part[c % 2].push_back(c);
  }
  out.train_shards.resize(num_clients);
  out.test_shards.resize(num_clients);
  for (int p = 0; p < 2; ++p) {
    if (clients_of_part[p].empty()) continue;
    auto shards = deal_round_robin(train, train_parts[p], clients_of_part[p], num_clients);
    for (int c : clients_of_part[p]) out.train_shards[c] = std::move(shards[c]);
    for (int c : clients_of_part[p]) out.test_shards[c] = out.test_parts[p];
  }
  return out;
}

PartitionedData build_data(const DatasetSpec& spec, int num_clients) {
  const int train_n = spec.samples_per_client * num_clients;
  const int test_n = std::max(64, train_n / 4);
  Dataset train, test;
  switch (spec.kind) {
    case DatasetKind::SyntheticDigits:
      train = make_synthetic_digits(train_n, derive_seed(spec.seed, 1));
      test = make_synthetic_digits(test_n, derive_seed(spec.seed, 2));
      break;
    case DatasetKind::Synthetic1d:
      train = make_synthetic_1d(train_n, spec.num_classes, derive_seed(spec.seed, 1));
      test = make_synthetic_1d(test_n, spec.num_classes, derive_seed(spec.seed, 2));
      break;
    case DatasetKind::File: {
      Dataset all = load_idx(spec.images_path, spec.labels_path);
      const int cutoff = static_cast<int>(all.size()) * 4 / 5;
      train = all.slice(0, cutoff);
      test = all.slice(cutoff, static_cast<int>(all.size()));
      break;
    }
  }
  return partition_dataset(train, test, spec, num_clients);
}

}  // namespace splitbench
