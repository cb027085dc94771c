#include "sdnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace sdnn::data {

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& path,
                          const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw Error("idx file " + path + ": truncated while reading " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

std::vector<std::size_t> Dataset::sample_shape() const {
  if (images.shape.empty()) return {};
  return std::vector<std::size_t>(images.shape.begin() + 1,
                                  images.shape.end());
}

std::size_t Dataset::sample_numel() const {
  return size() == 0 ? 0 : images.numel() / images.shape[0];
}

Tensor Dataset::sample(std::size_t i) const {
  if (i >= size()) throw Error("sample index out of range");
  const std::size_t n = sample_numel();
  Tensor t(sample_shape());
  std::copy(images.data.begin() + static_cast<std::ptrdiff_t>(i * n),
            images.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * n),
            t.data.begin());
  return t;
}

Dataset Dataset::subset(std::size_t offset, std::size_t count) const {
  if (offset + count > size())
    throw Error("subset [" + std::to_string(offset) + ", " +
                std::to_string(offset + count) + ") exceeds dataset size " +
                std::to_string(size()));
  Dataset out;
  out.split = split;
  out.normalization_scale = normalization_scale;
  auto shape = images.shape;
  shape[0] = count;
  const std::size_t n = sample_numel();
  out.images = Tensor(shape);
  std::copy(images.data.begin() + static_cast<std::ptrdiff_t>(offset * n),
            images.data.begin() + static_cast<std::ptrdiff_t>((offset + count) * n),
            out.images.data.begin());
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(offset),
                    labels.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return out;
}

void Dataset::validate(std::size_t class_count) const {
  if (!images.shape.empty() && images.shape[0] != labels.size())
    throw Error("dataset has " + std::to_string(images.shape[0]) +
                " images but " + std::to_string(labels.size()) + " labels");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= class_count)
      throw Error("label " + std::to_string(y) + " out of range for " +
                  std::to_string(class_count) + " classes");
}

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  constexpr std::uint32_t kImagesMagic = 2051;  // 0x00000803
  constexpr std::uint32_t kLabelsMagic = 2049;  // 0x00000801

  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw Error("cannot open idx image file: " + images_path);
  const std::uint32_t im_magic = read_u32_be(imgs, images_path, "magic");
  if (im_magic != kImagesMagic)
    throw Error("idx file " + images_path + ": wrong magic " +
                std::to_string(im_magic) + " (expected " +
                std::to_string(kImagesMagic) + " for images)");
  const std::uint32_t n = read_u32_be(imgs, images_path, "image count");
  const std::uint32_t rows = read_u32_be(imgs, images_path, "row count");
  const std::uint32_t cols = read_u32_be(imgs, images_path, "column count");

  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw Error("cannot open idx label file: " + labels_path);
  const std::uint32_t lb_magic = read_u32_be(labs, labels_path, "magic");
  if (lb_magic != kLabelsMagic)
    throw Error("idx file " + labels_path + ": wrong magic " +
                std::to_string(lb_magic) + " (expected " +
                std::to_string(kLabelsMagic) + " for labels)");
  const std::uint32_t n_labels = read_u32_be(labs, labels_path, "label count");
  if (n != n_labels)
    throw Error("idx pair mismatch: " + std::to_string(n) + " images in " +
                images_path + " vs " + std::to_string(n_labels) +
                " labels in " + labels_path);

  Dataset ds;
  ds.normalization_scale = 1.0 / 255.0;
  ds.images = Tensor({n, rows, cols});
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!imgs.read(reinterpret_cast<char*>(buf.data()),
                   static_cast<std::streamsize>(buf.size())))
      throw Error("idx file " + images_path + ": truncated at image " +
                  std::to_string(i) + " of " + std::to_string(n));
    double* dst = ds.images.data.data() + std::size_t(i) * buf.size();
    for (std::size_t j = 0; j < buf.size(); ++j)
      dst[j] = static_cast<double>(buf[j]) / 255.0;
  }
  std::vector<unsigned char> lab_buf(n);
  if (n > 0 && !labs.read(reinterpret_cast<char*>(lab_buf.data()), n))
    throw Error("idx file " + labels_path + ": truncated label payload (" +
                std::to_string(n) + " labels expected)");
  ds.labels.assign(lab_buf.begin(), lab_buf.end());
  return ds;
}

Dataset synth_blobs(int classes, int per_class, int dim, double separation,
                    std::uint64_t seed) {
  if (classes < 2) throw Error("synth_blobs: need at least 2 classes");
  if (per_class < 1 || dim < 1)
    throw Error("synth_blobs: per_class and dim must be positive");
  auto rng = seeded_rng(seed, 0xb10b'0001);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // class centers: random directions at distance `separation` from the origin
  std::vector<std::vector<double>> centers(static_cast<std::size_t>(classes));
  for (auto& c : centers) {
    c.resize(static_cast<std::size_t>(dim));
    double norm_sq = 0.0;
    for (double& v : c) {
      v = gauss(rng);
      norm_sq += v * v;
    }
    const double scale =
        norm_sq > 0.0 ? separation / std::sqrt(norm_sq) : 0.0;
    for (double& v : c) v *= scale;
  }

  const std::size_t n = static_cast<std::size_t>(classes) * per_class;
  Dataset ds;
  ds.split = "synthetic";
  ds.images = Tensor({n, static_cast<std::size_t>(dim)});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % static_cast<std::size_t>(classes));
    ds.labels[i] = y;
    double* dst = ds.images.data.data() + i * static_cast<std::size_t>(dim);
    const auto& c = centers[static_cast<std::size_t>(y)];
    for (int j = 0; j < dim; ++j)
      dst[j] = c[static_cast<std::size_t>(j)] + gauss(rng);
  }
  return ds;
}

Dataset augment_flip(const Dataset& ds, double probability,
                     std::uint64_t seed) {
  if (probability < 0.0 || probability > 1.0)
    throw Error("augment_flip: probability must lie in [0, 1]");
  Dataset out = ds;
  if (probability == 0.0) return out;
  if (ds.images.shape.size() != 3)
    throw Error("augment_flip: horizontal flip requires [N, H, W] image data, got " +
                shape_string(ds.images.shape));
  const std::size_t N = ds.images.shape[0], H = ds.images.shape[1],
                    W = ds.images.shape[2];
  auto rng = seeded_rng(seed, 0xf11b'0001);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < N; ++i) {
    if (unif(rng) >= probability) continue;
    double* img = out.images.data.data() + i * H * W;
    for (std::size_t r = 0; r < H; ++r)
      std::reverse(img + r * W, img + (r + 1) * W);
  }
  return out;
}

Dataset load_cifar10(const std::vector<std::string>&) {
  throw Error(
      "CIFAR-10 batches are not supported in this build; convert to idx "
      "image/label pairs and use load_idx instead");
}

}  // namespace sdnn::data
