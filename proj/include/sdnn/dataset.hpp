#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdnn/tensor.hpp"

namespace sdnn::data {

// A labelled sample collection.  images holds either [N, H, W] grayscale
// images or [N, d] flat feature vectors; labels are class ids in [0, C).
struct Dataset {
  Tensor images;
  std::vector<int> labels;
  std::string split;                 // "train", "test", ...
  double normalization_scale = 1.0;  // factor applied to raw values at load

  std::size_t size() const { return labels.size(); }
  std::vector<std::size_t> sample_shape() const;
  std::size_t sample_numel() const;
  Tensor sample(std::size_t i) const;
  Dataset subset(std::size_t offset, std::size_t count) const;
  void validate(std::size_t class_count) const;
};

// IDX image/label pair (the big-endian format used for digit corpora).
// Pixels are scaled to [0, 1] by 1/255.  Throws with a distinct message for
// bad magics, truncated files, and image/label count mismatches.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path);

// Gaussian class blobs in R^dim: class centers are `separation` apart from
// the origin in random directions, unit within-class noise.  Flat [N, dim]
// samples, labels cycle through classes.  Deterministic per seed.
Dataset synth_blobs(int classes, int per_class, int dim, double separation,
                    std::uint64_t seed);

// Horizontal flip augmentation: each image is mirrored left-to-right with
// the given probability.  Requires image-shaped ([N, H, W]) data.
// Deterministic per seed; probability 0 returns an unchanged copy without
// consuming randomness.
Dataset augment_flip(const Dataset& ds, double probability,
                     std::uint64_t seed);

// CIFAR-10 binary batches are not supported in this build; the entry point
// exists so callers can probe for it.  Each batch file would hold 10000
// records of 1 label byte + 3072 channel-major pixel bytes.  Always throws.
Dataset load_cifar10(const std::vector<std::string>& batch_files);

}  // namespace sdnn::data
