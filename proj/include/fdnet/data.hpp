#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fdnet/nn.hpp"
#include "fdnet/spectrum.hpp"

namespace fdnet {

/// Images with pixel values in [0, 1] and integer class labels.
struct LabeledImageSet {
  std::vector<RealGrid> images;
  std::vector<int> labels;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return images.size(); }
  /// First `n` samples (all when n == 0 or n >= size()).
  LabeledImageSet head(std::size_t n) const;
};

/// Parses a pair of big-endian IDX files (images magic 2051, labels 2049).
LabeledImageSet load_mnist(const std::filesystem::path& images_path,
                           const std::filesystem::path& labels_path);
LabeledImageSet parse_mnist(std::span<const std::uint8_t> image_bytes,
                            std::span<const std::uint8_t> label_bytes);

/// Binary PGM ("P5", maxval 255).
RealGrid parse_pgm(std::span<const std::uint8_t> bytes);
RealGrid load_pgm(const std::filesystem::path& path);

/// Loads an AT&T-style face directory: one sub-directory per subject, each
/// with PGM images. Subjects and images are ordered naturally ("s2" < "s10");
/// the label is the subject's rank in that order.
LabeledImageSet load_att(const std::filesystem::path& root);

struct TrainTestSplit {
  LabeledImageSet train;
  LabeledImageSet test;
};

/// Per-class stratified split, deterministic for a seed.
TrainTestSplit att_split(const LabeledImageSet& set, std::size_t per_class_train,
                         std::uint64_t seed);

/// Bilinear resampling with pixel-center alignment.
RealGrid resize_bilinear(const RealGrid& img, std::size_t height, std::size_t width);

/// Whole-image spectrum followed by the spectra of the four quadrants, each
/// zero-padded to full size: top-left, top-right, bottom-left, bottom-right.
struct PyramidalSpectra {
  std::array<Spectrum, 5> branches;
};

PyramidalSpectra pyramidal_spectra(const RealGrid& img);

/// Shuffled mini-batches without replacement; reshuffles each epoch.
class BatchSampler {
 public:
  BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed);

  /// Indices of the next batch.
  std::vector<std::size_t> next();

 private:
  void reshuffle();

  std::size_t size_;
  std::size_t batch_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace fdnet
