#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fdnet {

/// Batched real feature maps, NCHW layout.
struct Tensor4 {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Tensor4() = default;
  Tensor4(std::size_t n, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : batch(n), channels(c), height(h), width(w), values(n * c * h * w, fill) {}

  std::size_t size() const noexcept { return values.size(); }
  std::size_t plane() const noexcept { return height * width; }
  std::size_t sample_size() const noexcept { return channels * height * width; }

  std::size_t index(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return ((n * channels + c) * height + h) * width + w;
  }
  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return values[index(n, c, h, w)];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return values[index(n, c, h, w)];
  }

  bool same_shape(const Tensor4& o) const noexcept {
    return batch == o.batch && channels == o.channels && height == o.height && width == o.width;
  }
};

/// Batched multi-channel centered spectra in polar form. Both planes use the
/// NCHW layout of Tensor4. Used for values and for their cotangents
/// (d/dmagnitude, d/dphase) alike.
struct SpectralTensor {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> magnitude;
  std::vector<double> phase;

  SpectralTensor() = default;
  SpectralTensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w)
      : batch(n), channels(c), height(h), width(w), magnitude(n * c * h * w), phase(n * c * h * w) {}

  std::size_t size() const noexcept { return magnitude.size(); }
  std::size_t plane() const noexcept { return height * width; }
  std::size_t index(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return ((n * channels + c) * height + h) * width + w;
  }

  bool same_shape(const SpectralTensor& o) const noexcept {
    return batch == o.batch && channels == o.channels && height == o.height && width == o.width;
  }
};

/// Learnable (or persisted) tensor with its gradient and momentum buffer.
struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> velocity;

  Parameter() = default;
  Parameter(std::string n, std::vector<std::size_t> dims);

  std::size_t size() const noexcept { return value.size(); }
  void zero_grad();
};

enum class Domain { spatial, spectral };

/// Per-sample feature shape, used to validate layer chains before running.
struct FeatureShape {
  Domain domain = Domain::spatial;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

std::string to_string(const FeatureShape& s);

}  // namespace fdnet
