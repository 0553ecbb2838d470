#pragma once

// Spatial-domain baseline layers.

#include <vector>

#include "fdnet/nn.hpp"

namespace fdnet {

/// Stride-1, zero "same" padding cross-correlation (the deep-learning
/// convention, no kernel flip). Kernel is (out, in, k, k) with k odd.
class Conv2d final : public Layer {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t k,
         Rng& rng);

  std::string_view kind() const override { return "conv2d"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;
  std::vector<Parameter*> parameters() override { return {&kernel_, &bias_}; }

  Parameter& kernel() noexcept { return kernel_; }
  Parameter& bias() noexcept { return bias_; }
  /// Kernel weights only, bias excluded.
  std::size_t weight_count() const noexcept { return kernel_.size(); }

 private:
  std::size_t in_, out_, k_;
  Parameter kernel_;
  Parameter bias_;
  // (batch, in*k*k, H*W) patch matrix of the last forward
  std::vector<double> columns_;
  std::size_t batch_ = 0, height_ = 0, width_ = 0;
  bool has_forward_ = false;
};

class Relu final : public Layer {
 public:
  explicit Relu(std::string name) : Layer(std::move(name)) {}

  std::string_view kind() const override { return "relu"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;

 private:
  std::vector<bool> active_;
  Tensor4 shape_;
  bool has_forward_ = false;
};

/// 2x2 windows, stride 2. Ties go to the first cell in row-major order.
class MaxPool2 final : public Layer {
 public:
  explicit MaxPool2(std::string name) : Layer(std::move(name)) {}

  std::string_view kind() const override { return "maxpool2"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;

 private:
  std::vector<std::size_t> argmax_;
  Tensor4 input_shape_;
  bool has_forward_ = false;
};

}  // namespace fdnet
