#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fdnet/tensor.hpp"

namespace fdnet {

/// Values and cotangents flowing between layers. A layer's backward takes and
/// returns the same alternative as its forward output and input respectively.
using Feature = std::variant<Tensor4, SpectralTensor>;

enum class Mode { train, eval };

std::size_t batch_of(const Feature& f);
bool all_finite(const Feature& f);

/// Uniform forward/backward contract. backward() must follow the matching
/// forward(); it returns the input cotangent and accumulates (+=) parameter
/// gradients.
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const std::string& name() const noexcept { return name_; }
  virtual std::string_view kind() const = 0;

  virtual Feature forward(const Feature& input, Mode mode) = 0;
  virtual Feature backward(const Feature& grad_output) = 0;

  /// Output shape for a given input shape; throws ConfigError when the input
  /// is incompatible.
  virtual FeatureShape output_shape(const FeatureShape& input) const = 0;

  /// Trainable parameters.
  virtual std::vector<Parameter*> parameters() { return {}; }
  /// Everything persisted in a checkpoint: parameters plus running buffers.
  virtual std::vector<Parameter*> state() { return parameters(); }

 private:
  std::string name_;
};

using LayerPtr = std::unique_ptr<Layer>;

class Sequential final : public Layer {
 public:
  explicit Sequential(std::string name) : Layer(std::move(name)) {}

  std::string_view kind() const override { return "sequential"; }
  void add(LayerPtr layer) { layers_.push_back(std::move(layer)); }
  const std::vector<LayerPtr>& layers() const noexcept { return layers_; }

  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;
  std::vector<Parameter*> parameters() override;
  std::vector<Parameter*> state() override;

  /// Name of the first (innermost) layer whose output is non-finite for this
  /// input, or empty if none. Runs a forward pass.
  std::string first_non_finite_layer(const Feature& input, Mode mode);

 private:
  std::vector<LayerPtr> layers_;
};

/// Splits a spectral input along channels into equal groups, runs one
/// sub-network per group and concatenates the results along channels.
class Branches final : public Layer {
 public:
  explicit Branches(std::string name) : Layer(std::move(name)) {}

  std::string_view kind() const override { return "branches"; }
  void add(std::unique_ptr<Sequential> branch) { branches_.push_back(std::move(branch)); }
  const std::vector<std::unique_ptr<Sequential>>& branches() const noexcept { return branches_; }

  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;
  std::vector<Parameter*> parameters() override;
  std::vector<Parameter*> state() override;

 private:
  std::vector<std::unique_ptr<Sequential>> branches_;
  std::vector<std::size_t> out_channels_;
  bool has_forward_ = false;
};

/// Flattens each sample to a (batch, features, 1, 1) tensor. Spectra are laid
/// out as all magnitude planes followed by all phase planes.
class Flatten final : public Layer {
 public:
  explicit Flatten(std::string name) : Layer(std::move(name)) {}

  std::string_view kind() const override { return "flatten"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;

 private:
  Domain domain_ = Domain::spatial;
  std::size_t batch_ = 0, channels_ = 0, height_ = 0, width_ = 0;
  bool has_forward_ = false;
};

/// Helpers for layers that accept only one alternative.
const Tensor4& expect_spatial(const Feature& f, const Layer& who);
const SpectralTensor& expect_spectral(const Feature& f, const Layer& who);

}  // namespace fdnet
