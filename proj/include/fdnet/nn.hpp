#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fdnet/layer.hpp"

namespace fdnet {

using Rng = std::mt19937_64;

/// Fills `p` from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform_fan_in(Parameter& p, std::size_t fan_in, Rng& rng);

/// Per-channel batch normalization without the learnable scale/shift.
///
/// Operates on flat buffers laid out as (batch, channels, plane). Statistics
/// are taken over batch x plane. Running statistics follow
/// r <- momentum * r + (1 - momentum) * batch_stat and are used in eval mode.
class BatchNormCore {
 public:
  BatchNormCore(const std::string& name, std::size_t channels, double epsilon = 1e-5,
                double momentum = 0.9);

  std::vector<double> forward(std::span<const double> x, std::size_t batch, std::size_t plane,
                              Mode mode);
  std::vector<double> backward(std::span<const double> grad_output) const;

  std::size_t channels() const noexcept { return channels_; }
  double epsilon() const noexcept { return epsilon_; }
  Parameter& running_mean() noexcept { return running_mean_; }
  Parameter& running_var() noexcept { return running_var_; }

 private:
  std::size_t channels_;
  double epsilon_;
  double momentum_;
  Parameter running_mean_;
  Parameter running_var_;

  // forward cache
  bool has_forward_ = false;
  Mode mode_ = Mode::train;
  std::size_t batch_ = 0;
  std::size_t plane_ = 0;
  std::vector<double> normalized_;
  std::vector<double> inv_std_;
};

class BatchNorm final : public Layer {
 public:
  BatchNorm(std::string name, std::size_t channels, double epsilon = 1e-5, double momentum = 0.9);

  std::string_view kind() const override { return "batchnorm"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;
  std::vector<Parameter*> state() override;

 private:
  BatchNormCore core_;
  Tensor4 shape_;  // values unused, shape of the last input
  bool has_forward_ = false;
};

/// y = W x + b on flattened samples; output is (batch, out, 1, 1).
class FullyConnected final : public Layer {
 public:
  FullyConnected(std::string name, std::size_t in_features, std::size_t out_features, Rng& rng);

  std::string_view kind() const override { return "fully_connected"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

  Parameter& weight() noexcept { return weight_; }
  Parameter& bias() noexcept { return bias_; }
  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }

 private:
  std::size_t in_;
  std::size_t out_;
  Parameter weight_;  // out x in
  Parameter bias_;    // out
  Tensor4 input_;
  bool has_forward_ = false;
};

struct LossAndGrad {
  double loss = 0.0;
  Tensor4 grad;  // same shape as the logits
};

/// Mean cross-entropy of softmax(logits) against integer labels, with the
/// gradient (softmax - onehot) / batch. Logits are (batch, classes, 1, 1).
LossAndGrad softmax_cross_entropy(const Tensor4& logits, std::span<const int> labels);

struct SGDConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t iterations = 100000;
};

/// v <- momentum * v + grad; value <- value - lr * v; then grad <- 0.
void sgd_step(std::span<Parameter* const> params, const SGDConfig& cfg);

struct GradCheckResult {
  double input_error = 0.0;      // relative L2 error of the input gradient
  double parameter_error = 0.0;  // worst relative L2 error over parameters
  double max_error() const noexcept {
    return input_error > parameter_error ? input_error : parameter_error;
  }
};

/// Compares analytic input and parameter gradients of the probe loss
/// <r, layer(x)> (r fixed and random) with central differences of the given
/// step. Parameter gradients are zeroed before and after.
GradCheckResult grad_check(Layer& layer, const Feature& input, double step,
                           Mode mode = Mode::train, std::uint64_t probe_seed = 12345);

/// Relative L2 distance ||a - b|| / max(||a||, ||b||); 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace fdnet
