#pragma once

// Frequency-domain layers: sparse pointwise products, the second-harmonic
// activation (2SReLU), spectral pooling, DC removal and polar batch
// normalization. All spectra are DC-centered, see spectrum.hpp.
//
// Values travel between layers in polar form (magnitude, phase planes) and so
// do cotangents: backward() receives d/dmagnitude and d/dphase. Layers whose
// algebra is complex-linear work in rectangular coordinates internally and
// convert at their boundaries.

#include <numbers>
#include <vector>

#include "fdnet/nn.hpp"
#include "fdnet/spectrum.hpp"

namespace fdnet {

struct TwoSReLUConfig {
  double alpha = 1.0;
  /// Second-to-first harmonic amplitude ratio of a half-wave rectified sine.
  double beta = 4.0 / (3.0 * std::numbers::pi);
};

enum class SparseMode {
  polar,          // |x||w| at phase(x) + phase(w): the complex product
  hadamard_both,  // |x||w| at phase(x) * phase(w)
};

// ------------------------------------------------------------ 2SReLU kernels

/// Low-frequency update region of an H x W centered spectrum: every (u, v)
/// other than DC with |u| <= (H/2)/2 and |v| <= (W/2)/2, in row-major order.
std::vector<FrequencyIndex> low_frequency_region(std::size_t height, std::size_t width);

/// Storage position of the second harmonic (2u, 2v). Offsets wrap around the
/// axis, so on even sizes 2u = H/2 lands on the Nyquist row -H/2.
std::size_t second_harmonic_position(std::size_t height, std::size_t width, FrequencyIndex p);

/// out(p) = alpha*in(p) + beta*in(2p) for p in the region, out(q) = in(q)
/// elsewhere. All reads use the input (simultaneous update).
ComplexGrid tsrelu_apply(const ComplexGrid& input, const TwoSReLUConfig& cfg);

/// Transpose of tsrelu_apply: g_in(p) = alpha*g(p) for p in the region,
/// g_in(q) = g(q) elsewhere, then g_in(2p) += beta*g(p).
ComplexGrid tsrelu_adjoint(const ComplexGrid& grad_output, const TwoSReLUConfig& cfg);

/// Polar convenience wrapper over tsrelu_apply.
Spectrum tsrelu_forward(const Spectrum& input, const TwoSReLUConfig& cfg);

// ------------------------------------------------------ single-plane helpers

/// Keeps the centered out_h x out_w block.
Spectrum spectral_pool(const Spectrum& input, std::size_t out_h, std::size_t out_w);

/// Zeroes the DC bin.
Spectrum dc_removal(const Spectrum& input);

/// Single-channel sparse product.
Spectrum sparse_product(const Spectrum& x, const Spectrum& w, SparseMode mode);

// -------------------------------------------------------------------- layers

/// Learnable pointwise complex weights over the whole spectrum, one plane per
/// (out, in) channel pair. Per-pair terms are summed over input channels in
/// rectangular coordinates.
class SparseLayer final : public Layer {
 public:
  SparseLayer(std::string name, std::size_t in_channels, std::size_t out_channels,
              std::size_t height, std::size_t width, SparseMode mode, Rng& rng);

  std::string_view kind() const override { return "sparse"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;
  std::vector<Parameter*> parameters() override { return {&w_magnitude_, &w_phase_}; }

  Parameter& w_magnitude() noexcept { return w_magnitude_; }
  Parameter& w_phase() noexcept { return w_phase_; }
  SparseMode mode() const noexcept { return mode_; }
  /// Real scalars held by the layer: magnitude and phase planes.
  std::size_t weight_count() const noexcept { return w_magnitude_.size() + w_phase_.size(); }

 private:
  std::size_t in_, out_, height_, width_;
  SparseMode mode_;
  Parameter w_magnitude_;  // out x in x H x W
  Parameter w_phase_;

  SpectralTensor input_;
  std::vector<double> x_re_, x_im_;  // input in rectangular form
  std::vector<double> y_re_, y_im_;  // output in rectangular form
  bool has_forward_ = false;
};

class TwoSReLU final : public Layer {
 public:
  TwoSReLU(std::string name, TwoSReLUConfig cfg) : Layer(std::move(name)), cfg_(cfg) {}

  std::string_view kind() const override { return "2srelu"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;
  const TwoSReLUConfig& config() const noexcept { return cfg_; }

 private:
  TwoSReLUConfig cfg_;
  SpectralTensor input_;
  std::vector<double> x_re_, x_im_;
  std::vector<double> y_re_, y_im_;
  bool has_forward_ = false;
};

class SpectralPool final : public Layer {
 public:
  SpectralPool(std::string name, std::size_t out_h, std::size_t out_w)
      : Layer(std::move(name)), out_h_(out_h), out_w_(out_w) {}

  std::string_view kind() const override { return "spectral_pool"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;

 private:
  std::size_t out_h_, out_w_;
  std::size_t batch_ = 0, channels_ = 0, in_h_ = 0, in_w_ = 0;
  bool has_forward_ = false;
};

class DcRemoval final : public Layer {
 public:
  explicit DcRemoval(std::string name) : Layer(std::move(name)) {}

  std::string_view kind() const override { return "dc_removal"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;

 private:
  bool has_forward_ = false;
};

/// Batch normalization applied separately to the magnitude and the phase
/// planes (per channel). Normalized magnitudes are clamped at 0 so the output
/// stays a valid polar spectrum.
class SpectralBatchNorm final : public Layer {
 public:
  SpectralBatchNorm(std::string name, std::size_t channels, double epsilon = 1e-5,
                    double momentum = 0.9);

  std::string_view kind() const override { return "spectral_batchnorm"; }
  Feature forward(const Feature& input, Mode mode) override;
  Feature backward(const Feature& grad_output) override;
  FeatureShape output_shape(const FeatureShape& input) const override;
  std::vector<Parameter*> state() override;

 private:
  BatchNormCore magnitude_;
  BatchNormCore phase_;
  std::vector<bool> clamped_;
  SpectralTensor shape_;
  bool has_forward_ = false;
};

}  // namespace fdnet
