#include "fdnet/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "fdnet/error.hpp"
#include "fdnet/polar.hpp"

namespace fdnet {

namespace {

// Storage positions of each region member and of its second harmonic.
struct RegionMap {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

RegionMap region_map(std::size_t h, std::size_t w) {
  RegionMap m;
  for (const auto& p : low_frequency_region(h, w)) {
    m.first.push_back(centered_position(h, p.u) * w + centered_position(w, p.v));
    m.second.push_back(second_harmonic_position(h, w, p));
  }
  if (m.first.empty()) {
    throw InvalidArgument("2srelu: low-frequency region of a " + std::to_string(h) + "x" +
                          std::to_string(w) + " spectrum is empty");
  }
  return m;
}

void apply_plane(const double* re, const double* im, double* out_re, double* out_im,
                 std::size_t n, const RegionMap& m, const TwoSReLUConfig& cfg) {
  std::copy_n(re, n, out_re);
  std::copy_n(im, n, out_im);
  for (std::size_t k = 0; k < m.first.size(); ++k) {
    const std::size_t p = m.first[k], q = m.second[k];
    out_re[p] = cfg.alpha * re[p] + cfg.beta * re[q];
    out_im[p] = cfg.alpha * im[p] + cfg.beta * im[q];
  }
}

void adjoint_plane(const double* g_re, const double* g_im, double* out_re, double* out_im,
                   std::size_t n, const RegionMap& m, const TwoSReLUConfig& cfg) {
  std::copy_n(g_re, n, out_re);
  std::copy_n(g_im, n, out_im);
  for (const std::size_t p : m.first) {
    out_re[p] = cfg.alpha * g_re[p];
    out_im[p] = cfg.alpha * g_im[p];
  }
  for (std::size_t k = 0; k < m.first.size(); ++k) {
    const std::size_t p = m.first[k], q = m.second[k];
    out_re[q] += cfg.beta * g_re[p];
    out_im[q] += cfg.beta * g_im[p];
  }
}

std::size_t pool_offset(std::size_t in, std::size_t out) { return in / 2 - out / 2; }

}  // namespace

// ------------------------------------------------------------ 2SReLU kernels

std::vector<FrequencyIndex> low_frequency_region(std::size_t height, std::size_t width) {
  const int ru = static_cast<int>((height / 2) / 2);
  const int rv = static_cast<int>((width / 2) / 2);
  std::vector<FrequencyIndex> out;
  for (int u = -ru; u <= ru; ++u) {
    for (int v = -rv; v <= rv; ++v) {
      if (u == 0 && v == 0) continue;
      out.push_back({u, v});
    }
  }
  return out;
}

std::size_t second_harmonic_position(std::size_t height, std::size_t width, FrequencyIndex p) {
  return centered_position(height, 2 * p.u) * width + centered_position(width, 2 * p.v);
}

ComplexGrid tsrelu_apply(const ComplexGrid& input, const TwoSReLUConfig& cfg) {
  const auto m = region_map(input.height, input.width);
  ComplexGrid out(input.height, input.width);
  apply_plane(input.re.data(), input.im.data(), out.re.data(), out.im.data(), input.size(), m,
              cfg);
  return out;
}

ComplexGrid tsrelu_adjoint(const ComplexGrid& grad_output, const TwoSReLUConfig& cfg) {
  const auto m = region_map(grad_output.height, grad_output.width);
  ComplexGrid out(grad_output.height, grad_output.width);
  adjoint_plane(grad_output.re.data(), grad_output.im.data(), out.re.data(), out.im.data(),
                grad_output.size(), m, cfg);
  return out;
}

Spectrum tsrelu_forward(const Spectrum& input, const TwoSReLUConfig& cfg) {
  return rect_to_polar(tsrelu_apply(polar_to_rect(input), cfg));
}

// ------------------------------------------------------ single-plane helpers

Spectrum spectral_pool(const Spectrum& input, std::size_t out_h, std::size_t out_w) {
  if (out_h > input.height || out_w > input.width || out_h == 0 || out_w == 0) {
    throw InvalidArgument("spectral_pool: output " + std::to_string(out_h) + "x" +
                          std::to_string(out_w) + " does not fit in input " +
                          std::to_string(input.height) + "x" + std::to_string(input.width));
  }
  Spectrum out(out_h, out_w);
  const std::size_t r0 = pool_offset(input.height, out_h);
  const std::size_t c0 = pool_offset(input.width, out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    for (std::size_t c = 0; c < out_w; ++c) {
      const std::size_t src = (r + r0) * input.width + (c + c0);
      out.magnitude[r * out_w + c] = input.magnitude[src];
      out.phase[r * out_w + c] = input.phase[src];
    }
  }
  return out;
}

Spectrum dc_removal(const Spectrum& input) {
  Spectrum out = input;
  const std::size_t dc = input.dc_row() * input.width + input.dc_col();
  out.magnitude[dc] = 0.0;
  out.phase[dc] = 0.0;
  return out;
}

Spectrum sparse_product(const Spectrum& x, const Spectrum& w, SparseMode mode) {
  if (x.height != w.height || x.width != w.width) {
    throw InvalidArgument("sparse_product: spectrum and weight shapes differ");
  }
  Spectrum out(x.height, x.width);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = x.magnitude[i] * w.magnitude[i];
    const double t = mode == SparseMode::polar ? x.phase[i] + w.phase[i] : x.phase[i] * w.phase[i];
    const auto r = polar::to_rect(m, t);
    const auto p = polar::from_rect(r.re, r.im);
    out.magnitude[i] = p.magnitude;
    out.phase[i] = p.phase;
  }
  return out;
}

// --------------------------------------------------------------- SparseLayer

SparseLayer::SparseLayer(std::string name, std::size_t in_channels, std::size_t out_channels,
                         std::size_t height, std::size_t width, SparseMode mode, Rng& rng)
    : Layer(name),
      in_(in_channels),
      out_(out_channels),
      height_(height),
      width_(width),
      mode_(mode),
      w_magnitude_(name + ".w_magnitude", {out_channels, in_channels, height, width}),
      w_phase_(name + ".w_phase", {out_channels, in_channels, height, width}) {
  std::uniform_real_distribution<double> mag(0.9, 1.1);
  std::uniform_real_distribution<double> ph(-0.1, 0.1);
  for (auto& v : w_magnitude_.value) v = mag(rng);
  for (auto& v : w_phase_.value) v = ph(rng);
}

Feature SparseLayer::forward(const Feature& input, Mode) {
  const auto& x = expect_spectral(input, *this);
  if (x.channels != in_ || x.height != height_ || x.width != width_) {
    throw InvalidArgument(name() + ": expected spectrum " + std::to_string(in_) + "x" +
                          std::to_string(height_) + "x" + std::to_string(width_) + ", got " +
                          std::to_string(x.channels) + "x" + std::to_string(x.height) + "x" +
                          std::to_string(x.width));
  }
  const std::size_t plane = x.plane();
  input_ = x;
  x_re_.resize(x.size());
  x_im_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto r = polar::to_rect(x.magnitude[i], x.phase[i]);
    x_re_[i] = r.re;
    x_im_[i] = r.im;
  }

  SpectralTensor out(x.batch, out_, height_, width_);
  y_re_.assign(out.size(), 0.0);
  y_im_.assign(out.size(), 0.0);

  if (mode_ == SparseMode::polar) {
    std::vector<double> w_re(w_magnitude_.size()), w_im(w_magnitude_.size());
    for (std::size_t i = 0; i < w_re.size(); ++i) {
      const auto r = polar::to_rect(w_magnitude_.value[i], w_phase_.value[i]);
      w_re[i] = r.re;
      w_im[i] = r.im;
    }
    for (std::size_t n = 0; n < x.batch; ++n) {
      for (std::size_t o = 0; o < out_; ++o) {
        double* yr = y_re_.data() + out.index(n, o, 0, 0);
        double* yi = y_im_.data() + out.index(n, o, 0, 0);
        for (std::size_t c = 0; c < in_; ++c) {
          const double* xr = x_re_.data() + x.index(n, c, 0, 0);
          const double* xi = x_im_.data() + x.index(n, c, 0, 0);
          const double* wr = w_re.data() + (o * in_ + c) * plane;
          const double* wi = w_im.data() + (o * in_ + c) * plane;
          for (std::size_t p = 0; p < plane; ++p) {
            yr[p] += xr[p] * wr[p] - xi[p] * wi[p];
            yi[p] += xr[p] * wi[p] + xi[p] * wr[p];
          }
        }
      }
    }
  } else {
    for (std::size_t n = 0; n < x.batch; ++n) {
      for (std::size_t o = 0; o < out_; ++o) {
        double* yr = y_re_.data() + out.index(n, o, 0, 0);
        double* yi = y_im_.data() + out.index(n, o, 0, 0);
        for (std::size_t c = 0; c < in_; ++c) {
          const std::size_t xo = x.index(n, c, 0, 0);
          const std::size_t wo = (o * in_ + c) * plane;
          for (std::size_t p = 0; p < plane; ++p) {
            const double m = x.magnitude[xo + p] * w_magnitude_.value[wo + p];
            const double t = x.phase[xo + p] * w_phase_.value[wo + p];
            yr[p] += m * std::cos(t);
            yi[p] += m * std::sin(t);
          }
        }
      }
    }
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto p = polar::from_rect(y_re_[i], y_im_[i]);
    out.magnitude[i] = p.magnitude;
    out.phase[i] = p.phase;
  }
  has_forward_ = true;
  return out;
}

Feature SparseLayer::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spectral(grad_output, *this);
  if (g.batch != input_.batch || g.channels != out_ || g.height != height_ ||
      g.width != width_) {
    throw InvalidArgument(name() + ": gradient shape mismatch");
  }
  const std::size_t plane = height_ * width_;

  // cotangent of the rectangular output
  std::vector<double> gy_re(g.size()), gy_im(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto r = polar::polar_cotangent_to_rect(y_re_[i], y_im_[i], g.magnitude[i], g.phase[i]);
    gy_re[i] = r.re;
    gy_im[i] = r.im;
  }

  SpectralTensor dx(input_.batch, in_, height_, width_);

  if (mode_ == SparseMode::polar) {
    std::vector<double> w_re(w_magnitude_.size()), w_im(w_magnitude_.size());
    for (std::size_t i = 0; i < w_re.size(); ++i) {
      const auto r = polar::to_rect(w_magnitude_.value[i], w_phase_.value[i]);
      w_re[i] = r.re;
      w_im[i] = r.im;
    }
    std::vector<double> gx_re(input_.size(), 0.0), gx_im(input_.size(), 0.0);
    std::vector<double> gw_re(w_re.size(), 0.0), gw_im(w_re.size(), 0.0);
    for (std::size_t n = 0; n < input_.batch; ++n) {
      for (std::size_t o = 0; o < out_; ++o) {
        const double* gr = gy_re.data() + g.index(n, o, 0, 0);
        const double* gi = gy_im.data() + g.index(n, o, 0, 0);
        for (std::size_t c = 0; c < in_; ++c) {
          const std::size_t xo = input_.index(n, c, 0, 0);
          const std::size_t wo = (o * in_ + c) * plane;
          for (std::size_t p = 0; p < plane; ++p) {
            // g * conj(w) and g * conj(x)
            gx_re[xo + p] += gr[p] * w_re[wo + p] + gi[p] * w_im[wo + p];
            gx_im[xo + p] += gi[p] * w_re[wo + p] - gr[p] * w_im[wo + p];
            gw_re[wo + p] += gr[p] * x_re_[xo + p] + gi[p] * x_im_[xo + p];
            gw_im[wo + p] += gi[p] * x_re_[xo + p] - gr[p] * x_im_[xo + p];
          }
        }
      }
    }
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const auto q = polar::rect_cotangent_to_polar(input_.magnitude[i], input_.phase[i],
                                                    x_re_[i], x_im_[i], gx_re[i], gx_im[i]);
      dx.magnitude[i] = q.magnitude;
      dx.phase[i] = q.phase;
    }
    for (std::size_t i = 0; i < w_re.size(); ++i) {
      const auto q = polar::rect_cotangent_to_polar(w_magnitude_.value[i], w_phase_.value[i],
                                                    gw_re[i], gw_im[i]);
      w_magnitude_.grad[i] += q.magnitude;
      w_phase_.grad[i] += q.phase;
    }
  } else {
    for (std::size_t n = 0; n < input_.batch; ++n) {
      for (std::size_t o = 0; o < out_; ++o) {
        const double* gr = gy_re.data() + g.index(n, o, 0, 0);
        const double* gi = gy_im.data() + g.index(n, o, 0, 0);
        for (std::size_t c = 0; c < in_; ++c) {
          const std::size_t xo = input_.index(n, c, 0, 0);
          const std::size_t wo = (o * in_ + c) * plane;
          for (std::size_t p = 0; p < plane; ++p) {
            const double xm = input_.magnitude[xo + p], xp = input_.phase[xo + p];
            const double wm = w_magnitude_.value[wo + p], wp = w_phase_.value[wo + p];
            const double m = xm * wm;
            const double t = xp * wp;
            const double ct = std::cos(t), st = std::sin(t);
            const double dm = gr[p] * ct + gi[p] * st;
            const double dt = m * (gi[p] * ct - gr[p] * st);
            dx.magnitude[xo + p] += dm * wm;
            dx.phase[xo + p] += dt * wp;
            w_magnitude_.grad[wo + p] += dm * xm;
            w_phase_.grad[wo + p] += dt * xp;
          }
        }
      }
    }
  }
  return dx;
}

FeatureShape SparseLayer::output_shape(const FeatureShape& input) const {
  if (input.domain != Domain::spectral || input.channels != in_ || input.height != height_ ||
      input.width != width_) {
    throw ConfigError(name() + ": expects spectral(" + std::to_string(in_) + "x" +
                      std::to_string(height_) + "x" + std::to_string(width_) + "), got " +
                      to_string(input));
  }
  return {Domain::spectral, out_, height_, width_};
}

// ------------------------------------------------------------------ TwoSReLU

Feature TwoSReLU::forward(const Feature& input, Mode) {
  const auto& x = expect_spectral(input, *this);
  const auto m = region_map(x.height, x.width);
  const std::size_t plane = x.plane();
  x_re_.resize(x.size());
  x_im_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto r = polar::to_rect(x.magnitude[i], x.phase[i]);
    x_re_[i] = r.re;
    x_im_[i] = r.im;
  }
  y_re_.resize(x.size());
  y_im_.resize(x.size());
  for (std::size_t k = 0; k < x.batch * x.channels; ++k) {
    apply_plane(x_re_.data() + k * plane, x_im_.data() + k * plane, y_re_.data() + k * plane,
                y_im_.data() + k * plane, plane, m, cfg_);
  }
  SpectralTensor out(x.batch, x.channels, x.height, x.width);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto p = polar::from_rect(y_re_[i], y_im_[i]);
    out.magnitude[i] = p.magnitude;
    out.phase[i] = p.phase;
  }
  input_ = x;
  has_forward_ = true;
  return out;
}

Feature TwoSReLU::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spectral(grad_output, *this);
  if (!g.same_shape(input_)) throw InvalidArgument(name() + ": gradient shape mismatch");
  const auto m = region_map(g.height, g.width);
  const std::size_t plane = g.plane();
  std::vector<double> gy_re(g.size()), gy_im(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto r = polar::polar_cotangent_to_rect(y_re_[i], y_im_[i], g.magnitude[i], g.phase[i]);
    gy_re[i] = r.re;
    gy_im[i] = r.im;
  }
  std::vector<double> gx_re(g.size()), gx_im(g.size());
  for (std::size_t k = 0; k < g.batch * g.channels; ++k) {
    adjoint_plane(gy_re.data() + k * plane, gy_im.data() + k * plane, gx_re.data() + k * plane,
                  gx_im.data() + k * plane, plane, m, cfg_);
  }
  SpectralTensor dx(g.batch, g.channels, g.height, g.width);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto q = polar::rect_cotangent_to_polar(input_.magnitude[i], input_.phase[i], x_re_[i],
                                                  x_im_[i], gx_re[i], gx_im[i]);
    dx.magnitude[i] = q.magnitude;
    dx.phase[i] = q.phase;
  }
  return dx;
}

FeatureShape TwoSReLU::output_shape(const FeatureShape& input) const {
  if (input.domain != Domain::spectral) throw ConfigError(name() + ": expects a spectral input");
  if (low_frequency_region(input.height, input.width).empty()) {
    throw ConfigError(name() + ": low-frequency region is empty for " + to_string(input));
  }
  return input;
}

// -------------------------------------------------------------- SpectralPool

Feature SpectralPool::forward(const Feature& input, Mode) {
  const auto& x = expect_spectral(input, *this);
  if (out_h_ > x.height || out_w_ > x.width) {
    throw InvalidArgument(name() + ": output " + std::to_string(out_h_) + "x" +
                          std::to_string(out_w_) + " larger than input " +
                          std::to_string(x.height) + "x" + std::to_string(x.width));
  }
  batch_ = x.batch, channels_ = x.channels, in_h_ = x.height, in_w_ = x.width;
  const std::size_t r0 = pool_offset(in_h_, out_h_), c0 = pool_offset(in_w_, out_w_);
  SpectralTensor out(x.batch, x.channels, out_h_, out_w_);
  for (std::size_t k = 0; k < x.batch * x.channels; ++k) {
    for (std::size_t r = 0; r < out_h_; ++r) {
      for (std::size_t c = 0; c < out_w_; ++c) {
        const std::size_t src = k * x.plane() + (r + r0) * in_w_ + (c + c0);
        const std::size_t dst = k * out.plane() + r * out_w_ + c;
        out.magnitude[dst] = x.magnitude[src];
        out.phase[dst] = x.phase[src];
      }
    }
  }
  has_forward_ = true;
  return out;
}

Feature SpectralPool::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spectral(grad_output, *this);
  if (g.batch != batch_ || g.channels != channels_ || g.height != out_h_ || g.width != out_w_) {
    throw InvalidArgument(name() + ": gradient shape mismatch");
  }
  const std::size_t r0 = pool_offset(in_h_, out_h_), c0 = pool_offset(in_w_, out_w_);
  SpectralTensor dx(batch_, channels_, in_h_, in_w_);
  for (std::size_t k = 0; k < batch_ * channels_; ++k) {
    for (std::size_t r = 0; r < out_h_; ++r) {
      for (std::size_t c = 0; c < out_w_; ++c) {
        const std::size_t dst = k * dx.plane() + (r + r0) * in_w_ + (c + c0);
        const std::size_t src = k * g.plane() + r * out_w_ + c;
        dx.magnitude[dst] = g.magnitude[src];
        dx.phase[dst] = g.phase[src];
      }
    }
  }
  return dx;
}

FeatureShape SpectralPool::output_shape(const FeatureShape& input) const {
  if (input.domain != Domain::spectral) throw ConfigError(name() + ": expects a spectral input");
  if (out_h_ > input.height || out_w_ > input.width || out_h_ == 0 || out_w_ == 0) {
    throw ConfigError(name() + ": spectral pool " + std::to_string(out_h_) + "x" +
                      std::to_string(out_w_) + " does not fit input " + to_string(input));
  }
  return {Domain::spectral, input.channels, out_h_, out_w_};
}

// ----------------------------------------------------------------- DcRemoval

Feature DcRemoval::forward(const Feature& input, Mode) {
  SpectralTensor out = expect_spectral(input, *this);
  const std::size_t dc = (out.height / 2) * out.width + out.width / 2;
  for (std::size_t k = 0; k < out.batch * out.channels; ++k) {
    out.magnitude[k * out.plane() + dc] = 0.0;
    out.phase[k * out.plane() + dc] = 0.0;
  }
  has_forward_ = true;
  return out;
}

Feature DcRemoval::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  SpectralTensor g = expect_spectral(grad_output, *this);
  const std::size_t dc = (g.height / 2) * g.width + g.width / 2;
  for (std::size_t k = 0; k < g.batch * g.channels; ++k) {
    g.magnitude[k * g.plane() + dc] = 0.0;
    g.phase[k * g.plane() + dc] = 0.0;
  }
  return g;
}

FeatureShape DcRemoval::output_shape(const FeatureShape& input) const {
  if (input.domain != Domain::spectral) throw ConfigError(name() + ": expects a spectral input");
  return input;
}

// --------------------------------------------------------- SpectralBatchNorm

SpectralBatchNorm::SpectralBatchNorm(std::string name, std::size_t channels, double epsilon,
                                     double momentum)
    : Layer(name),
      magnitude_(name + ".magnitude", channels, epsilon, momentum),
      phase_(name + ".phase", channels, epsilon, momentum) {}

Feature SpectralBatchNorm::forward(const Feature& input, Mode mode) {
  const auto& x = expect_spectral(input, *this);
  if (x.channels != magnitude_.channels()) {
    throw InvalidArgument(name() + ": expected " + std::to_string(magnitude_.channels()) +
                          " channels, got " + std::to_string(x.channels));
  }
  SpectralTensor out(x.batch, x.channels, x.height, x.width);
  out.magnitude = magnitude_.forward(x.magnitude, x.batch, x.plane(), mode);
  out.phase = phase_.forward(x.phase, x.batch, x.plane(), mode);
  clamped_.assign(out.size(), false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.magnitude[i] < 0.0) {
      out.magnitude[i] = 0.0;
      clamped_[i] = true;
    }
  }
  shape_ = SpectralTensor();
  shape_.batch = x.batch, shape_.channels = x.channels, shape_.height = x.height,
  shape_.width = x.width;
  has_forward_ = true;
  return out;
}

Feature SpectralBatchNorm::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spectral(grad_output, *this);
  if (!g.same_shape(shape_)) throw InvalidArgument(name() + ": gradient shape mismatch");
  std::vector<double> gm = g.magnitude;
  for (std::size_t i = 0; i < gm.size(); ++i) {
    if (clamped_[i]) gm[i] = 0.0;
  }
  SpectralTensor dx(g.batch, g.channels, g.height, g.width);
  dx.magnitude = magnitude_.backward(gm);
  dx.phase = phase_.backward(g.phase);
  return dx;
}

FeatureShape SpectralBatchNorm::output_shape(const FeatureShape& input) const {
  if (input.domain != Domain::spectral || input.channels != magnitude_.channels()) {
    throw ConfigError(name() + ": expects spectral input with " +
                      std::to_string(magnitude_.channels()) + " channels, got " +
                      to_string(input));
  }
  return input;
}

std::vector<Parameter*> SpectralBatchNorm::state() {
  return {&magnitude_.running_mean(), &magnitude_.running_var(), &phase_.running_mean(),
          &phase_.running_var()};
}

}  // namespace fdnet
