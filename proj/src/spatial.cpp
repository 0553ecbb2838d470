#include "fdnet/spatial.hpp"

#include <Eigen/Dense>

#include "fdnet/error.hpp"

namespace fdnet {

namespace {
using RMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RMap = Eigen::Map<RMatrix>;
using CRMap = Eigen::Map<const RMatrix>;

Tensor4 shape_only(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  Tensor4 t;
  t.batch = n, t.channels = c, t.height = h, t.width = w;
  return t;
}
}  // namespace

// -------------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
               std::size_t k, Rng& rng)
    : Layer(name),
      in_(in_channels),
      out_(out_channels),
      k_(k),
      kernel_(name + ".kernel", {out_channels, in_channels, k, k}),
      bias_(name + ".bias", {out_channels}) {
  if (k % 2 == 0) throw InvalidArgument(name + ": kernel size must be odd");
  init_uniform_fan_in(kernel_, in_channels * k * k, rng);
}

Feature Conv2d::forward(const Feature& input, Mode) {
  const auto& x = expect_spatial(input, *this);
  if (x.channels != in_) {
    throw InvalidArgument(name() + ": expected " + std::to_string(in_) + " channels, got " +
                          std::to_string(x.channels));
  }
  batch_ = x.batch, height_ = x.height, width_ = x.width;
  const std::size_t hw = x.plane();
  const std::size_t rows = in_ * k_ * k_;
  const long half = static_cast<long>(k_ / 2);
  columns_.assign(x.batch * rows * hw, 0.0);

  for (std::size_t n = 0; n < x.batch; ++n) {
    double* cols = columns_.data() + n * rows * hw;
    for (std::size_t c = 0; c < in_; ++c) {
      const double* src = x.values.data() + x.index(n, c, 0, 0);
      for (std::size_t ky = 0; ky < k_; ++ky) {
        for (std::size_t kx = 0; kx < k_; ++kx) {
          double* row = cols + ((c * k_ + ky) * k_ + kx) * hw;
          const long dy = static_cast<long>(ky) - half;
          const long dx = static_cast<long>(kx) - half;
          for (std::size_t h = 0; h < x.height; ++h) {
            const long sy = static_cast<long>(h) + dy;
            if (sy < 0 || sy >= static_cast<long>(x.height)) continue;
            for (std::size_t w = 0; w < x.width; ++w) {
              const long sx = static_cast<long>(w) + dx;
              if (sx < 0 || sx >= static_cast<long>(x.width)) continue;
              row[h * x.width + w] = src[static_cast<std::size_t>(sy) * x.width +
                                         static_cast<std::size_t>(sx)];
            }
          }
        }
      }
    }
  }

  Tensor4 out(x.batch, out_, x.height, x.width);
  CRMap W(kernel_.value.data(), out_, rows);
  for (std::size_t n = 0; n < x.batch; ++n) {
    CRMap cols(columns_.data() + n * rows * hw, rows, hw);
    RMap Y(out.values.data() + out.index(n, 0, 0, 0), out_, hw);
    Y.noalias() = W * cols;
    for (std::size_t o = 0; o < out_; ++o) Y.row(o).array() += bias_.value[o];
  }
  has_forward_ = true;
  return out;
}

Feature Conv2d::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spatial(grad_output, *this);
  if (!g.same_shape(shape_only(batch_, out_, height_, width_))) {
    throw InvalidArgument(name() + ": gradient shape mismatch");
  }
  const std::size_t hw = height_ * width_;
  const std::size_t rows = in_ * k_ * k_;
  const long half = static_cast<long>(k_ / 2);

  CRMap W(kernel_.value.data(), out_, rows);
  RMap dW(kernel_.grad.data(), out_, rows);
  Tensor4 dx(batch_, in_, height_, width_);
  RMatrix dcols(rows, hw);
  for (std::size_t n = 0; n < batch_; ++n) {
    CRMap G(g.values.data() + g.index(n, 0, 0, 0), out_, hw);
    CRMap cols(columns_.data() + n * rows * hw, rows, hw);
    dW.noalias() += G * cols.transpose();
    for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += G.row(o).sum();
    dcols.noalias() = W.transpose() * G;

    for (std::size_t c = 0; c < in_; ++c) {
      double* dst = dx.values.data() + dx.index(n, c, 0, 0);
      for (std::size_t ky = 0; ky < k_; ++ky) {
        for (std::size_t kx = 0; kx < k_; ++kx) {
          const double* row = dcols.data() + ((c * k_ + ky) * k_ + kx) * hw;
          const long dy = static_cast<long>(ky) - half;
          const long ddx = static_cast<long>(kx) - half;
          for (std::size_t h = 0; h < height_; ++h) {
            const long sy = static_cast<long>(h) + dy;
            if (sy < 0 || sy >= static_cast<long>(height_)) continue;
            for (std::size_t w = 0; w < width_; ++w) {
              const long sx = static_cast<long>(w) + ddx;
              if (sx < 0 || sx >= static_cast<long>(width_)) continue;
              dst[static_cast<std::size_t>(sy) * width_ + static_cast<std::size_t>(sx)] +=
                  row[h * width_ + w];
            }
          }
        }
      }
    }
  }
  return dx;
}

FeatureShape Conv2d::output_shape(const FeatureShape& input) const {
  if (input.domain != Domain::spatial || input.channels != in_) {
    throw ConfigError(name() + ": expects spatial input with " + std::to_string(in_) +
                      " channels, got " + to_string(input));
  }
  return {Domain::spatial, out_, input.height, input.width};
}

// ---------------------------------------------------------------------- Relu

Feature Relu::forward(const Feature& input, Mode) {
  const auto& x = expect_spatial(input, *this);
  Tensor4 out = x;
  active_.assign(x.size(), false);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.values[i] > 0.0) {
      active_[i] = true;
    } else {
      out.values[i] = 0.0;
    }
  }
  shape_ = shape_only(x.batch, x.channels, x.height, x.width);
  has_forward_ = true;
  return out;
}

Feature Relu::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spatial(grad_output, *this);
  if (!g.same_shape(shape_)) throw InvalidArgument(name() + ": gradient shape mismatch");
  Tensor4 out = g;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!active_[i]) out.values[i] = 0.0;
  }
  return out;
}

FeatureShape Relu::output_shape(const FeatureShape& input) const {
  if (input.domain != Domain::spatial) throw ConfigError(name() + ": expects a spatial input");
  return input;
}

// ------------------------------------------------------------------ MaxPool2

Feature MaxPool2::forward(const Feature& input, Mode) {
  const auto& x = expect_spatial(input, *this);
  if (x.height % 2 != 0 || x.width % 2 != 0) {
    throw InvalidArgument(name() + ": needs even spatial dims, got " + std::to_string(x.height) +
                          "x" + std::to_string(x.width));
  }
  const std::size_t oh = x.height / 2, ow = x.width / 2;
  Tensor4 out(x.batch, x.channels, oh, ow);
  argmax_.assign(out.size(), 0);
  for (std::size_t n = 0; n < x.batch; ++n) {
    for (std::size_t c = 0; c < x.channels; ++c) {
      for (std::size_t h = 0; h < oh; ++h) {
        for (std::size_t w = 0; w < ow; ++w) {
          std::size_t best = x.index(n, c, 2 * h, 2 * w);
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t i = x.index(n, c, 2 * h + dy, 2 * w + dx);
              if (x.values[i] > x.values[best]) best = i;
            }
          }
          const std::size_t o = out.index(n, c, h, w);
          out.values[o] = x.values[best];
          argmax_[o] = best;
        }
      }
    }
  }
  input_shape_ = shape_only(x.batch, x.channels, x.height, x.width);
  has_forward_ = true;
  return out;
}

Feature MaxPool2::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spatial(grad_output, *this);
  if (g.size() != argmax_.size()) throw InvalidArgument(name() + ": gradient shape mismatch");
  Tensor4 dx(input_shape_.batch, input_shape_.channels, input_shape_.height, input_shape_.width);
  for (std::size_t o = 0; o < g.size(); ++o) dx.values[argmax_[o]] += g.values[o];
  return dx;
}

FeatureShape MaxPool2::output_shape(const FeatureShape& input) const {
  if (input.domain != Domain::spatial) throw ConfigError(name() + ": expects a spatial input");
  if (input.height % 2 != 0 || input.width % 2 != 0) {
    throw ConfigError(name() + ": max pooling needs even spatial dims, got " + to_string(input));
  }
  return {Domain::spatial, input.channels, input.height / 2, input.width / 2};
}

}  // namespace fdnet
