#include "fdnet/nn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "fdnet/error.hpp"

namespace fdnet {

namespace {
using RMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RMap = Eigen::Map<RMatrix>;
using CRMap = Eigen::Map<const RMatrix>;
}  // namespace

void init_uniform_fan_in(Parameter& p, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : p.value) v = dist(rng);
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff) / denom;
}

// ------------------------------------------------------------- BatchNormCore

BatchNormCore::BatchNormCore(const std::string& name, std::size_t channels, double epsilon,
                             double momentum)
    : channels_(channels),
      epsilon_(epsilon),
      momentum_(momentum),
      running_mean_(name + ".running_mean", {channels}),
      running_var_(name + ".running_var", {channels}) {
  std::fill(running_var_.value.begin(), running_var_.value.end(), 1.0);
}

std::vector<double> BatchNormCore::forward(std::span<const double> x, std::size_t batch,
                                           std::size_t plane, Mode mode) {
  if (x.size() != batch * channels_ * plane) {
    throw InvalidArgument("batchnorm: buffer size does not match batch x channels x plane");
  }
  if (mode == Mode::train && batch < 2) {
    throw InvalidArgument("batchnorm: training mode needs a batch of at least 2, got " +
                          std::to_string(batch));
  }
  batch_ = batch;
  plane_ = plane;
  mode_ = mode;
  normalized_.assign(x.size(), 0.0);
  inv_std_.assign(channels_, 0.0);

  const double m = static_cast<double>(batch * plane);
  for (std::size_t c = 0; c < channels_; ++c) {
    double mean, var;
    if (mode == Mode::train) {
      double sum = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* p = x.data() + (n * channels_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      mean = sum / m;
      double ss = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* p = x.data() + (n * channels_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) ss += (p[i] - mean) * (p[i] - mean);
      }
      var = ss / m;
      running_mean_.value[c] = momentum_ * running_mean_.value[c] + (1.0 - momentum_) * mean;
      running_var_.value[c] = momentum_ * running_var_.value[c] + (1.0 - momentum_) * var;
    } else {
      mean = running_mean_.value[c];
      var = running_var_.value[c];
    }
    const double inv = 1.0 / std::sqrt(var + epsilon_);
    inv_std_[c] = inv;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) normalized_[off + i] = (x[off + i] - mean) * inv;
    }
  }
  has_forward_ = true;
  return normalized_;
}

std::vector<double> BatchNormCore::backward(std::span<const double> g) const {
  if (!has_forward_) throw StateError("batchnorm: backward called before forward");
  if (g.size() != normalized_.size()) throw InvalidArgument("batchnorm: gradient shape mismatch");
  std::vector<double> out(g.size());
  const double m = static_cast<double>(batch_ * plane_);
  for (std::size_t c = 0; c < channels_; ++c) {
    const double inv = inv_std_[c];
    if (mode_ == Mode::eval) {
      for (std::size_t n = 0; n < batch_; ++n) {
        const std::size_t off = (n * channels_ + c) * plane_;
        for (std::size_t i = 0; i < plane_; ++i) out[off + i] = g[off + i] * inv;
      }
      continue;
    }
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t n = 0; n < batch_; ++n) {
      const std::size_t off = (n * channels_ + c) * plane_;
      for (std::size_t i = 0; i < plane_; ++i) {
        sum_g += g[off + i];
        sum_gx += g[off + i] * normalized_[off + i];
      }
    }
    const double mean_g = sum_g / m;
    const double mean_gx = sum_gx / m;
    for (std::size_t n = 0; n < batch_; ++n) {
      const std::size_t off = (n * channels_ + c) * plane_;
      for (std::size_t i = 0; i < plane_; ++i) {
        out[off + i] = inv * (g[off + i] - mean_g - normalized_[off + i] * mean_gx);
      }
    }
  }
  return out;
}

// ----------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::string name, std::size_t channels, double epsilon, double momentum)
    : Layer(name), core_(name, channels, epsilon, momentum) {}

Feature BatchNorm::forward(const Feature& input, Mode mode) {
  const auto& x = expect_spatial(input, *this);
  if (x.channels != core_.channels()) {
    throw InvalidArgument(name() + ": expected " + std::to_string(core_.channels()) +
                          " channels, got " + std::to_string(x.channels));
  }
  Tensor4 out(0, 0, 0, 0);
  out.batch = x.batch, out.channels = x.channels, out.height = x.height, out.width = x.width;
  out.values = core_.forward(x.values, x.batch, x.plane(), mode);
  shape_.batch = x.batch, shape_.channels = x.channels, shape_.height = x.height,
  shape_.width = x.width;
  has_forward_ = true;
  return out;
}

Feature BatchNorm::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spatial(grad_output, *this);
  if (!g.same_shape(shape_)) throw InvalidArgument(name() + ": gradient shape mismatch");
  Tensor4 out = g;
  out.values = core_.backward(g.values);
  return out;
}

FeatureShape BatchNorm::output_shape(const FeatureShape& input) const {
  if (input.domain != Domain::spatial || input.channels != core_.channels()) {
    throw ConfigError(name() + ": expects spatial input with " +
                      std::to_string(core_.channels()) + " channels, got " + to_string(input));
  }
  return input;
}

std::vector<Parameter*> BatchNorm::state() {
  return {&core_.running_mean(), &core_.running_var()};
}

// ------------------------------------------------------------ FullyConnected

FullyConnected::FullyConnected(std::string name, std::size_t in_features,
                               std::size_t out_features, Rng& rng)
    : Layer(name),
      in_(in_features),
      out_(out_features),
      weight_(name + ".weight", {out_features, in_features}),
      bias_(name + ".bias", {out_features}) {
  init_uniform_fan_in(weight_, in_features, rng);
}

Feature FullyConnected::forward(const Feature& input, Mode) {
  const auto& x = expect_spatial(input, *this);
  if (x.sample_size() != in_) {
    throw InvalidArgument(name() + ": expected " + std::to_string(in_) +
                          " input features, got " + std::to_string(x.sample_size()));
  }
  input_ = x;
  Tensor4 out(x.batch, out_, 1, 1);
  CRMap X(x.values.data(), x.batch, in_);
  CRMap W(weight_.value.data(), out_, in_);
  RMap Y(out.values.data(), x.batch, out_);
  Y.noalias() = X * W.transpose();
  for (std::size_t n = 0; n < x.batch; ++n) {
    for (std::size_t o = 0; o < out_; ++o) Y(n, o) += bias_.value[o];
  }
  has_forward_ = true;
  return out;
}

Feature FullyConnected::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spatial(grad_output, *this);
  if (g.batch != input_.batch || g.sample_size() != out_) {
    throw InvalidArgument(name() + ": gradient shape mismatch");
  }
  CRMap G(g.values.data(), g.batch, out_);
  CRMap X(input_.values.data(), input_.batch, in_);
  CRMap W(weight_.value.data(), out_, in_);
  RMap dW(weight_.grad.data(), out_, in_);
  dW.noalias() += G.transpose() * X;
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += G(n, o);
  }
  Tensor4 dx = input_;
  RMap DX(dx.values.data(), input_.batch, in_);
  DX.noalias() = G * W;
  return dx;
}

FeatureShape FullyConnected::output_shape(const FeatureShape& input) const {
  const std::size_t features = input.channels * input.height * input.width;
  if (input.domain != Domain::spatial || features != in_) {
    throw ConfigError(name() + ": expects " + std::to_string(in_) + " spatial features, got " +
                      to_string(input));
  }
  return {Domain::spatial, out_, 1, 1};
}

// ------------------------------------------------------------------- losses

LossAndGrad softmax_cross_entropy(const Tensor4& logits, std::span<const int> labels) {
  const std::size_t batch = logits.batch;
  const std::size_t classes = logits.sample_size();
  if (labels.size() != batch) {
    throw InvalidArgument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                          " labels for a batch of " + std::to_string(batch));
  }
  for (double v : logits.values) {
    if (!std::isfinite(v)) throw InvalidArgument("softmax_cross_entropy: non-finite logit");
  }
  LossAndGrad r;
  r.grad = logits;
  double total = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    const int y = labels[n];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw InvalidArgument("softmax_cross_entropy: label " + std::to_string(y) +
                            " outside [0, " + std::to_string(classes) + ")");
    }
    const double* z = logits.values.data() + n * classes;
    double* g = r.grad.values.data() + n * classes;
    const double zmax = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(z[c] - zmax);
    const double lse = zmax + std::log(sum);
    total += lse - z[y];
    for (std::size_t c = 0; c < classes; ++c) {
      g[c] = (std::exp(z[c] - lse) - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) /
             static_cast<double>(batch);
    }
  }
  r.loss = total / static_cast<double>(batch);
  return r;
}

// ---------------------------------------------------------------------- SGD

void sgd_step(std::span<Parameter* const> params, const SGDConfig& cfg) {
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      p->velocity[i] = cfg.momentum * p->velocity[i] + p->grad[i];
      p->value[i] -= cfg.learning_rate * p->velocity[i];
    }
    p->zero_grad();
  }
}

// --------------------------------------------------------------- grad check

namespace {

// Views over every scalar of a feature, in a fixed order.
std::vector<double*> scalars(Feature& f) {
  std::vector<double*> out;
  if (auto* t = std::get_if<Tensor4>(&f)) {
    for (auto& v : t->values) out.push_back(&v);
  } else {
    auto& s = std::get<SpectralTensor>(f);
    for (auto& v : s.magnitude) out.push_back(&v);
    for (auto& v : s.phase) out.push_back(&v);
  }
  return out;
}

double dot(const Feature& a, const Feature& b) {
  double s = 0.0;
  if (const auto* ta = std::get_if<Tensor4>(&a)) {
    const auto& tb = std::get<Tensor4>(b);
    for (std::size_t i = 0; i < ta->size(); ++i) s += ta->values[i] * tb.values[i];
    return s;
  }
  const auto& sa = std::get<SpectralTensor>(a);
  const auto& sb = std::get<SpectralTensor>(b);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    s += sa.magnitude[i] * sb.magnitude[i] + sa.phase[i] * sb.phase[i];
  }
  return s;
}

}  // namespace

GradCheckResult grad_check(Layer& layer, const Feature& input, double step, Mode mode,
                           std::uint64_t probe_seed) {
  auto params = layer.parameters();
  for (auto* p : params) p->zero_grad();

  Feature probe = layer.forward(input, mode);
  Rng rng(probe_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double* v : scalars(probe)) *v = normal(rng);

  // analytic
  Feature analytic_input = layer.backward(probe);
  std::vector<std::vector<double>> analytic_params;
  for (auto* p : params) analytic_params.push_back(p->grad);
  for (auto* p : params) p->zero_grad();

  const auto loss = [&](const Feature& x) { return dot(layer.forward(x, mode), probe); };

  GradCheckResult result;
  {
    Feature x = input;
    auto xs = scalars(x);
    auto as = scalars(analytic_input);
    std::vector<double> numeric(xs.size()), analytic(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double orig = *xs[i];
      *xs[i] = orig + step;
      const double lp = loss(x);
      *xs[i] = orig - step;
      const double lm = loss(x);
      *xs[i] = orig;
      numeric[i] = (lp - lm) / (2.0 * step);
      analytic[i] = *as[i];
    }
    result.input_error = relative_error(analytic, numeric);
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    std::vector<double> numeric(p->size());
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + step;
      const double lp = loss(input);
      p->value[i] = orig - step;
      const double lm = loss(input);
      p->value[i] = orig;
      numeric[i] = (lp - lm) / (2.0 * step);
    }
    result.parameter_error =
        std::max(result.parameter_error, relative_error(analytic_params[k], numeric));
  }
  for (auto* p : params) p->zero_grad();
  return result;
}

}  // namespace fdnet
