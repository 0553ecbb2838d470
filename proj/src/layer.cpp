#include "fdnet/layer.hpp"

#include <algorithm>
#include <cmath>

#include "fdnet/error.hpp"

namespace fdnet {

Parameter::Parameter(std::string n, std::vector<std::size_t> dims)
    : name(std::move(n)), shape(std::move(dims)) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  value.assign(count, 0.0);
  grad.assign(count, 0.0);
  velocity.assign(count, 0.0);
}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

std::string to_string(const FeatureShape& s) {
  return std::string(s.domain == Domain::spatial ? "spatial" : "spectral") + "(" +
         std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width) + ")";
}

std::size_t batch_of(const Feature& f) {
  return std::visit([](const auto& t) { return t.batch; }, f);
}

bool all_finite(const Feature& f) {
  const auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (const auto* t = std::get_if<Tensor4>(&f)) return finite(t->values);
  const auto& s = std::get<SpectralTensor>(f);
  return finite(s.magnitude) && finite(s.phase);
}

const Tensor4& expect_spatial(const Feature& f, const Layer& who) {
  const auto* t = std::get_if<Tensor4>(&f);
  if (!t) throw InvalidArgument(who.name() + ": expected a spatial tensor, got a spectrum");
  return *t;
}

const SpectralTensor& expect_spectral(const Feature& f, const Layer& who) {
  const auto* t = std::get_if<SpectralTensor>(&f);
  if (!t) throw InvalidArgument(who.name() + ": expected a spectrum, got a spatial tensor");
  return *t;
}

// ---------------------------------------------------------------- Sequential

Feature Sequential::forward(const Feature& input, Mode mode) {
  Feature x = input;
  for (auto& layer : layers_) x = layer->forward(x, mode);
  return x;
}

Feature Sequential::backward(const Feature& grad_output) {
  Feature g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

FeatureShape Sequential::output_shape(const FeatureShape& input) const {
  FeatureShape s = input;
  for (const auto& layer : layers_) s = layer->output_shape(s);
  return s;
}

std::vector<Parameter*> Sequential::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    auto p = layer->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Parameter*> Sequential::state() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    auto p = layer->state();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::string Sequential::first_non_finite_layer(const Feature& input, Mode mode) {
  Feature x = input;
  for (auto& layer : layers_) {
    if (auto* inner = dynamic_cast<Sequential*>(layer.get())) {
      auto name = inner->first_non_finite_layer(x, mode);
      if (!name.empty()) return name;
    }
    x = layer->forward(x, mode);
    if (!all_finite(x)) return layer->name();
  }
  return {};
}

// ------------------------------------------------------------------ Branches

Feature Branches::forward(const Feature& input, Mode mode) {
  const auto& x = expect_spectral(input, *this);
  const std::size_t nb = branches_.size();
  if (nb == 0 || x.channels % nb != 0) {
    throw InvalidArgument(name() + ": " + std::to_string(x.channels) +
                          " input channels cannot be split into " + std::to_string(nb) +
                          " branches");
  }
  const std::size_t per = x.channels / nb;
  const std::size_t plane = x.plane();

  std::vector<SpectralTensor> outs;
  outs.reserve(nb);
  out_channels_.clear();
  for (std::size_t b = 0; b < nb; ++b) {
    SpectralTensor part(x.batch, per, x.height, x.width);
    for (std::size_t n = 0; n < x.batch; ++n) {
      const std::size_t src = x.index(n, b * per, 0, 0);
      const std::size_t dst = part.index(n, 0, 0, 0);
      std::copy_n(x.magnitude.begin() + src, per * plane, part.magnitude.begin() + dst);
      std::copy_n(x.phase.begin() + src, per * plane, part.phase.begin() + dst);
    }
    Feature y = branches_[b]->forward(part, mode);
    auto& ys = std::get<SpectralTensor>(y);
    out_channels_.push_back(ys.channels);
    outs.push_back(std::move(ys));
  }

  std::size_t total = 0;
  for (auto c : out_channels_) total += c;
  const auto& first = outs.front();
  SpectralTensor out(x.batch, total, first.height, first.width);
  const std::size_t oplane = first.plane();
  for (std::size_t n = 0; n < x.batch; ++n) {
    std::size_t c0 = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& o = outs[b];
      if (o.height != first.height || o.width != first.width) {
        throw InvalidArgument(name() + ": branch outputs differ in spatial shape");
      }
      const std::size_t src = o.index(n, 0, 0, 0);
      const std::size_t dst = out.index(n, c0, 0, 0);
      std::copy_n(o.magnitude.begin() + src, o.channels * oplane, out.magnitude.begin() + dst);
      std::copy_n(o.phase.begin() + src, o.channels * oplane, out.phase.begin() + dst);
      c0 += o.channels;
    }
  }
  has_forward_ = true;
  return out;
}

Feature Branches::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spectral(grad_output, *this);
  const std::size_t nb = branches_.size();
  const std::size_t oplane = g.plane();

  std::vector<SpectralTensor> gins;
  std::size_t c0 = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t oc = out_channels_[b];
    SpectralTensor part(g.batch, oc, g.height, g.width);
    for (std::size_t n = 0; n < g.batch; ++n) {
      const std::size_t src = g.index(n, c0, 0, 0);
      const std::size_t dst = part.index(n, 0, 0, 0);
      std::copy_n(g.magnitude.begin() + src, oc * oplane, part.magnitude.begin() + dst);
      std::copy_n(g.phase.begin() + src, oc * oplane, part.phase.begin() + dst);
    }
    c0 += oc;
    gins.push_back(std::get<SpectralTensor>(branches_[b]->backward(part)));
  }

  const auto& f = gins.front();
  const std::size_t per = f.channels;
  SpectralTensor out(g.batch, per * nb, f.height, f.width);
  const std::size_t plane = f.plane();
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t src = gins[b].index(n, 0, 0, 0);
      const std::size_t dst = out.index(n, b * per, 0, 0);
      std::copy_n(gins[b].magnitude.begin() + src, per * plane, out.magnitude.begin() + dst);
      std::copy_n(gins[b].phase.begin() + src, per * plane, out.phase.begin() + dst);
    }
  }
  return out;
}

FeatureShape Branches::output_shape(const FeatureShape& input) const {
  if (input.domain != Domain::spectral) throw ConfigError(name() + ": expects a spectral input");
  const std::size_t nb = branches_.size();
  if (nb == 0 || input.channels % nb != 0) {
    throw ConfigError(name() + ": " + std::to_string(input.channels) +
                      " input channels cannot be split into " + std::to_string(nb) + " branches");
  }
  FeatureShape part = input;
  part.channels = input.channels / nb;
  FeatureShape out{};
  std::size_t total = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    const FeatureShape s = branches_[b]->output_shape(part);
    if (b > 0 && (s.height != out.height || s.width != out.width || s.domain != out.domain)) {
      throw ConfigError(name() + ": branch " + std::to_string(b) + " output " + to_string(s) +
                        " does not match branch 0 output " + to_string(out));
    }
    out = s;
    total += s.channels;
  }
  out.channels = total;
  return out;
}

std::vector<Parameter*> Branches::parameters() {
  std::vector<Parameter*> out;
  for (auto& b : branches_) {
    auto p = b->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Parameter*> Branches::state() {
  std::vector<Parameter*> out;
  for (auto& b : branches_) {
    auto p = b->state();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

// ------------------------------------------------------------------- Flatten

Feature Flatten::forward(const Feature& input, Mode) {
  has_forward_ = true;
  if (const auto* t = std::get_if<Tensor4>(&input)) {
    domain_ = Domain::spatial;
    batch_ = t->batch, channels_ = t->channels, height_ = t->height, width_ = t->width;
    Tensor4 out = *t;
    out.channels = t->sample_size();
    out.height = out.width = 1;
    return out;
  }
  const auto& s = std::get<SpectralTensor>(input);
  domain_ = Domain::spectral;
  batch_ = s.batch, channels_ = s.channels, height_ = s.height, width_ = s.width;
  const std::size_t per = s.channels * s.plane();
  Tensor4 out(s.batch, 2 * per, 1, 1);
  for (std::size_t n = 0; n < s.batch; ++n) {
    std::copy_n(s.magnitude.begin() + n * per, per, out.values.begin() + n * 2 * per);
    std::copy_n(s.phase.begin() + n * per, per, out.values.begin() + n * 2 * per + per);
  }
  return out;
}

Feature Flatten::backward(const Feature& grad_output) {
  if (!has_forward_) throw StateError(name() + ": backward called before forward");
  const auto& g = expect_spatial(grad_output, *this);
  if (domain_ == Domain::spatial) {
    Tensor4 out = g;
    out.channels = channels_, out.height = height_, out.width = width_;
    return out;
  }
  SpectralTensor out(batch_, channels_, height_, width_);
  const std::size_t per = channels_ * height_ * width_;
  for (std::size_t n = 0; n < batch_; ++n) {
    std::copy_n(g.values.begin() + n * 2 * per, per, out.magnitude.begin() + n * per);
    std::copy_n(g.values.begin() + n * 2 * per + per, per, out.phase.begin() + n * per);
  }
  return out;
}

FeatureShape Flatten::output_shape(const FeatureShape& input) const {
  const std::size_t per = input.channels * input.height * input.width;
  return {Domain::spatial, input.domain == Domain::spectral ? 2 * per : per, 1, 1};
}

}  // namespace fdnet
