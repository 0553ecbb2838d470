#include "fdnet/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "fdnet/error.hpp"
#include "fdnet/spatial.hpp"
#include "fdnet/spectral.hpp"

namespace fdnet {

namespace {

// Upper bound on cached input spectra, in bytes.
constexpr std::size_t kSpectrumCacheLimit = std::size_t{1536} << 20;

void add_spectral_block(Sequential& seq, const std::string& prefix, const NetworkConfig& cfg,
                        const BlockConfig& b, std::size_t in_channels, std::size_t h,
                        std::size_t w, Rng& rng) {
  seq.add(std::make_unique<SparseLayer>(prefix + ".sparse", in_channels, b.channels, h, w,
                                        cfg.spectral.sparse_mode, rng));
  if (cfg.spectral.dc_removal) seq.add(std::make_unique<DcRemoval>(prefix + ".dc"));
  seq.add(std::make_unique<SpectralBatchNorm>(prefix + ".bn", b.channels));
  if (cfg.spectral.use_2srelu) {
    seq.add(std::make_unique<TwoSReLU>(prefix + ".2srelu", cfg.spectral.tsrelu));
  }
  if (b.pool_height > 0) {
    seq.add(std::make_unique<SpectralPool>(prefix + ".pool", b.pool_height, b.pool_width));
  }
}

}  // namespace

FeatureShape input_shape(const NetworkConfig& cfg) {
  const std::size_t side = cfg.dataset == DatasetKind::mnist ? 28 : cfg.att_size;
  if (cfg.variant == Variant::spatial) return {Domain::spatial, 1, side, side};
  return {Domain::spectral, cfg.spectral.pyramidal ? std::size_t{5} : std::size_t{1}, side, side};
}

std::size_t class_count(const NetworkConfig& cfg) {
  return cfg.dataset == DatasetKind::mnist ? 10 : 40;
}

std::unique_ptr<Sequential> build_network(const NetworkConfig& cfg, Rng& rng) {
  auto net = std::make_unique<Sequential>("net");
  FeatureShape shape = input_shape(cfg);
  const auto track = [&](Layer& layer) { shape = layer.output_shape(shape); };

  for (std::size_t i = 0; i < cfg.blocks.size(); ++i) {
    const BlockConfig& b = cfg.blocks[i];
    const std::string prefix = "block" + std::to_string(i + 1);
    if (cfg.variant == Variant::spatial) {
      for (std::size_t j = 0; j < b.convs; ++j) {
        const std::string p = prefix + ".conv" + std::to_string(j + 1);
        LayerPtr layers[] = {
            std::make_unique<Conv2d>(p, shape.channels, b.channels, b.kernel, rng),
            std::make_unique<BatchNorm>(prefix + ".bn" + std::to_string(j + 1), b.channels),
            std::make_unique<Relu>(prefix + ".relu" + std::to_string(j + 1))};
        for (auto& l : layers) {
          try {
            track(*l);
          } catch (const ConfigError& e) {
            throw ConfigError(b.name + ": " + e.what());
          }
          net->add(std::move(l));
        }
      }
      if (b.max_pool) {
        auto pool = std::make_unique<MaxPool2>(prefix + ".pool");
        try {
          track(*pool);
        } catch (const ConfigError& e) {
          throw ConfigError(b.name + ": " + e.what());
        }
        net->add(std::move(pool));
      }
      continue;
    }

    if (shape.domain != Domain::spectral) throw ConfigError(b.name + ": expects a spectrum");
    LayerPtr block;
    if (i == 0 && shape.channels > 1) {
      auto branches = std::make_unique<Branches>(prefix);
      for (std::size_t k = 0; k < shape.channels; ++k) {
        const std::string bp = prefix + ".branch" + std::to_string(k);
        auto seq = std::make_unique<Sequential>(bp);
        add_spectral_block(*seq, bp, cfg, b, 1, shape.height, shape.width, rng);
        branches->add(std::move(seq));
      }
      block = std::move(branches);
    } else {
      auto seq = std::make_unique<Sequential>(prefix);
      add_spectral_block(*seq, prefix, cfg, b, shape.channels, shape.height, shape.width, rng);
      block = std::move(seq);
    }
    try {
      track(*block);
    } catch (const ConfigError& e) {
      throw ConfigError(b.name + ": " + e.what());
    }
    net->add(std::move(block));
  }

  net->add(std::make_unique<Flatten>("head.flatten"));
  track(*net->layers().back());
  std::size_t width = shape.channels;
  std::size_t k = 1;
  for (std::size_t hidden : cfg.fc_hidden) {
    net->add(std::make_unique<FullyConnected>("head.fc" + std::to_string(k), width, hidden, rng));
    net->add(std::make_unique<Relu>("head.relu" + std::to_string(k)));
    width = hidden;
    ++k;
  }
  net->add(std::make_unique<FullyConnected>("head.fc" + std::to_string(k), width,
                                            class_count(cfg), rng));
  return net;
}

std::size_t first_layer_weight_count(Sequential& net) {
  for (const auto& layer : net.layers()) {
    if (auto* c = dynamic_cast<Conv2d*>(layer.get())) return c->weight_count();
    if (auto* s = dynamic_cast<SparseLayer*>(layer.get())) return s->weight_count();
    if (auto* seq = dynamic_cast<Sequential*>(layer.get())) {
      if (auto n = first_layer_weight_count(*seq)) return n;
    }
    if (auto* br = dynamic_cast<Branches*>(layer.get())) {
      if (!br->branches().empty()) {
        if (auto n = first_layer_weight_count(*br->branches().front())) return n;
      }
    }
  }
  return 0;
}

// -------------------------------------------------------------- InputEncoder

InputEncoder::InputEncoder(const NetworkConfig& cfg, const LabeledImageSet& set, bool cache)
    : variant_(cfg.variant), pyramidal_(cfg.spectral.pyramidal), set_(&set) {
  const auto shape = input_shape(cfg);
  channels_ = shape.channels, height_ = shape.height, width_ = shape.width;
  for (const auto& img : set.images) {
    if (img.height != height_ || img.width != width_) {
      throw InvalidArgument("input image " + std::to_string(img.height) + "x" +
                            std::to_string(img.width) + " does not match network input " +
                            to_string(shape));
    }
  }
  const std::size_t per = channels_ * height_ * width_;
  if (variant_ == Variant::frequency && cache &&
      2 * per * set.size() * sizeof(double) <= kSpectrumCacheLimit) {
    cache_magnitude_.resize(per * set.size());
    cache_phase_.resize(per * set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      encode_spectrum(i, cache_magnitude_.data() + i * per, cache_phase_.data() + i * per);
    }
  }
}

void InputEncoder::encode_spectrum(std::size_t image, double* magnitude, double* phase) const {
  const auto& img = set_->images[image];
  const std::size_t plane = height_ * width_;
  if (pyramidal_) {
    const auto p = pyramidal_spectra(img);
    for (std::size_t b = 0; b < 5; ++b) {
      std::copy_n(p.branches[b].magnitude.begin(), plane, magnitude + b * plane);
      std::copy_n(p.branches[b].phase.begin(), plane, phase + b * plane);
    }
  } else {
    const auto s = dft2(img);
    std::copy_n(s.magnitude.begin(), plane, magnitude);
    std::copy_n(s.phase.begin(), plane, phase);
  }
}

Feature InputEncoder::encode(std::span<const std::size_t> indices) const {
  const std::size_t per = channels_ * height_ * width_;
  if (variant_ == Variant::spatial) {
    Tensor4 t(indices.size(), 1, height_, width_);
    for (std::size_t n = 0; n < indices.size(); ++n) {
      const auto& s = set_->images[indices[n]].samples;
      std::copy(s.begin(), s.end(), t.values.begin() + n * per);
    }
    return t;
  }
  SpectralTensor s(indices.size(), channels_, height_, width_);
  for (std::size_t n = 0; n < indices.size(); ++n) {
    if (!cache_magnitude_.empty()) {
      std::copy_n(cache_magnitude_.begin() + indices[n] * per, per, s.magnitude.begin() + n * per);
      std::copy_n(cache_phase_.begin() + indices[n] * per, per, s.phase.begin() + n * per);
    } else {
      encode_spectrum(indices[n], s.magnitude.data() + n * per, s.phase.data() + n * per);
    }
  }
  return s;
}

// ------------------------------------------------------------------ datasets

Datasets load_datasets(const NetworkConfig& cfg) {
  Datasets d;
  if (cfg.dataset == DatasetKind::mnist) {
    d.train = load_mnist(cfg.data_root / "train-images-idx3-ubyte",
                         cfg.data_root / "train-labels-idx1-ubyte")
                  .head(cfg.train_limit);
    d.test = load_mnist(cfg.data_root / "t10k-images-idx3-ubyte",
                        cfg.data_root / "t10k-labels-idx1-ubyte")
                 .head(cfg.test_limit);
    d.train.class_count = d.test.class_count = 10;
    return d;
  }
  LabeledImageSet all = load_att(cfg.data_root);
  for (auto& img : all.images) img = resize_bilinear(img, cfg.att_size, cfg.att_size);
  auto split = att_split(all, cfg.att_train_per_class, cfg.split_seed);
  d.train = std::move(split.train);
  d.test = std::move(split.test);
  if (d.train.class_count != class_count(cfg)) {
    throw ParseError("AT&T: expected 40 subjects, found " + std::to_string(d.train.class_count),
                     0);
  }
  return d;
}

// ------------------------------------------------------------ train / eval

double evaluate(Sequential& net, const InputEncoder& encoder, std::size_t batch) {
  const auto& set = encoder.set();
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < set.size(); start += batch) {
    const std::size_t end = std::min(set.size(), start + batch);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
    const Feature out = net.forward(encoder.encode(idx), Mode::eval);
    const auto& logits = std::get<Tensor4>(out);
    const std::size_t classes = logits.sample_size();
    for (std::size_t n = 0; n < idx.size(); ++n) {
      const double* z = logits.values.data() + n * classes;
      const auto pred = static_cast<std::size_t>(std::max_element(z, z + classes) - z);
      if (static_cast<int>(pred) == set.labels[idx[n]]) ++correct;
    }
  }
  return set.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(set.size());
}

TrainResult train(Sequential& net, const NetworkConfig& cfg, const Datasets& data,
                  const TrainOptions& options) {
  const InputEncoder train_enc(cfg, data.train, true);
  const InputEncoder test_enc(cfg, data.test, true);
  BatchSampler sampler(data.train.size(), cfg.optimizer.batch_size, cfg.seed + 1);
  auto params = net.parameters();
  for (auto* p : params) p->zero_grad();

  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  std::vector<int> labels(cfg.optimizer.batch_size);

  const auto record = [&](std::size_t it) {
    MetricRecord r;
    r.iteration = it;
    r.loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    r.accuracy = evaluate(net, test_enc);
    if (options.record_wall_time) {
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    result.metrics.push_back(r);
    if (options.on_record) options.on_record(r);
    loss_sum = 0.0;
    loss_count = 0;
  };

  for (std::size_t it = 1; it <= cfg.optimizer.iterations; ++it) {
    const auto idx = sampler.next();
    for (std::size_t n = 0; n < idx.size(); ++n) labels[n] = data.train.labels[idx[n]];
    const Feature x = train_enc.encode(idx);
    const Feature out = net.forward(x, Mode::train);
    const auto& logits = std::get<Tensor4>(out);

    LossAndGrad lg;
    bool finite = all_finite(out);
    if (finite) {
      lg = softmax_cross_entropy(logits, labels);
      finite = std::isfinite(lg.loss);
    }
    if (!finite) {
      std::string layer = net.first_non_finite_layer(x, Mode::train);
      if (layer.empty()) layer = "loss";
      throw NumericalAbort("non-finite loss at iteration " + std::to_string(it) +
                               " (first non-finite output: " + layer + ")",
                           it, layer);
    }
    net.backward(lg.grad);
    sgd_step(params, cfg.optimizer);
    loss_sum += lg.loss;
    ++loss_count;

    if (it % cfg.eval_every == 0 || it == cfg.optimizer.iterations) record(it);
  }
  result.final_accuracy =
      result.metrics.empty() ? evaluate(net, test_enc) : result.metrics.back().accuracy;
  return result;
}

std::string metrics_csv(std::span<const MetricRecord> records) {
  std::string out = "iteration,loss,accuracy,seconds\n";
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%zu,%.9f,%.6f,%.3f\n", r.iteration, r.loss, r.accuracy,
                  r.seconds);
    out += buf;
  }
  return out;
}

}  // namespace fdnet
