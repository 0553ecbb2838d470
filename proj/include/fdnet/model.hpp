#pragma once

// Network assembly from a NetworkConfig, input encoding, training and
// evaluation loops, and the metrics CSV.

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdnet/config.hpp"
#include "fdnet/data.hpp"
#include "fdnet/layer.hpp"

namespace fdnet {

/// Per-sample shape of the encoded network input.
FeatureShape input_shape(const NetworkConfig& cfg);
std::size_t class_count(const NetworkConfig& cfg);

/// Builds the layer stack. The output is (batch, classes, 1, 1) logits.
std::unique_ptr<Sequential> build_network(const NetworkConfig& cfg, Rng& rng);

/// Kernel/weight scalars of the first conv or sparse layer found in
/// depth-first order (biases excluded).
std::size_t first_layer_weight_count(Sequential& net);

/// Turns images into network inputs: a (B, 1, H, W) tensor for the spatial
/// variant and a (B, 5 or 1, H, W) spectrum for the frequency variant.
/// Spectra may be cached per image.
class InputEncoder {
 public:
  InputEncoder(const NetworkConfig& cfg, const LabeledImageSet& set, bool cache);

  Feature encode(std::span<const std::size_t> indices) const;
  const LabeledImageSet& set() const noexcept { return *set_; }

 private:
  void encode_spectrum(std::size_t image, double* magnitude, double* phase) const;

  Variant variant_;
  bool pyramidal_;
  const LabeledImageSet* set_;
  std::size_t channels_, height_, width_;
  std::vector<double> cache_magnitude_, cache_phase_;
};

struct Datasets {
  LabeledImageSet train;
  LabeledImageSet test;
};

/// Loads, limits and preprocesses the configured dataset.
Datasets load_datasets(const NetworkConfig& cfg);

struct MetricRecord {
  std::size_t iteration = 0;
  double loss = 0.0;      // mean training loss since the previous record
  double accuracy = 0.0;  // test accuracy in [0, 1]
  double seconds = 0.0;   // wall time since training started
};

struct TrainOptions {
  bool record_wall_time = true;
  /// Called after each metrics record.
  std::function<void(const MetricRecord&)> on_record;
};

struct TrainResult {
  std::vector<MetricRecord> metrics;
  double final_accuracy = 0.0;
};

/// Runs cfg.optimizer.iterations SGD steps, evaluating every cfg.eval_every
/// iterations and after the last one. Throws NumericalAbort on a non-finite
/// loss.
TrainResult train(Sequential& net, const NetworkConfig& cfg, const Datasets& data,
                  const TrainOptions& options = {});

/// Fraction of correctly classified samples, eval-mode statistics.
double evaluate(Sequential& net, const InputEncoder& encoder, std::size_t batch = 250);

/// `iteration,loss,accuracy,seconds` with a header line.
std::string metrics_csv(std::span<const MetricRecord> records);

}  // namespace fdnet
