// fdnet: train / eval / ablate / analyze-spectrum.
//
// Exit codes: 0 ok, 1 output I/O failure, 2 config error, 3 data error,
// 4 numerical abort (non-finite loss, or a failed spectrum check).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fdnet/analysis.hpp"
#include "fdnet/checkpoint.hpp"
#include "fdnet/config.hpp"
#include "fdnet/error.hpp"
#include "fdnet/model.hpp"

namespace fs = std::filesystem;
using namespace fdnet;

namespace {

enum Exit { kOk = 0, kIo = 1, kConfig = 2, kData = 3, kNumerical = 4 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::optional<std::string> data_root;
  fs::path out = "runs";
  bool no_wall_time = false;
};

// Errors that occur while reading inputs are data errors, whatever their type.
struct DataFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

NetworkConfig configure(const fs::path& path, const Overrides& o) {
  NetworkConfig cfg = load_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.iterations) {
    if (*o.iterations == 0) throw ConfigError("--iterations must be positive");
    cfg.optimizer.iterations = *o.iterations;
  }
  if (o.data_root) cfg.data_root = *o.data_root;
  return cfg;
}

Datasets load_data(const NetworkConfig& cfg) {
  try {
    return load_datasets(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataFailure(e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw IoError("cannot write " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

TrainResult run_training(const NetworkConfig& cfg, const Datasets& data, const fs::path& out,
                         const Overrides& o, const char* tag) {
  Rng rng(cfg.seed);
  auto net = build_network(cfg, rng);
  TrainOptions opts;
  opts.record_wall_time = !o.no_wall_time;
  opts.on_record = [tag](const MetricRecord& r) {
    std::fprintf(stderr, "%s iter %zu  loss %.4f  acc %.4f  %.1fs\n", tag, r.iteration, r.loss,
                 r.accuracy, r.seconds);
  };
  make_dir(out);
  TrainResult result = train(*net, cfg, data, opts);
  write_text(out / "metrics.csv", metrics_csv(result.metrics));
  save_checkpoint(out / "checkpoint.spnn", net->state());
  return result;
}

int cmd_train(const fs::path& cfg_path, const Overrides& o) {
  const NetworkConfig cfg = configure(cfg_path, o);
  const Datasets data = load_data(cfg);
  const TrainResult r = run_training(cfg, data, o.out, o, "train");
  std::printf("accuracy %.6f\n", r.final_accuracy);
  std::printf("checkpoint %s\n", (o.out / "checkpoint.spnn").string().c_str());
  return kOk;
}

int cmd_eval(const fs::path& ckpt, const fs::path& cfg_path, const Overrides& o) {
  const NetworkConfig cfg = configure(cfg_path, o);
  Rng rng(cfg.seed);
  auto net = build_network(cfg, rng);
  try {
    load_checkpoint(ckpt, net->state());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataFailure(e.what());
  }
  const Datasets data = load_data(cfg);
  const InputEncoder enc(cfg, data.test, true);
  std::printf("accuracy %.6f\n", evaluate(*net, enc));
  return kOk;
}

int cmd_ablate(const fs::path& cfg_path, const Overrides& o) {
  NetworkConfig with = configure(cfg_path, o);
  if (with.variant != Variant::frequency) {
    throw ConfigError("ablate needs a frequency-variant config");
  }
  NetworkConfig without = with;
  with.spectral.use_2srelu = true;
  without.spectral.use_2srelu = false;
  validate_config(without);
  const Datasets data = load_data(with);
  const double e_with = 1.0 - run_training(with, data, o.out / "with_2srelu", o, "with").final_accuracy;
  const double e_without =
      1.0 - run_training(without, data, o.out / "without_2srelu", o, "without").final_accuracy;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "arm,error_percent\nwith_2srelu,%.4f\nwithout_2srelu,%.4f\ndifference,%.4f\n",
                100 * e_with, 100 * e_without, 100 * (e_without - e_with));
  write_text(o.out / "ablation.csv", buf);
  std::printf("error with 2SReLU    %.2f%%\nerror without 2SReLU %.2f%%\ndifference           %.2f points\n",
              100 * e_with, 100 * e_without, 100 * (e_without - e_with));
  return kOk;
}

int cmd_analyze(const fs::path& dir) {
  const SpectrumAnalysis a = analyze_spectrum();
  write_analysis(a, dir);
  for (const auto& c : a.checks) {
    std::printf("%s %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
  }
  return a.all_passed() ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-domain and spatial CNN experiments"};
  app.require_subcommand(1);
  Overrides o;
  std::string out;
  const auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "override run.seed");
    sub->add_option("--iterations", o.iterations, "override optimizer.iterations");
    sub->add_option("--data", o.data_root, "override run.data_root");
    sub->add_option("--out", out, "output directory")->default_str("runs");
    sub->add_flag("--no-wall-time", o.no_wall_time, "write 0 in the seconds column");
  };

  std::string cfg_path, ckpt_path, dir;
  auto* train = app.add_subcommand("train", "train a network, write checkpoint and metrics");
  train->add_option("config", cfg_path)->required();
  add_run_flags(train);

  auto* eval = app.add_subcommand("eval", "test accuracy of a checkpoint");
  eval->add_option("checkpoint", ckpt_path)->required();
  eval->add_option("config", cfg_path)->required();
  eval->add_option("--seed", o.seed);
  eval->add_option("--data", o.data_root, "override run.data_root");

  auto* ablate = app.add_subcommand("ablate", "train with and without 2SReLU, same seed");
  ablate->add_option("config", cfg_path)->required();
  add_run_flags(ablate);

  auto* analyze = app.add_subcommand("analyze-spectrum", "sine / rectified sine spectra as CSV");
  analyze->add_option("dir", dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (!out.empty()) o.out = out;

  try {
    if (*train) return cmd_train(cfg_path, o);
    if (*eval) return cmd_eval(ckpt_path, cfg_path, o);
    if (*ablate) return cmd_ablate(cfg_path, o);
    if (*analyze) return cmd_analyze(dir);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const DataFailure& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const NumericalAbort& e) {
    std::fprintf(stderr, "numerical abort at iteration %zu in %s: %s\n", e.iteration(),
                 e.layer().c_str(), e.what());
    return kNumerical;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  }
  return kOk;
}
