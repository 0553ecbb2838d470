// One process per criterion: `fdnet_acceptance <id>` prints a single
// "criterion <id>: PASS|FAIL|SKIP ..." line and exits 0, 1 or 77 (skip).
//
// Data comes from $FDNET_DATA (default <repo>/data): mnist/ with IDX files,
// att_faces/ with s1..s40. Full-length runs (6-full) only happen when
// FDNET_FULL is set.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "fdnet/analysis.hpp"
#include "fdnet/config.hpp"
#include "fdnet/model.hpp"
#include "fdnet/spatial.hpp"
#include "fdnet/spectral.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fdnet;

namespace {

enum Outcome { pass = 0, fail = 1, skip = 77 };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

fs::path data_root() {
  if (const char* env = std::getenv("FDNET_DATA")) return env;
  return fs::path(FDNET_SOURCE_DIR) / "data";
}

fs::path config_path(const std::string& rel) { return fs::path(FDNET_SOURCE_DIR) / "configs" / rel; }

bool have_mnist() {
  const auto d = data_root() / "mnist";
  for (const char* f : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                        "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"})
    if (!fs::exists(d / f)) return false;
  return true;
}

bool have_att() { return fs::exists(data_root() / "att_faces" / "s1"); }

SpectralTensor random_spectrum(std::size_t n, std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
  std::uniform_real_distribution<double> mag(0.2, 2.0), ph(-3.0, 3.0);
  SpectralTensor s(n, c, h, w);
  for (std::size_t i = 0; i < s.size(); ++i) s.magnitude[i] = mag(rng), s.phase[i] = ph(rng);
  return s;
}

Tensor4 random_tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
  std::uniform_real_distribution<double> d(-1, 1);
  Tensor4 t(n, c, h, w);
  for (auto& v : t.values) v = d(rng);
  return t;
}

ComplexGrid random_complex(std::size_t h, std::size_t w, Rng& rng) {
  std::uniform_real_distribution<double> d(-1, 1);
  ComplexGrid c(h, w);
  for (std::size_t i = 0; i < c.size(); ++i) c.re[i] = d(rng), c.im[i] = d(rng);
  return c;
}

double inner(const ComplexGrid& a, const ComplexGrid& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.re[i] * b.re[i] + a.im[i] * b.im[i];
  return s;
}

// ---------------------------------------------------------------- criteria

Verdict convolution_theorem() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  std::uniform_int_distribution<std::size_t> size(1, 16);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = size(rng), w = size(rng);
    const auto f = oracle::random_grid(h, w, rng);
    const auto g = oracle::random_grid(h, w, rng);
    const auto F = dft2_rect(f), G = dft2_rect(g);
    ComplexGrid P(h, w);
    for (std::size_t i = 0; i < P.size(); ++i) {
      P.re[i] = F.re[i] * G.re[i] - F.im[i] * G.im[i];
      P.im[i] = F.re[i] * G.im[i] + F.im[i] * G.re[i];
    }
    const auto via_fourier = idft2(P);
    const auto direct = oracle::circular_convolution(f, g);
    worst = std::max(worst, oracle::rel_l2(via_fourier.samples, direct.samples));
  }
  const double t = seconds_since(t0);
  const bool ok = worst <= 1e-9 && t < 5.0;
  return {ok ? pass : fail, "100 pairs up to 16x16, worst rel err " + fmt("%.3e", worst) +
                                " (<= 1e-9), " + fmt("%.3f", t) + " s (< 5 s)"};
}

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  Rng rng(77);
  struct Row {
    std::string name;
    double error;
    double bound;
  };
  std::vector<Row> rows;
  {
    Conv2d conv("conv", 2, 3, 3, rng);
    rows.push_back({"conv", grad_check(conv, random_tensor(2, 2, 5, 4, rng), 1e-4).max_error(), 1e-7});
  }
  {
    BatchNorm bn("bn", 2);
    rows.push_back({"batchnorm", grad_check(bn, random_tensor(4, 2, 3, 3, rng), 1e-3).max_error(), 1e-4});
  }
  {
    FullyConnected fc("fc", 6, 4, rng);
    rows.push_back({"fully_connected", grad_check(fc, random_tensor(3, 6, 1, 1, rng), 1e-4).max_error(), 1e-7});
  }
  {
    Tensor4 z = random_tensor(4, 5, 1, 1, rng);
    const std::vector<int> y{4, 0, 2, 2};
    const auto r = softmax_cross_entropy(z, y);
    std::vector<double> fd(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double keep = z.values[i];
      z.values[i] = keep + 1e-5;
      const double up = softmax_cross_entropy(z, y).loss;
      z.values[i] = keep - 1e-5;
      const double down = softmax_cross_entropy(z, y).loss;
      z.values[i] = keep;
      fd[i] = (up - down) / 2e-5;
    }
    rows.push_back({"softmax_ce", oracle::rel_l2(r.grad.values, fd), 1e-4});
  }
  for (SparseMode mode : {SparseMode::polar, SparseMode::hadamard_both}) {
    SparseLayer s("sparse", 2, 3, 5, 4, mode, rng);
    rows.push_back({mode == SparseMode::polar ? "sparse_polar" : "sparse_hadamard_both",
                    grad_check(s, random_spectrum(2, 2, 5, 4, rng), 1e-5).max_error(), 1e-4});
  }
  {
    // the 2SReLU map itself is linear on (re, im): central differences are exact up to rounding
    const TwoSReLUConfig cfg;
    auto x = random_complex(8, 8, rng);
    const auto r = random_complex(8, 8, rng);
    const auto g = tsrelu_adjoint(r, cfg);
    std::vector<double> analytic, numeric;
    for (int part = 0; part < 2; ++part) {
      auto& plane = part == 0 ? x.re : x.im;
      for (std::size_t i = 0; i < plane.size(); ++i) {
        const double keep = plane[i];
        plane[i] = keep + 1e-3;
        const double up = inner(tsrelu_apply(x, cfg), r);
        plane[i] = keep - 1e-3;
        const double down = inner(tsrelu_apply(x, cfg), r);
        plane[i] = keep;
        numeric.push_back((up - down) / 2e-3);
        analytic.push_back(part == 0 ? g.re[i] : g.im[i]);
      }
    }
    rows.push_back({"2srelu", oracle::rel_l2(analytic, numeric), 1e-7});
    TwoSReLU layer("2srelu", cfg);
    rows.push_back({"2srelu_polar_layer",
                    grad_check(layer, random_spectrum(2, 2, 8, 8, rng), 1e-5).max_error(), 1e-4});
  }
  {
    SpectralPool pool("pool", 4, 3);
    rows.push_back({"spectral_pool", grad_check(pool, random_spectrum(2, 2, 8, 7, rng), 1e-5).max_error(), 1e-7});
  }
  {
    DcRemoval dc("dc");
    rows.push_back({"dc_removal", grad_check(dc, random_spectrum(2, 2, 5, 6, rng), 1e-5).max_error(), 1e-7});
  }
  {
    SpectralBatchNorm sbn("sbn", 2);
    rows.push_back({"spectral_batchnorm",
                    grad_check(sbn, random_spectrum(4, 2, 3, 3, rng), 1e-6).max_error(), 1e-4});
  }
  {
    Relu relu("relu");
    auto x = random_tensor(2, 2, 3, 3, rng);
    for (auto& v : x.values)
      if (std::abs(v) < 1e-2) v = v < 0 ? -1e-2 : 1e-2;
    rows.push_back({"relu", grad_check(relu, x, 1e-4).max_error(), 1e-7});
    MaxPool2 mp("maxpool");
    rows.push_back({"maxpool2", grad_check(mp, random_tensor(2, 2, 4, 4, rng), 1e-6).max_error(), 1e-7});
  }
  const double t = seconds_since(t0);
  bool ok = t < 30.0;
  std::string detail;
  for (const auto& r : rows) {
    const bool row_ok = r.error <= r.bound;
    ok = ok && row_ok;
    detail += r.name + "=" + fmt("%.2e", r.error) + (row_ok ? " " : "(!) ");
  }
  return {ok ? pass : fail, detail + fmt("%.2f", t) + " s (< 30 s)"};
}

Verdict tsrelu_adjoint_identity() {
  Rng rng(5);
  const TwoSReLUConfig cfg;
  double worst = 0;
  for (std::size_t n : {11u, 28u}) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto a = random_complex(n, n, rng), b = random_complex(n, n, rng);
      const double lhs = inner(tsrelu_apply(a, cfg), b);
      const double rhs = inner(a, tsrelu_adjoint(b, cfg));
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return {worst <= 1e-12 ? pass : fail,
          "200 pairs on 11x11 and 28x28, max |<Ta,b> - <a,T*b>| = " + fmt("%.3e", worst) + " (<= 1e-12)"};
}

Verdict harmonic_analysis() {
  const auto t0 = Clock::now();
  const SpectrumAnalysis a = analyze_spectrum();
  const double t = seconds_since(t0);
  std::string detail;
  for (const auto& c : a.checks) detail += c.name + ": " + (c.passed ? "ok" : "FAILED") + " (" + c.detail + "); ";
  const bool ok = a.all_passed() && t < 1.0;
  return {ok ? pass : fail, detail + fmt("%.3f", t) + " s (< 1 s)"};
}

Verdict parameter_count() {
  const auto spatial_cfg = load_config(config_path("mnist_spatial.cfg"));
  const auto freq_cfg = load_config(config_path("mnist_frequency.cfg"));
  Rng rng(1);
  auto sp = build_network(spatial_cfg, rng);
  auto fr = build_network(freq_cfg, rng);
  const std::size_t conv = first_layer_weight_count(*sp);
  const std::size_t sparse = first_layer_weight_count(*fr);
  const double ratio = static_cast<double>(sparse) / static_cast<double>(conv);
  char rounded[32];
  std::snprintf(rounded, sizeof rounded, "%.2f", ratio);
  const bool ok = conv == 144 && sparse == 3136 && std::string(rounded) == "21.78";
  return {ok ? pass : fail, "first conv " + std::to_string(conv) + ", first sparse " +
                                std::to_string(sparse) + ", ratio " + fmt("%.4f", ratio)};
}

struct RunOutcome {
  double accuracy = 0;
  double seconds = 0;
  std::string csv;
};

RunOutcome run(NetworkConfig cfg, bool wall_time = true) {
  const auto t0 = Clock::now();
  const Datasets data = load_datasets(cfg);
  Rng rng(cfg.seed);
  auto net = build_network(cfg, rng);
  TrainOptions opts;
  opts.record_wall_time = wall_time;
  opts.on_record = [&](const MetricRecord& r) {
    std::fprintf(stderr, "  [%s seed %llu] iter %zu loss %.4f acc %.4f\n",
                 std::string(to_string(cfg.variant)).c_str(),
                 static_cast<unsigned long long>(cfg.seed), r.iteration, r.loss, r.accuracy);
  };
  const TrainResult result = train(*net, cfg, data, opts);
  return {result.final_accuracy, seconds_since(t0), metrics_csv(result.metrics)};
}

NetworkConfig with_data(const fs::path& cfg_path, const fs::path& root) {
  auto cfg = load_config(cfg_path);
  cfg.data_root = root;
  return cfg;
}

Verdict mnist_ci() {
  if (!have_mnist()) return {skip, "no MNIST IDX files under " + (data_root() / "mnist").string()};
  const auto sp = run(with_data(config_path("ci/mnist_spatial.cfg"), data_root() / "mnist"));
  const auto fr = run(with_data(config_path("ci/mnist_frequency.cfg"), data_root() / "mnist"));
  const bool ok = sp.accuracy >= 0.95 && fr.accuracy >= 0.88 && sp.seconds < 900 && fr.seconds < 900;
  return {ok ? pass : fail, "CI scale: spatial " + fmt("%.2f%%", 100 * sp.accuracy) + " (>= 95%) in " +
                                fmt("%.0f s", sp.seconds) + ", frequency " + fmt("%.2f%%", 100 * fr.accuracy) +
                                " (>= 88%) in " + fmt("%.0f s", fr.seconds) + " (each < 900 s)"};
}

Verdict mnist_full() {
  if (!std::getenv("FDNET_FULL")) return {skip, "set FDNET_FULL=1 for the full-length runs"};
  if (!have_mnist()) return {skip, "no MNIST IDX files under " + (data_root() / "mnist").string()};
  const auto sp = run(with_data(config_path("mnist_spatial.cfg"), data_root() / "mnist"));
  const auto fr = run(with_data(config_path("mnist_frequency.cfg"), data_root() / "mnist"));
  const bool ok = sp.accuracy >= 0.985 && fr.accuracy >= 0.95;
  return {ok ? pass : fail, "full: spatial " + fmt("%.2f%%", 100 * sp.accuracy) + " (>= 98.5%), frequency " +
                                fmt("%.2f%%", 100 * fr.accuracy) + " (>= 95.0%)"};
}

Verdict ablation() {
  if (!have_mnist()) return {skip, "no MNIST IDX files under " + (data_root() / "mnist").string()};
  const auto base = with_data(config_path("ci/mnist_frequency.cfg"), data_root() / "mnist");
  double err_with = 0, err_without = 0;
  std::string detail;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto on = base;
    on.seed = seed;
    auto off = on;
    off.spectral.use_2srelu = false;
    const double e_on = 100 * (1 - run(on).accuracy);
    const double e_off = 100 * (1 - run(off).accuracy);
    err_with += e_on / 3;
    err_without += e_off / 3;
    detail += "seed " + std::to_string(seed) + ": " + fmt("%.2f", e_on) + "% vs " + fmt("%.2f", e_off) + "%; ";
  }
  const double gap = err_without - err_with;
  return {gap >= 0.5 ? pass : fail, detail + "mean error with 2SReLU " + fmt("%.2f%%", err_with) +
                                        ", without " + fmt("%.2f%%", err_without) + ", gap " +
                                        fmt("%.2f", gap) + " points (>= 0.5)"};
}

Verdict att() {
  if (!have_att()) return {skip, "no AT&T faces under " + (data_root() / "att_faces").string()};
  const auto fr = run(with_data(config_path("att_frequency.cfg"), data_root() / "att_faces"));
  const bool ok = fr.accuracy >= 0.925 && fr.seconds < 1800;
  return {ok ? pass : fail, "frequency " + fmt("%.2f%%", 100 * fr.accuracy) + " (>= 92.5%) in " +
                                fmt("%.0f s", fr.seconds) + " (< 1800 s)"};
}

Verdict determinism() {
  std::string detail;
  bool ok = true;
  if (have_mnist()) {
    for (const char* name : {"ci/mnist_frequency.cfg", "ci/mnist_spatial.cfg"}) {
      auto cfg = with_data(config_path(name), data_root() / "mnist");
      cfg.optimizer.iterations = 200;
      cfg.eval_every = 50;
      cfg.train_limit = 2000;
      cfg.test_limit = 500;
      const auto a = run(cfg, false), b = run(cfg, false);
      const bool same = a.csv == b.csv;
      ok = ok && same;
      detail += std::string(name) + (same ? " identical" : " DIFFERENT") + " (" +
                std::to_string(a.csv.size()) + " bytes); ";
    }
  } else {
    return {skip, "no MNIST IDX files under " + (data_root() / "mnist").string()};
  }
  return {ok ? pass : fail, detail};
}

Verdict pooling_and_regions() {
  std::size_t checked = 0;
  bool ok = true;
  for (std::size_t n : {5u, 7u, 8u, 11u, 14u, 28u}) {
    // region cardinality against enumeration of the definition
    const int N = static_cast<int>(n), r = (N / 2) / 2;
    std::size_t expected = 0;
    for (int u = -N / 2; u < N - N / 2; ++u)
      for (int v = -N / 2; v < N - N / 2; ++v) expected += (u || v) && std::abs(u) <= r && std::abs(v) <= r;
    const auto region = low_frequency_region(n, n);
    ok = ok && region.size() == expected && expected == static_cast<std::size_t>((2 * r + 1) * (2 * r + 1) - 1);
    // second harmonics sit at the wrapped (2u, 2v)
    for (auto p : region)
      ok = ok && second_harmonic_position(n, n, p) ==
                     centered_position(n, 2 * p.u) * n + centered_position(n, 2 * p.v);
    // 2SReLU leaves every bin outside the region untouched
    Rng rng(n);
    const auto x = random_complex(n, n, rng);
    const auto y = tsrelu_apply(x, TwoSReLUConfig{});
    std::vector<bool> inside(n * n, false);
    for (auto p : region) inside[centered_position(n, p.u) * n + centered_position(n, p.v)] = true;
    for (std::size_t i = 0; i < n * n; ++i)
      if (!inside[i]) ok = ok && y.re[i] == x.re[i] && y.im[i] == x.im[i];
    // pool(pool(x, a), b) == pool(x, b) for every b <= a <= n
    Spectrum s(n, n);
    for (std::size_t i = 0; i < s.size(); ++i) s.magnitude[i] = static_cast<double>(i), s.phase[i] = -static_cast<double>(i);
    for (std::size_t a = 1; a <= n; ++a)
      for (std::size_t b = 1; b <= a; ++b) {
        const Spectrum twice = spectral_pool(spectral_pool(s, a, a), b, b);
        const Spectrum once = spectral_pool(s, b, b);
        ok = ok && twice.magnitude == once.magnitude && twice.phase == once.phase;
        ++checked;
      }
  }
  return {ok ? pass : fail, "sizes {5,7,8,11,14,28}: region cardinality, harmonic positions, untouched bins, " +
                                std::to_string(checked) + " pooling compositions"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<Verdict()>> criteria{
      {"1", convolution_theorem}, {"2", gradient_suite}, {"3", tsrelu_adjoint_identity},
      {"4", harmonic_analysis},   {"5", parameter_count}, {"6", mnist_ci},
      {"6-full", mnist_full},     {"7", ablation},        {"8", att},
      {"9", determinism},         {"10", pooling_and_regions}};
  if (argc != 2 || !criteria.count(argv[1])) {
    std::fprintf(stderr, "usage: fdnet_acceptance <1..10|6-full>\n");
    return 2;
  }
  Verdict v;
  try {
    v = criteria.at(argv[1])();
  } catch (const std::exception& e) {
    v = {fail, std::string("exception: ") + e.what()};
  }
  const char* word = v.outcome == pass ? "PASS" : v.outcome == skip ? "SKIP" : "FAIL";
  std::printf("criterion %s: %s %s\n", argv[1], word, v.detail.c_str());
  return v.outcome;
}
