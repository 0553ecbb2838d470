#include "fdnet/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "fdnet/error.hpp"
#include "fdnet/spectrum.hpp"

namespace fdnet {

namespace {

constexpr double kRate = 100.0;
constexpr std::size_t kSamples = 100;
constexpr double kZero = 1e-9;

double bin_magnitude(const Spectrum& s, int bin) {
  return s.magnitude[centered_position(s.width, bin)];
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

}  // namespace

bool SpectrumAnalysis::all_passed() const noexcept {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::vector<double> sampled_sine(double frequency, double rate, std::size_t samples,
                                 bool rectified) {
  std::vector<double> x(samples);
  for (std::size_t n = 0; n < samples; ++n) {
    const double v = std::sin(2.0 * std::numbers::pi * frequency * static_cast<double>(n) / rate);
    x[n] = rectified ? std::max(0.0, v) : v;
  }
  return x;
}

std::vector<double> rectified_sine_partial_sum(double frequency, double rate,
                                               std::size_t samples, std::size_t terms) {
  using std::numbers::pi;
  std::vector<double> x(samples, 0.0);
  for (std::size_t n = 0; n < samples; ++n) {
    const double wt = 2.0 * pi * frequency * static_cast<double>(n) / rate;
    double v = 0.0;
    if (terms >= 1) v += 1.0 / pi;
    if (terms >= 2) v += 0.5 * std::sin(wt);
    for (std::size_t k = 1; k + 2 <= terms; ++k) {
      const double kk = static_cast<double>(k);
      v -= 2.0 / pi * std::cos(2.0 * kk * wt) / (4.0 * kk * kk - 1.0);
    }
    x[n] = v;
  }
  return x;
}

std::string spectrum_csv(const std::vector<double>& signal) {
  const Spectrum s = dft1(signal);
  std::string out = "bin,magnitude\n";
  const int lo = -static_cast<int>(s.width / 2);
  for (int b = lo; b < lo + static_cast<int>(s.width); ++b) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d,%.12e\n", b, bin_magnitude(s, b));
    out += buf;
  }
  return out;
}

SpectrumAnalysis analyze_spectrum() {
  SpectrumAnalysis a;
  const auto sine4 = sampled_sine(4, kRate, kSamples, false);
  const auto relu4 = sampled_sine(4, kRate, kSamples, true);
  const auto relu40 = sampled_sine(40, kRate, kSamples, true);

  a.files.push_back({"sine_f4_spectrum.csv", spectrum_csv(sine4)});
  a.files.push_back({"relu_sine_f4_spectrum.csv", spectrum_csv(relu4)});
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto partial = rectified_sine_partial_sum(4, kRate, kSamples, k);
    const std::string stem = "partial_" + std::to_string(k) + "_terms";
    a.files.push_back({stem + "_spectrum.csv", spectrum_csv(partial)});
    std::string signal = "sample,value\n";
    for (std::size_t n = 0; n < partial.size(); ++n) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%zu,%.12e\n", n, partial[n]);
      signal += buf;
    }
    a.files.push_back({stem + "_signal.csv", signal});
  }
  a.files.push_back({"relu_sine_f40_spectrum.csv", spectrum_csv(relu40)});

  // Rectified f = 4: DC and the even harmonics carry energy, odd multiples
  // of the fundamental above it should not.
  const Spectrum r4 = dft1(relu4);
  {
    AnalysisCheck c{"rectified f=4: DC, fundamental and even harmonics present", true, {}};
    for (int b : {0, 4, 8, 16, 24, 32, 40, 48}) {
      for (int sign : {1, -1}) {
        const double m = bin_magnitude(r4, sign * b);
        if (!(m > kZero)) {
          c.passed = false;
          c.detail += fmt("bin %+.0f = %.3e; ", sign * b, m);
        }
      }
    }
    if (c.passed) c.detail = "all above 1e-9";
    a.checks.push_back(c);
  }
  {
    AnalysisCheck c{"rectified f=4: odd harmonics 12..44 below 1e-9", true, {}};
    for (int b = 12; b <= 44; b += 8) {
      for (int sign : {1, -1}) {
        const double m = bin_magnitude(r4, sign * b);
        if (!(m < kZero)) {
          c.passed = false;
          c.detail += fmt("bin %+.0f = %.6e; ", sign * b, m);
        }
      }
    }
    if (c.passed) c.detail = "all below 1e-9";
    a.checks.push_back(c);
  }
  {
    const double ratio = bin_magnitude(r4, 8) / bin_magnitude(r4, 4);
    const double target = 4.0 / (3.0 * std::numbers::pi);
    a.checks.push_back({"rectified f=4: |bin 8| / |bin 4| = 4/(3 pi) within 1e-6",
                        std::abs(ratio - target) <= 1e-6,
                        fmt("ratio %.9f, target %.9f", ratio, target)});
  }
  {
    // 2 * 40 = 80 > rate / 2 folds onto 100 - 80 = 20. The unrectified sine
    // has nothing there.
    const Spectrum r40 = dft1(relu40);
    const Spectrum s40 = dft1(sampled_sine(40, kRate, kSamples, false));
    const double m = bin_magnitude(r40, 20);
    const double clean = bin_magnitude(s40, 20);
    a.checks.push_back({"rectified f=40: aliased energy at bin 20", m > kZero && clean < kZero,
                        fmt("|bin 20| = %.6f (plain sine: %.3e)", m, clean)});
  }
  return a;
}

void write_analysis(const SpectrumAnalysis& analysis, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir.string());
  }
  const auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw IoError("cannot write " + (out_dir / name).string());
    f << content;
    if (!f) throw IoError("write failed for " + (out_dir / name).string());
  };
  for (const auto& file : analysis.files) write(file.name, file.content);
  std::string report;
  for (const auto& c : analysis.checks) {
    report += (c.passed ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
  }
  write("checks.txt", report);
}

}  // namespace fdnet
