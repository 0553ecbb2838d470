#pragma once

// Sampled sine / rectified-sine spectra and the harmonic checks run by
// `fdnet analyze-spectrum`. Everything here is deterministic (no RNG).

#include <filesystem>
#include <string>
#include <vector>

namespace fdnet {

struct AnalysisFile {
  std::string name;     // file name inside the output directory
  std::string content;  // CSV text
};

struct AnalysisCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SpectrumAnalysis {
  std::vector<AnalysisFile> files;
  std::vector<AnalysisCheck> checks;
  bool all_passed() const noexcept;
};

/// x[n] = sin(2 pi f n / rate), n = 0..samples-1; rectified with max(0, .)
std::vector<double> sampled_sine(double frequency, double rate, std::size_t samples,
                                 bool rectified);

/// First `terms` terms of the half-wave rectified unit sine series:
/// 1/pi, (1/2) sin(wt), -(2/(3 pi)) cos(2wt), -(2/(15 pi)) cos(4wt), ...
std::vector<double> rectified_sine_partial_sum(double frequency, double rate,
                                               std::size_t samples, std::size_t terms);

/// `bin,magnitude` CSV rows for bins -N/2 .. N-1-N/2 of the centered DFT.
std::string spectrum_csv(const std::vector<double>& signal);

/// Builds all CSVs (rate 100 Hz, 100 samples) and evaluates the checks.
SpectrumAnalysis analyze_spectrum();

/// Writes every file plus checks.txt into `out_dir` (created if missing).
/// Throws IoError when the directory or a file cannot be written.
void write_analysis(const SpectrumAnalysis& analysis, const std::filesystem::path& out_dir);

}  // namespace fdnet
