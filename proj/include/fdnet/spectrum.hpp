#pragma once

// Discrete Fourier transforms on small real/complex grids, stored with the
// zero-frequency (DC) bin at the grid center.
//
// Conventions used throughout the library:
//   * forward transforms are unnormalized, inverse transforms carry 1/(H*W);
//   * a spectrum of height H keeps frequency offset u at row u + H/2
//     (integer division), so offsets run over [-H/2, (H-1)/2];
//   * a zero-magnitude bin always has phase 0.

#include <cstddef>
#include <span>
#include <vector>

namespace fdnet {

/// Real samples in row-major order.
struct RealGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> samples;

  RealGrid() = default;
  RealGrid(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), samples(h * w, fill) {}
  RealGrid(std::size_t h, std::size_t w, std::vector<double> values);

  double& at(std::size_t r, std::size_t c) { return samples[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return samples[r * width + c]; }
  std::size_t size() const noexcept { return samples.size(); }
};

/// Complex grid in rectangular (re, im) planes.
struct ComplexGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> re;
  std::vector<double> im;

  ComplexGrid() = default;
  ComplexGrid(std::size_t h, std::size_t w) : height(h), width(w), re(h * w), im(h * w) {}

  std::size_t size() const noexcept { return re.size(); }
};

/// Centered complex spectrum in polar (magnitude, phase) planes.
struct Spectrum {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> magnitude;
  std::vector<double> phase;

  Spectrum() = default;
  Spectrum(std::size_t h, std::size_t w)
      : height(h), width(w), magnitude(h * w), phase(h * w) {}

  std::size_t size() const noexcept { return magnitude.size(); }
  std::size_t dc_row() const noexcept { return height / 2; }
  std::size_t dc_col() const noexcept { return width / 2; }
};

/// Signed frequency offset from the DC bin.
struct FrequencyIndex {
  int u = 0;  // row offset
  int v = 0;  // column offset

  friend bool operator==(const FrequencyIndex&, const FrequencyIndex&) = default;
};

/// Storage row/column of a signed offset on an axis of length n. Offsets are
/// taken modulo n, so the alias of an out-of-range offset is returned.
std::size_t centered_position(std::size_t n, int offset) noexcept;

/// Signed offset stored at position `pos` on an axis of length n.
int centered_offset(std::size_t n, std::size_t pos) noexcept;

/// Centered 1xN DFT of a real sequence. Requires N >= 2.
Spectrum dft1(std::span<const double> signal);

/// Centered 2D DFT of a real grid. Requires H, W >= 2.
Spectrum dft2(const RealGrid& grid);

/// Centered 2D DFT returned in rectangular form.
ComplexGrid dft2_rect(const RealGrid& grid);

/// Centered 2D DFT of a complex grid (rectangular in and out).
ComplexGrid dft2_complex(const ComplexGrid& grid);

/// Inverse of dft2_complex, including the 1/(H*W) factor.
ComplexGrid idft2_complex(const ComplexGrid& spectrum);

/// Real inverse transform.
///
/// Throws NumericalInconsistency when the imaginary part of the inverse
/// exceeds 1e-8 of the real part (L2 norms), which happens when the spectrum
/// is not conjugate-symmetric.
RealGrid idft2(const Spectrum& spectrum);
RealGrid idft2(const ComplexGrid& spectrum);

Spectrum rect_to_polar(const ComplexGrid& c);
ComplexGrid polar_to_rect(const Spectrum& s);

/// Places `grid` in the top-left corner of a zero grid of the target size.
RealGrid zero_pad(const RealGrid& grid, std::size_t target_height, std::size_t target_width);

}  // namespace fdnet
