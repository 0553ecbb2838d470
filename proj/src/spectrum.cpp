#include "fdnet/spectrum.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "fdnet/error.hpp"
#include "fdnet/polar.hpp"

namespace fdnet {

namespace {

using CMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row k holds exp(-2*pi*i*(k - n/2)*m/n) for m = 0..n-1, i.e. the DFT with
// the centering shift fused in.
std::shared_ptr<const CMatrix> centered_dft_matrix(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const CMatrix>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    auto m = std::make_shared<CMatrix>(n, n);
    const auto nn = static_cast<long long>(n);
    for (std::size_t k = 0; k < n; ++k) {
      const long long u = static_cast<long long>(k) - nn / 2;
      for (std::size_t j = 0; j < n; ++j) {
        // reduce the exponent exactly before going to floating point
        long long e = (u * static_cast<long long>(j)) % nn;
        if (e < 0) e += nn;
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(n);
        (*m)(k, j) = {std::cos(angle), std::sin(angle)};
      }
    }
    slot = std::move(m);
  }
  return slot;
}

void require_transform_size(std::size_t h, std::size_t w) {
  if (h < 2 && w < 2) {
    throw InvalidArgument("dft: grid must have at least 2 samples along some axis, got " +
                          std::to_string(h) + "x" + std::to_string(w));
  }
  if (h == 0 || w == 0) throw InvalidArgument("dft: empty grid");
}

CMatrix to_matrix(const ComplexGrid& g) {
  CMatrix m(g.height, g.width);
  for (std::size_t i = 0; i < g.size(); ++i) m.data()[i] = {g.re[i], g.im[i]};
  return m;
}

ComplexGrid from_matrix(const CMatrix& m) {
  ComplexGrid g(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.re[i] = m.data()[i].real();
    g.im[i] = m.data()[i].imag();
  }
  return g;
}

}  // namespace

RealGrid::RealGrid(std::size_t h, std::size_t w, std::vector<double> values)
    : height(h), width(w), samples(std::move(values)) {
  if (samples.size() != h * w) {
    throw InvalidArgument("RealGrid: " + std::to_string(samples.size()) + " samples for shape " +
                          std::to_string(h) + "x" + std::to_string(w));
  }
}

std::size_t centered_position(std::size_t n, int offset) noexcept {
  const auto nn = static_cast<long long>(n);
  long long p = (static_cast<long long>(offset) + nn / 2) % nn;
  if (p < 0) p += nn;
  return static_cast<std::size_t>(p);
}

int centered_offset(std::size_t n, std::size_t pos) noexcept {
  return static_cast<int>(pos) - static_cast<int>(n / 2);
}

ComplexGrid dft2_rect(const RealGrid& grid) {
  require_transform_size(grid.height, grid.width);
  const auto a = centered_dft_matrix(grid.height);
  const auto b = centered_dft_matrix(grid.width);
  const Eigen::Map<const RMatrix> x(grid.samples.data(), grid.height, grid.width);
  // rows first: (H x W) * B^T is real x complex
  const CMatrix rows = x.cast<std::complex<double>>() * b->transpose();
  return from_matrix(*a * rows);
}

ComplexGrid dft2_complex(const ComplexGrid& grid) {
  require_transform_size(grid.height, grid.width);
  const auto a = centered_dft_matrix(grid.height);
  const auto b = centered_dft_matrix(grid.width);
  return from_matrix(*a * to_matrix(grid) * b->transpose());
}

ComplexGrid idft2_complex(const ComplexGrid& spectrum) {
  require_transform_size(spectrum.height, spectrum.width);
  const auto a = centered_dft_matrix(spectrum.height);
  const auto b = centered_dft_matrix(spectrum.width);
  const double scale = 1.0 / static_cast<double>(spectrum.height * spectrum.width);
  CMatrix x = a->adjoint() * to_matrix(spectrum) * b->conjugate();
  x *= scale;
  return from_matrix(x);
}

Spectrum dft1(std::span<const double> signal) {
  if (signal.empty()) throw InvalidArgument("dft1: empty signal");
  if (signal.size() < 2) throw InvalidArgument("dft1: signal needs at least 2 samples");
  RealGrid g(1, signal.size(), std::vector<double>(signal.begin(), signal.end()));
  return rect_to_polar(dft2_rect(g));
}

Spectrum dft2(const RealGrid& grid) {
  if (grid.height < 2 || grid.width < 2) {
    throw InvalidArgument("dft2: grid must be at least 2x2, got " + std::to_string(grid.height) +
                          "x" + std::to_string(grid.width));
  }
  return rect_to_polar(dft2_rect(grid));
}

RealGrid idft2(const ComplexGrid& spectrum) {
  const ComplexGrid x = idft2_complex(spectrum);
  double re2 = 0.0;
  double im2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    re2 += x.re[i] * x.re[i];
    im2 += x.im[i] * x.im[i];
  }
  if (std::sqrt(im2) > 1e-8 * std::sqrt(re2)) {
    throw NumericalInconsistency("idft2: imaginary residue " + std::to_string(std::sqrt(im2)) +
                                 " exceeds 1e-8 of the real output norm " +
                                 std::to_string(std::sqrt(re2)) +
                                 "; spectrum is not conjugate-symmetric");
  }
  return RealGrid(x.height, x.width, x.re);
}

RealGrid idft2(const Spectrum& spectrum) { return idft2(polar_to_rect(spectrum)); }

Spectrum rect_to_polar(const ComplexGrid& c) {
  Spectrum s(c.height, c.width);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto p = polar::from_rect(c.re[i], c.im[i]);
    s.magnitude[i] = p.magnitude;
    s.phase[i] = p.phase;
  }
  return s;
}

ComplexGrid polar_to_rect(const Spectrum& s) {
  ComplexGrid c(s.height, s.width);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = polar::to_rect(s.magnitude[i], s.phase[i]);
    c.re[i] = r.re;
    c.im[i] = r.im;
  }
  return c;
}

RealGrid zero_pad(const RealGrid& grid, std::size_t target_height, std::size_t target_width) {
  if (target_height < grid.height || target_width < grid.width) {
    throw InvalidArgument("zero_pad: target " + std::to_string(target_height) + "x" +
                          std::to_string(target_width) + " smaller than input " +
                          std::to_string(grid.height) + "x" + std::to_string(grid.width));
  }
  RealGrid out(target_height, target_width);
  for (std::size_t r = 0; r < grid.height; ++r) {
    for (std::size_t c = 0; c < grid.width; ++c) out.at(r, c) = grid.at(r, c);
  }
  return out;
}

}  // namespace fdnet
