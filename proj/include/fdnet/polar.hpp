#pragma once

// Scalar polar/rectangular helpers shared by the spectral kernels.

#include <cmath>

namespace fdnet::polar {

struct Rect {
  double re = 0.0;
  double im = 0.0;
};

struct Polar {
  double magnitude = 0.0;
  double phase = 0.0;
};

inline Polar from_rect(double re, double im) noexcept {
  const double m = std::sqrt(re * re + im * im);
  if (m == 0.0) return {0.0, 0.0};
  return {m, std::atan2(im, re)};
}

inline Rect to_rect(double magnitude, double phase) noexcept {
  return {magnitude * std::cos(phase), magnitude * std::sin(phase)};
}

/// Pulls a (d/dmagnitude, d/dphase) cotangent at the output of a
/// rectangular->polar conversion back to (d/dre, d/dim) at its input.
/// At the origin the phase is pinned to 0, so only the magnitude term
/// contributes, along the canonical direction (1, 0).
inline Rect polar_cotangent_to_rect(double re, double im, double g_mag, double g_phase) noexcept {
  const double m2 = re * re + im * im;
  if (m2 == 0.0) return {g_mag, 0.0};
  const double m = std::sqrt(m2);
  return {g_mag * re / m - g_phase * im / m2, g_mag * im / m + g_phase * re / m2};
}

/// Pulls a (d/dre, d/dim) cotangent at the output of a polar->rectangular
/// conversion back to (d/dmagnitude, d/dphase).
inline Polar rect_cotangent_to_polar(double magnitude, double phase, double g_re,
                                     double g_im) noexcept {
  const double c = std::cos(phase);
  const double s = std::sin(phase);
  return {g_re * c + g_im * s, magnitude * (g_im * c - g_re * s)};
}

/// Same, reusing the rectangular form (re, im) of the point when it is
/// already known. Falls back to the phase only at magnitude 0.
inline Polar rect_cotangent_to_polar(double magnitude, double phase, double re, double im,
                                     double g_re, double g_im) noexcept {
  if (magnitude == 0.0) return rect_cotangent_to_polar(magnitude, phase, g_re, g_im);
  return {(g_re * re + g_im * im) / magnitude, g_im * re - g_re * im};
}

}  // namespace fdnet::polar
