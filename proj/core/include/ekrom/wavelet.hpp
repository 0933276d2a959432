#pragma once

#include "ekrom/grid.hpp"

#include <string>
#include <vector>

namespace ekrom {

/// Source time signature w(t) = exp(-(t - delay)^2 / (2 tau^2)) cos(center (t - delay)).
/// Its spectrum is a pair of Gaussians of width 1/tau around +-center.
struct Wavelet {
  double center = 1.0;
  double tau = 1.0;
  double delay = 0.0;

  double value(double t) const;
  /// Past this time |w| < exp(-32) and forcing is treated as finished.
  double support_end() const { return delay + 8.0 * tau; }
  /// Highest angular frequency with spectral weight above exp(-8).
  double max_frequency() const { return center + 4.0 / tau; }
  std::string describe() const;
  /// int w(t) e^{-st} dt over the whole line; differs from the one-sided
  /// transform by the tail before t = 0, below exp(-delay^2 / (2 tau^2)).
  complex laplace(complex s) const;

  /// Centered on [lo, hi] with spectral amplitude `edge_level` at the band
  /// edges, delayed by 5 tau.
  static Wavelet for_band(double lo, double hi, double edge_level = 1e-2);
};

/// usage_error unless center >= 0, tau > 0 and delay >= 0 (all finite).
void validate_wavelet(const Wavelet& w);

/// c(j, q) = int_0^{t_j} w(s) exp(-mu_q (t_j - s)) ds, exact for the piecewise
/// linear interpolant of w on substeps of at most `step`. Times must be
/// nondecreasing and >= 0. The default step keeps the interpolation error
/// near 1e-4 relative.
cmat modal_convolution(const cvec& mu, const Wavelet& w, const std::vector<double>& times, double step = 0.0);

}  // namespace ekrom
