#include "ekrom/wavelet.hpp"

#include "ekrom/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ekrom {

namespace {

// phi1(z) = (1 - e^{-z}) / z and psi(z) = (1 - e^{-z}(1 + z)) / z^2.
void phi_functions(complex z, complex& phi1, complex& psi) {
  if (std::abs(z) < 0.1) {
    complex p = 1.0, term = 1.0;
    complex q = 0.5;
    double fact = 2.0;  // (k + 2)!
    phi1 = 1.0;
    for (int k = 1; k < 12; ++k) {
      term *= -z / static_cast<double>(k + 1);
      phi1 += term;
      fact *= k + 2;
      p *= -z;
      q += p * (static_cast<double>(k + 1) / fact);
    }
    psi = q;
    return;
  }
  const complex e = std::exp(-z);
  phi1 = (1.0 - e) / z;
  psi = (1.0 - e * (1.0 + z)) / (z * z);
}

}  // namespace

double Wavelet::value(double t) const {
  const double x = t - delay;
  return std::exp(-x * x / (2.0 * tau * tau)) * std::cos(center * x);
}

complex Wavelet::laplace(complex s) const {
  const complex a = s - complex(0.0, center);
  const complex b = s + complex(0.0, center);
  const double g = tau * tau / 2.0;
  return std::exp(-s * delay) * tau * std::sqrt(2.0 * std::numbers::pi) * 0.5 * (std::exp(g * a * a) + std::exp(g * b * b));
}

std::string Wavelet::describe() const {
  std::ostringstream s;
  s << "modulated Gaussian: center " << center << ", tau " << tau << ", delay " << delay;
  return s.str();
}

Wavelet Wavelet::for_band(double lo, double hi, double edge_level) {
  if (!(lo >= 0.0 && hi > lo)) throw usage_error("Wavelet::for_band: need 0 <= lo < hi");
  if (!(edge_level > 0.0 && edge_level < 1.0)) throw usage_error("Wavelet::for_band: edge_level must be in (0, 1)");
  Wavelet w;
  w.center = 0.5 * (lo + hi);
  w.tau = std::sqrt(2.0 * std::log(1.0 / edge_level)) / (0.5 * (hi - lo));
  w.delay = 5.0 * w.tau;
  return w;
}

void validate_wavelet(const Wavelet& w) {
  if (!(std::isfinite(w.center) && w.center >= 0.0)) throw usage_error("wavelet center must be finite and >= 0");
  if (!(std::isfinite(w.tau) && w.tau > 0.0)) throw usage_error("wavelet tau must be finite and > 0");
  if (!(std::isfinite(w.delay) && w.delay >= 0.0)) throw usage_error("wavelet delay must be finite and >= 0");
}

cmat modal_convolution(const cvec& mu, const Wavelet& w, const std::vector<double>& times, double step) {
  validate_wavelet(w);
  if (step <= 0.0) step = 0.03 / w.max_frequency();
  const Eigen::Index d = mu.size();
  cmat out(static_cast<Eigen::Index>(times.size()), d);
  cvec y = cvec::Zero(d);
  // per-mode propagators for the current substep length (uniform axes reuse them)
  cvec decay(d), phi1(d), psi(d);
  double cached_h = -1.0;
  double now = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    if (!(t >= now)) throw usage_error("modal_convolution: times must be nondecreasing and >= 0");
    const int substeps = static_cast<int>(std::ceil((t - now) / step));
    if (substeps > 0) {
      const double h = (t - now) / substeps;
      if (std::abs(h - cached_h) > 1e-12 * h) {
        for (Eigen::Index q = 0; q < d; ++q) {
          const complex z = mu[q] * h;
          phi_functions(z, phi1[q], psi[q]);
          decay[q] = std::exp(-z);
        }
        cached_h = h;
      }
      for (int n = 0; n < substeps; ++n) {
        const double t0 = now + n * h;
        const double a = h * w.value(t0);
        const double b = h * w.value(n + 1 == substeps ? t : t0 + h);
        y = decay.cwiseProduct(y) + a * psi + b * (phi1 - psi);
      }
      now = t;
    }
    out.row(static_cast<Eigen::Index>(j)) = y.transpose();
  }
  return out;
}

}  // namespace ekrom
