#include "ekrom/errors.hpp"
#include "ekrom/krylov.hpp"
#include "ekrom/oracles.hpp"
#include "ekrom/rom.hpp"
#include "ekrom/wavelet.hpp"

#include "problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace ekrom {
namespace {

// int_0^t exp(-(s - d)^2 / (2 tau^2)) exp(-mu (t - s)) ds for real mu.
double gaussian_convolution(double mu, double tau, double d, double t) {
  const double shift = d + mu * tau * tau;
  const double r = tau * std::sqrt(2.0);
  return std::exp(-mu * (t - d) + 0.5 * mu * mu * tau * tau) * tau * std::sqrt(std::numbers::pi / 2.0) *
         (std::erf((t - shift) / r) - std::erf(-shift / r));
}

TEST(ModalConvolution, GaussianClosedForm) {
  const Wavelet w{0.0, 1.0, 5.0};
  cvec mu(4);
  mu << 0.0, 0.3, 1.0, 2.0;
  std::vector<double> times;
  for (int j = 0; j <= 40; ++j) times.push_back(0.25 * j);
  const cmat c = modal_convolution(mu, w, times, 1e-3);
  for (std::size_t j = 0; j < times.size(); ++j)
    for (Eigen::Index q = 0; q < mu.size(); ++q) {
      const double exact = gaussian_convolution(mu[q].real(), w.tau, w.delay, times[j]);
      EXPECT_NEAR(c(static_cast<Eigen::Index>(j), q).real(), exact, 1e-6) << times[j] << " " << mu[q];
      EXPECT_NEAR(c(static_cast<Eigen::Index>(j), q).imag(), 0.0, 1e-12);
    }
}

TEST(ModalConvolution, OscillatoryModeAgainstQuadrature) {
  const Wavelet w{1.3, 2.0, 9.0};
  cvec mu(2);
  mu << complex(0.05, 1.2), complex(0.4, -2.5);
  const double t = 17.0;
  const cmat c = modal_convolution(mu, w, {t});
  const int n = 200000;
  for (Eigen::Index q = 0; q < mu.size(); ++q) {
    complex sum = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double s = t * j / n;
      sum += (j == 0 || j == n ? 0.5 : 1.0) * w.value(s) * std::exp(-mu[q] * (t - s));
    }
    sum *= t / n;
    EXPECT_LE(std::abs(c(0, q) - sum), 1e-4 * std::abs(sum)) << q;
  }
}

TEST(ModalConvolution, RejectsDecreasingTimes) {
  EXPECT_THROW(modal_convolution(cvec::Ones(1), Wavelet{}, {1.0, 0.5}), usage_error);
  EXPECT_THROW(modal_convolution(cvec::Ones(1), Wavelet{}, {-1.0}), usage_error);
}

TEST(Wavelet, LaplaceTransformAgainstQuadrature) {
  const Wavelet w{0.8, 1.5, 10.0};
  for (complex s : {complex(0.1, 0.0), complex(0.2, 0.7), complex(0.05, -1.1)}) {
    const double lo = w.delay - 15.0 * w.tau, hi = w.delay + 15.0 * w.tau;
    const int n = 200000;
    complex sum = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double t = lo + (hi - lo) * j / n;
      sum += (j == 0 || j == n ? 0.5 : 1.0) * w.value(t) * std::exp(-s * t);
    }
    sum *= (hi - lo) / n;
    EXPECT_LE(std::abs(w.laplace(s) - sum), 1e-9 * std::abs(sum)) << s;
  }
}

TEST(Wavelet, ForBandEdgeLevel) {
  const Wavelet w = Wavelet::for_band(0.25, 0.75, 1e-2);
  EXPECT_DOUBLE_EQ(w.center, 0.5);
  EXPECT_DOUBLE_EQ(w.delay, 5.0 * w.tau);
  const double peak = std::abs(w.laplace(complex(0.0, 0.5)));
  EXPECT_NEAR(std::abs(w.laplace(complex(0.0, 0.25))) / peak, 1e-2, 1e-4);
  EXPECT_NEAR(std::abs(w.laplace(complex(0.0, 0.75))) / peak, 1e-2, 1e-4);
  EXPECT_THROW(Wavelet::for_band(0.5, 0.25), usage_error);
  EXPECT_THROW(Wavelet::for_band(0.1, 0.5, 1.5), usage_error);
}

TEST(Wavelet, Validation) {
  EXPECT_NO_THROW(validate_wavelet(Wavelet{}));
  EXPECT_THROW(validate_wavelet(Wavelet{-1.0, 1.0, 0.0}), usage_error);
  EXPECT_THROW(validate_wavelet(Wavelet{1.0, 0.0, 0.0}), usage_error);
  EXPECT_THROW(validate_wavelet(Wavelet{1.0, 1.0, -2.0}), usage_error);
}

TEST(Wavelet, ScalarModelTraceIsConvolvedSine) {
  const StretchedOperator op = testing::scalar_operator(1.0);
  cvec b(1);
  b[0] = 1.0;
  const ReducedModel model = build_reduced_model(pks_lanczos(op, b, 1), {0});
  const Wavelet w{0.7, 1.0, 6.0};
  const std::vector<double> times = uniform_time_axis(20.0, 41);
  const ResponseSet r = eval_time(model, times, w);
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    const int n = 20000;
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double s = t * k / n;
      sum += (k == 0 || k == n ? 0.5 : 1.0) * w.value(s) * std::sin(t - s);
    }
    sum *= t / n;
    EXPECT_NEAR(r.values(static_cast<Eigen::Index>(j), 0).real(), sum, 2e-4) << t;
  }
}

TEST(Wavelet, DenseAndReducedAgreeOnCompleteBasis) {
  const auto p = testing::box_2d(10, 10, 3, 1.0, 0.5, 1.0);
  const DenseOracle oracle = make_dense_oracle(*p.op);
  const FactorizedOperator fac = factorize(*p.op);
  const int n = static_cast<int>(p.op->size());
  const ReducedModel model = build_reduced_model(eks_orthogonalize(*p.op, fac, p.b, n / 2, 1), p.receivers);
  const Wavelet w = Wavelet::for_band(0.3, 0.9);
  const std::vector<double> times = uniform_time_axis(60.0, 121);
  EXPECT_LE(relative_l2_error(eval_time(model, times, w), dense_time_solution(oracle, p.b, times, p.receivers, w)), 1e-9);
}

}  // namespace
}  // namespace ekrom
