#pragma once

// Ground-truth generators. Nothing here calls into krylov/ or rom/: the
// oracles use the grid assembly, the sparse factorization and the dense
// eigendecomposition only.

#include "ekrom/grid.hpp"
#include "ekrom/krylov.hpp"
#include "ekrom/linalg.hpp"
#include "ekrom/response.hpp"
#include "ekrom/wavelet.hpp"

#include <optional>
#include <vector>

namespace ekrom {

inline constexpr std::size_t kDefaultDenseCap = 5000;

/// Dense A, its spectrum, and B_N = sqrt(-A) (principal) in factored form.
struct DenseOracle {
  cmat A;
  cvec m;
  SpectralDecomposition root;

  Eigen::Index size() const { return A.rows(); }
  cmat B() const { return root.reconstruct(); }
};

/// usage_error when N exceeds `cap`.
DenseOracle make_dense_oracle(const StretchedOperator& op, std::size_t cap = kDefaultDenseCap);

/// u(t) = -Re[B_N^{-1} exp(-B_N t)] b at the receivers (eta(0) = 1).
ResponseSet dense_time_solution(const DenseOracle& oracle, const cvec& b, const std::vector<double>& times,
                                const std::vector<std::size_t>& receivers);
/// The same for the source b w(t): modal expansion convolved with the wavelet.
ResponseSet dense_time_solution(const DenseOracle& oracle, const cvec& b, const std::vector<double>& times,
                                const std::vector<std::size_t>& receivers, const Wavelet& wavelet);
/// u(s) = -1/2 [B^{-1}(B + s)^{-1} + conj(B)^{-1}(conj(B) + s)^{-1}] b at the receivers.
ResponseSet dense_freq_solution(const DenseOracle& oracle, const cvec& b, const std::vector<complex>& s_values,
                                const std::vector<std::size_t>& receivers);

/// (A + s^2 I)^{-1} b by a fresh sparse LU; singular_operator_error near a pole.
cvec direct_freq_solve(const StretchedOperator& op, const cvec& b, complex s);
ResponseSet direct_freq_response(const StretchedOperator& op, const cvec& b, const std::vector<complex>& s_values,
                                 const std::vector<std::size_t>& receivers);

/// Explicit power sequence of K_{k,ki+1} in the column order of
/// eks_orthogonalize, modified Gram-Schmidt (two passes) in the bilinear form,
/// H = D^{-1} V^T M A V formed densely; residual = last column of A V - V H.
ExtendedBasis brute_force_eks_basis(const StretchedOperator& op, const FactorizedOperator& fac, const cvec& b,
                                    int k, int i);

/// 0.99 times the stability limit of leapfrog for the unstretched 5-point
/// (3-point) operator with the medium's largest speed.
double courant_limit(const GridSpec& grid, const MediumModel& medium);

struct LeapfrogResult {
  ResponseSet traces;          ///< t = n dt, n = 0..steps
  /// max |E_n - E_0| / E_0 of the conserved discrete energy; with a wavelet,
  /// measured from the end of its support (NaN if the run stops earlier)
  double energy_drift = 0.0;
  double courant_limit = 0.0;
};

/// u'' = -A u, u(0) = 0, u'(0) = b on the real (unstretched) operator of `grid`
/// with Dirichlet walls; PML cells in `grid` are treated as ordinary real cells.
/// With a wavelet: u'' = -A u + w(t) b from rest. usage_error when dt exceeds
/// courant_limit().
LeapfrogResult leapfrog_reference(const GridSpec& grid, const MediumModel& medium, const cvec& b, double dt,
                                  int steps, const std::vector<std::size_t>& receivers,
                                  const std::optional<Wavelet>& wavelet = std::nullopt);

/// s_j = gamma + i j d_omega, j = 0..count-1.
std::vector<complex> laplace_contour(double gamma, double d_omega, int count);

struct LaplaceInversion {
  ResponseSet traces;
  /// max |u_full - u_half| / max |u_full| between the full contour and every
  /// other sample of it.
  double error_estimate = 0.0;
};

/// Trapezoid rule for u(t) = e^{gamma t}/pi Re int_0^inf U(gamma + i w) e^{i w t} dw.
/// The samples must come from laplace_contour(). Warns when the estimate
/// exceeds `tolerance`.
LaplaceInversion laplace_inversion_check(const ResponseSet& freq_samples, const std::vector<double>& times,
                                         double tolerance = 1e-3);

}  // namespace ekrom
