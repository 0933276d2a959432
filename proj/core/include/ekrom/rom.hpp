#pragma once

#include "ekrom/krylov.hpp"
#include "ekrom/linalg.hpp"
#include "ekrom/response.hpp"
#include "ekrom/wavelet.hpp"

#include <optional>
#include <vector>

namespace ekrom {

/// Stabilized reduced-order model of order d built from a Krylov basis.
///
/// With S = D^{1/2} H D^{-1/2} and B_d the principal root of -S, the time trace
///   u(t) = -Re[ c (V D^{-1/2}) B_d^{-1} exp(-B_d t) e_1 ],   c = beta0 delta0^{1/2},
/// and the frequency response
///   u(s) = -1/2 [ c W B_d^{-1} (B_d + s)^{-1} e_1 + conj(c W) conj(B_d)^{-1} (conj(B_d) + s)^{-1} e_1 ]
/// with W = V D^{-1/2}, evaluated in the eigenbasis B_d = X diag(mu) X^{-1}.
/// The scale c makes the model equal the projection of f(A) b exactly when
/// the basis spans the whole space.
struct ReducedModel {
  Eigen::Index d = 0;
  cmat B;                         ///< B_d
  SpectralDecomposition spectrum; ///< of B_d
  complex delta0 = 0.0;
  double beta0 = 0.0;
  complex scale = 0.0;            ///< beta0 * delta0^{1/2}
  cvec weights;                   ///< scale * (X^{-1} e_1) / mu
  std::vector<std::size_t> receivers;
  cmat receiver_rows;             ///< W X restricted to the receivers
  std::optional<cmat> field;      ///< W X on every unknown (keep_basis only)
  Provenance provenance;

  double spectral_radius() const { return spectrum.spectral_radius(); }
  double min_real_eigenvalue() const;
};

/// Builds B_d = sqrt(-S) and the receiver-restricted projection.
/// Warns when a delta lies on the negative real axis (branch of delta^{1/2});
/// defective_matrix_error from the square root is rethrown with context;
/// numerical_error when B_d has an eigenvalue within 1e-14 rho of zero.
ReducedModel build_reduced_model(const KrylovBasis& basis, const std::vector<std::size_t>& receivers,
                                 Provenance provenance = {}, bool keep_basis = false);

/// Real traces at t >= 0 (eta(0) = 1). `receivers` must be among those the
/// model was built for unless it kept the full basis.
ResponseSet eval_time(const ReducedModel& model, const std::vector<double>& times,
                      const std::vector<std::size_t>& receivers);
ResponseSet eval_time(const ReducedModel& model, const std::vector<double>& times);

/// Traces for the source b w(t) instead of the impulsive start: the modal
/// expansion convolved with the wavelet. Times must be nondecreasing.
ResponseSet eval_time(const ReducedModel& model, const std::vector<double>& times,
                      const std::vector<std::size_t>& receivers, const Wavelet& wavelet);
ResponseSet eval_time(const ReducedModel& model, const std::vector<double>& times, const Wavelet& wavelet);

/// Complex samples; warns when -s or -conj(s) comes within 1e-8 (1 + |mu|) of
/// an eigenvalue mu.
ResponseSet eval_freq(const ReducedModel& model, const std::vector<complex>& s_values,
                      const std::vector<std::size_t>& receivers);
ResponseSet eval_freq(const ReducedModel& model, const std::vector<complex>& s_values);

struct Method {
  enum class Kind { pks, eks };
  Kind kind = Kind::pks;
  int i = 0;  ///< EKS ratio
};

struct ErrorCurvePoint {
  int order = 0;  ///< m for PKS, k for EKS
  Eigen::Index d = 0;
  double error = 0.0;
  std::uint64_t matvecs = 0;
  std::uint64_t solves = 0;
  double min_real_eigenvalue = 0.0;
  double spectral_radius = 0.0;
};

struct ErrorCurve {
  Method method;
  std::vector<ErrorCurvePoint> points;
  /// Frequency: max over samples of the receiver-vector relative error.
  /// Time: relative L2 over the whole window.
  std::string error_definition;
};

/// Evaluates every order in `orders` (sorted and deduplicated; each in
/// [1, basis order]) on
/// the leading columns of `basis`. Time-domain oracles are compared with the
/// wavelet response when one is given, else with the impulse response.
ErrorCurve error_curve(const PolynomialBasis& basis, std::vector<int> orders, const ResponseSet& oracle,
                       const Provenance& base = {}, const std::optional<Wavelet>& wavelet = std::nullopt);
ErrorCurve error_curve(const ExtendedBasis& basis, std::vector<int> orders, const ResponseSet& oracle,
                       const Provenance& base = {}, const std::optional<Wavelet>& wavelet = std::nullopt);

/// Builds one basis at the largest requested order and evaluates every order
/// on its leading columns. Costs are those of a standalone build of each
/// order. `oracle` fixes the samples and receivers.
ErrorCurve rom_error_curve(const StretchedOperator& op, const FactorizedOperator* fac, const cvec& b,
                           const Method& method, std::vector<int> orders, const ResponseSet& oracle,
                           const KrylovOptions& options = {}, const Provenance& base = {},
                           const std::optional<Wavelet>& wavelet = std::nullopt);

}  // namespace ekrom
