#pragma once

#include "ekrom/grid.hpp"
#include "ekrom/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ekrom {

struct KrylovCost {
  std::uint64_t matvecs = 0;
  std::uint64_t solves = 0;
};

struct KrylovOptions {
  /// One extra full pass of bilinear Gram-Schmidt against every stored vector.
  bool reorthogonalize = true;
  /// |<v, v>| below this times max |m| (for Euclidean-unit v) is a serious
  /// breakdown.
  double breakdown_tolerance = 1e-12;
};

/// A V = V H + z e_d^T with V^T M V = D = diag(delta) and D H = V^T M A V.
/// Columns of V have unit Euclidean norm; b = beta0 * V e_1.
struct KrylovBasis {
  cmat V;
  cmat H;
  cvec delta;
  cvec residual;
  double beta0 = 0.0;
  int bandwidth = 1;
  bool reorthogonalized = true;
  KrylovCost cost;

  Eigen::Index order() const { return V.cols(); }
  complex delta0() const { return delta[0]; }
};

/// Polynomial Krylov basis of span{b, A b, ..., A^{m-1} b}; H tridiagonal.
struct PolynomialBasis : KrylovBasis {
  int m = 0;
};

/// Basis of the extended space K_{k,ki+1} = span{A^{-k+1} b, ..., b, ..., A^{ki} b},
/// columns ordered v_0, v_1..v_i, v_-1, v_{i+1}..v_{2i}, v_-2, ...
/// H is pentadiagonal with a block-tridiagonal structure of block size i + 1.
struct ExtendedBasis : KrylovBasis {
  int k = 0;
  int i = 0;
  /// Signed power label of each column (0, 1, ..., i, -1, i+1, ...).
  std::vector<int> powers;
  /// z = h_inverse * v_inverse + h_forward * v_forward, with v_inverse = v_{-k}
  /// and v_forward = v_{ik+1}.
  complex h_inverse = 0.0;
  complex h_forward = 0.0;
  cvec v_inverse;
  cvec v_forward;
};

/// Complex-symmetric Lanczos in the M-bilinear form. m matvecs.
/// usage_error for b = 0 or m < 1; breakdown_error on an isotropic vector or an
/// invariant subspace reached before m columns.
PolynomialBasis pks_lanczos(const StretchedOperator& op, const cvec& b, int m,
                            const KrylovOptions& options = {});

/// Extended Krylov orthogonalization for K_{k,ki+1}(A, b): k sparse solves and
/// k*i + 1 matvecs (the last one yields the decomposition residual).
///
/// The forward and inverse steps follow the classical short recurrence (each
/// new vector is orthogonalized against the two or i + 1 vectors the
/// recurrence names); with options.reorthogonalize a second pass against all
/// stored vectors follows. The H columns of the vectors v_{i(p+1)} that end a
/// block are never formed by a matvec: their entries come from the symmetry of
/// D H and from the inverse-step relation A (A^{-1} v) = v.
ExtendedBasis eks_orthogonalize(const StretchedOperator& op, const FactorizedOperator& fac,
                                const cvec& b, int k, int i, const KrylovOptions& options = {});

/// Nested truncations: the basis a shorter run of the same recurrence yields.
PolynomialBasis leading(const PolynomialBasis& basis, int m);
ExtendedBasis leading(const ExtendedBasis& basis, int k);

struct DecompositionDiagnostics {
  double residual = 0.0;         ///< ||A V - V H - z e_d^T||_F / (||A||_inf ||V||_F)
  double orthogonality = 0.0;    ///< max_{p != q} |(V^T M V)_pq| / max |delta|
  double delta_mismatch = 0.0;   ///< max |diag(V^T M V) - delta| / max |delta|
  double norm_defect = 0.0;      ///< max | ||v_j|| - 1 |
  double band_violation = 0.0;   ///< max |H_pq| beyond the bandwidth / ||H||_inf
  double projection = 0.0;       ///< max |D H - V^T M A V| / (||A||_inf max |delta|)

  bool within(double residual_tol, double orthogonality_tol, double band_tol) const {
    return residual <= residual_tol && orthogonality <= orthogonality_tol && band_violation <= band_tol &&
           norm_defect <= residual_tol;
  }
};

/// Pure diagnostic; uses the sparse matrix directly so kernel counters are
/// untouched.
DecompositionDiagnostics check_decomposition(const KrylovBasis& basis, const StretchedOperator& op);

/// Binary checkpoint, native-endian:
///   "EKROMKB1" | u32 kind (0 polynomial, 1 extended) | i64 N | i64 d | i32 k-or-m | i32 i
///   | f64 beta0 | i32 bandwidth | i32 reorthogonalized | u64 matvecs | u64 solves
///   | V (N*d) | H (d*d) | delta (d) | residual (N)          -- complex as (re, im) f64 pairs, column major
///   | extended only: i32 powers[d] | h_inverse | h_forward | v_inverse (N) | v_forward (N)
void save_basis(std::ostream& out, const PolynomialBasis& basis);
void save_basis(std::ostream& out, const ExtendedBasis& basis);
PolynomialBasis load_polynomial_basis(std::istream& in);
ExtendedBasis load_extended_basis(std::istream& in);

}  // namespace ekrom
