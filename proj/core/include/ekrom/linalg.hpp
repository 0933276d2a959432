#pragma once

#include "ekrom/grid.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <cstdint>
#include <iosfwd>
#include <memory>

namespace ekrom {

/// Unconjugated pairing <x, y> = y^T M x. Not an inner product: it vanishes on
/// isotropic vectors such as (1, i) with M = I. Evaluated as sum (x_p y_p) m_p
/// so that bilinear(x, y) == bilinear(y, x) bit for bit.
complex bilinear(const cvec& x, const cvec& y, const cvec& m);

/// y = A x
cvec matvec(const StretchedOperator& op, const cvec& x);

/// Per-thread tallies of matvec() and FactorizedOperator::solve() calls; used
/// by the cost accounting in krylov/ and checked against in tests.
struct KernelCounters {
  std::uint64_t matvecs = 0;
  std::uint64_t solves = 0;
};
KernelCounters& kernel_counters();

/// One-time sparse LU of A; solves use one step of iterative refinement.
class FactorizedOperator {
 public:
  struct Stats {
    Eigen::Index nonzeros_l = 0;
    Eigen::Index nonzeros_u = 0;
    double min_pivot = 0.0;
    double max_pivot = 0.0;
  };

  const StretchedOperator& op() const { return *op_; }
  const Stats& stats() const { return stats_; }

  /// x with ||A x - y|| <= 1e-10 ||y||; numerical_error otherwise.
  cvec solve(const cvec& y) const;

 private:
  friend FactorizedOperator factorize(const StretchedOperator& op);
  const StretchedOperator* op_ = nullptr;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
  Stats stats_;
};

/// Throws singular_operator_error (carrying the smallest pivot magnitude) when
/// the LU hits a zero pivot or the pivot ratio is below 1e-14. Shift the
/// operator explicitly if that happens; nothing is regularized here. `op`
/// must outlive the factorization.
FactorizedOperator factorize(const StretchedOperator& op);

/// Eigendecomposition G = X diag(values) X^{-1} of a dense complex matrix,
/// LAPACK zgeev underneath. `condition` is the 1-norm condition estimate of X.
struct SpectralDecomposition {
  cvec values;
  cmat vectors;
  Eigen::PartialPivLU<cmat> inverse;
  double condition = 1.0;

  Eigen::Index order() const { return values.size(); }
  double spectral_radius() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
  cmat reconstruct() const;
  /// X^{-1} v
  cvec coefficients(const cvec& v) const { return inverse.solve(v); }
};

/// Eigenvector matrices with condition estimate above this are treated as
/// defective.
inline constexpr double kDefectiveCondition = 1e13;

SpectralDecomposition eigendecompose(const cmat& g);

/// Principal root: every eigenvalue in the closed right half plane. Eigenvalues
/// on the negative real axis map to +i sqrt(|lambda|).
/// defective_matrix_error when G is defective, naming the eigenvalue with the
/// worst conditioning (a branch-cut eigenvalue is reported first).
cmat principal_sqrt(const cmat& g);
/// Same root, returned in factored form (shares G's eigenvectors).
SpectralDecomposition principal_sqrt(const SpectralDecomposition& g);

/// (B + s I)^{-1} v through a cached eigendecomposition of B. Warns when -s is
/// within 1e-8 (1 + |lambda|) of an eigenvalue.
cvec resolvent_apply(const SpectralDecomposition& b, complex s, const cvec& v);
cvec resolvent_apply(const cmat& b, complex s, const cvec& v);

/// exp(-B t) v for t >= 0 (usage_error otherwise).
cvec exp_action(const SpectralDecomposition& b, double t, const cvec& v);
cvec exp_action(const cmat& b, double t, const cvec& v);

/// Debug dump: "row col re im" per line, 0-based, preceded by "rows cols nnz".
void write_triplets(std::ostream& out, const SparseMatrix& a);
SparseMatrix read_triplets(std::istream& in);

}  // namespace ekrom
