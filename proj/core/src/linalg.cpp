#include "ekrom/linalg.hpp"

#include "ekrom/errors.hpp"

#include <lapacke.h>

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace ekrom {

complex bilinear(const cvec& x, const cvec& y, const cvec& m) {
  if (x.size() != y.size() || x.size() != m.size())
    throw usage_error("bilinear: vector lengths differ");
  complex acc = 0.0;
  for (Eigen::Index p = 0; p < x.size(); ++p) acc += (x[p] * y[p]) * m[p];
  return acc;
}

KernelCounters& kernel_counters() {
  thread_local KernelCounters counters;
  return counters;
}

cvec matvec(const StretchedOperator& op, const cvec& x) {
  if (static_cast<std::size_t>(x.size()) != op.size()) throw usage_error("matvec: length mismatch");
  ++kernel_counters().matvecs;
  return op.matrix() * x;
}

FactorizedOperator factorize(const StretchedOperator& op) {
  FactorizedOperator f;
  f.op_ = &op;
  f.lu_ = std::make_shared<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
  auto& lu = *f.lu_;
  lu.analyzePattern(op.matrix());
  lu.factorize(op.matrix());
  if (lu.info() != Eigen::Success)
    throw singular_operator_error("sparse LU failed: " + lu.lastErrorMessage(), 0.0);

  // U's diagonal sits in the supernodal L storage.
  const auto& supernodal = lu.matrixL().m_mapL;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  Eigen::Index nnz_l = 0;
  for (Eigen::Index j = 0; j < lu.cols(); ++j) {
    for (typename std::decay_t<decltype(supernodal)>::InnerIterator it(supernodal, j); it; ++it) {
      ++nnz_l;
      if (it.row() == j) {
        const double a = std::abs(it.value());
        lo = std::min(lo, a);
        hi = std::max(hi, a);
      }
    }
  }
  f.stats_.nonzeros_l = nnz_l;
  f.stats_.nonzeros_u = lu.nnzU();
  f.stats_.min_pivot = lo;
  f.stats_.max_pivot = hi;
  if (!(lo > 1e-14 * hi)) {
    std::ostringstream msg;
    msg << "operator is numerically singular: smallest pivot " << lo << " vs largest " << hi;
    throw singular_operator_error(msg.str(), lo);
  }
  return f;
}

cvec FactorizedOperator::solve(const cvec& y) const {
  if (!lu_) throw usage_error("solve on an empty factorization");
  if (static_cast<std::size_t>(y.size()) != op_->size()) throw usage_error("solve: length mismatch");
  ++kernel_counters().solves;
  cvec x = lu_->solve(y);
  const cvec r = y - op_->matrix() * x;
  x += lu_->solve(r);
  const double ynorm = y.norm();
  const double res = (y - op_->matrix() * x).norm();
  if (!(res <= 1e-10 * ynorm) && ynorm > 0.0) {
    std::ostringstream msg;
    msg << "sparse solve did not reach 1e-10 relative residual (got " << res / ynorm << ")";
    throw numerical_error(msg.str());
  }
  return x;
}

cmat SpectralDecomposition::reconstruct() const {
  return vectors * values.asDiagonal() * inverse.inverse();
}

SpectralDecomposition eigendecompose(const cmat& g) {
  if (g.rows() != g.cols()) throw usage_error("eigendecompose: matrix is not square");
  if (!g.allFinite()) throw numerical_error("eigendecompose: non-finite entries");
  const auto n = static_cast<lapack_int>(g.rows());
  SpectralDecomposition d;
  if (n == 0) return d;
  cmat work = g;
  d.values.resize(n);
  d.vectors.resize(n, n);
  complex dummy;
  auto raw = [](complex* p) { return reinterpret_cast<lapack_complex_double*>(p); };
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, raw(work.data()), n, raw(d.values.data()),
                                        raw(&dummy), 1, raw(d.vectors.data()), n);
  if (info != 0) throw numerical_error("zgeev failed with info = " + std::to_string(info));
  d.inverse.compute(d.vectors);
  const double rc = d.inverse.rcond();
  d.condition = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  return d;
}

namespace {

complex principal_root(complex lambda) {
  // sqrt(-a - 0i) would land on -i sqrt(a); the principal branch wants +i sqrt(a).
  if (lambda.imag() == 0.0) lambda = complex(lambda.real(), 0.0);
  return std::sqrt(lambda);
}

bool on_branch_cut(complex lambda, double scale) {
  return lambda.real() < 0.0 && std::abs(lambda.imag()) <= 1e-14 * std::max(scale, std::abs(lambda));
}

void require_diagonalizable(const SpectralDecomposition& g) {
  if (g.condition <= kDefectiveCondition) return;
  const double scale = g.spectral_radius();
  for (Eigen::Index j = 0; j < g.order(); ++j) {
    if (on_branch_cut(g.values[j], scale)) {
      std::ostringstream msg;
      msg << "eigenvalue " << g.values[j]
          << " lies on the square-root branch cut of a defective matrix (eigenvector condition "
          << g.condition << ")";
      throw defective_matrix_error(msg.str(), g.values[j], g.condition);
    }
  }
  // Report the eigenvalue whose left/right eigenvector pair is worst conditioned.
  const cmat left = g.inverse.inverse();
  Eigen::Index worst = 0;
  double worst_kappa = 0.0;
  for (Eigen::Index j = 0; j < g.order(); ++j) {
    const double kappa = left.row(j).norm() * g.vectors.col(j).norm();
    if (kappa > worst_kappa) {
      worst_kappa = kappa;
      worst = j;
    }
  }
  std::ostringstream msg;
  msg << "matrix is defective to working precision (eigenvector condition " << g.condition
      << "); worst eigenvalue " << g.values[worst];
  throw defective_matrix_error(msg.str(), g.values[worst], g.condition);
}

}  // namespace

SpectralDecomposition principal_sqrt(const SpectralDecomposition& g) {
  require_diagonalizable(g);
  SpectralDecomposition s;
  s.values = g.values.unaryExpr(&principal_root);
  s.vectors = g.vectors;
  s.inverse = g.inverse;
  s.condition = g.condition;
  return s;
}

cmat principal_sqrt(const cmat& g) {
  if (g.rows() == 1) {
    cmat s(1, 1);
    s(0, 0) = principal_root(g(0, 0));
    return s;
  }
  return principal_sqrt(eigendecompose(g)).reconstruct();
}

cvec resolvent_apply(const SpectralDecomposition& b, complex s, const cvec& v) {
  if (v.size() != b.order()) throw usage_error("resolvent_apply: length mismatch");
  cvec c = b.coefficients(v);
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const complex shifted = b.values[j] + s;
    if (std::abs(shifted) < 1e-8 * (1.0 + std::abs(b.values[j]))) {
      std::ostringstream msg;
      msg << "shift " << s << " is within " << std::abs(shifted) << " of pole " << -b.values[j]
          << "; condition estimate " << b.condition * (1.0 + std::abs(b.values[j])) / std::abs(shifted);
      warn(msg.str());
    }
    c[j] /= shifted;
  }
  return b.vectors * c;
}

cvec resolvent_apply(const cmat& b, complex s, const cvec& v) {
  return resolvent_apply(eigendecompose(b), s, v);
}

cvec exp_action(const SpectralDecomposition& b, double t, const cvec& v) {
  if (!(t >= 0.0)) throw usage_error("exp_action: t must be >= 0");
  if (v.size() != b.order()) throw usage_error("exp_action: length mismatch");
  if (t == 0.0) return v;
  cvec c = b.coefficients(v);
  for (Eigen::Index j = 0; j < c.size(); ++j) c[j] *= std::exp(-b.values[j] * t);
  return b.vectors * c;
}

cvec exp_action(const cmat& b, double t, const cvec& v) {
  if (!(t >= 0.0)) throw usage_error("exp_action: t must be >= 0");
  if (t == 0.0) return v;
  return exp_action(eigendecompose(b), t, v);
}

void write_triplets(std::ostream& out, const SparseMatrix& a) {
  out.precision(17);
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

SparseMatrix read_triplets(std::istream& in) {
  Eigen::Index rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz)) throw usage_error("triplet stream: bad header");
  std::vector<Eigen::Triplet<complex, int>> t;
  t.reserve(static_cast<std::size_t>(nnz));
  for (Eigen::Index k = 0; k < nnz; ++k) {
    int r, c;
    double re, im;
    if (!(in >> r >> c >> re >> im)) throw usage_error("triplet stream: truncated");
    t.emplace_back(r, c, complex(re, im));
  }
  SparseMatrix a(static_cast<int>(rows), static_cast<int>(cols));
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

}  // namespace ekrom
