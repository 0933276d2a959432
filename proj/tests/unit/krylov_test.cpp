#include "ekrom/errors.hpp"
#include "ekrom/krylov.hpp"
#include "ekrom/oracles.hpp"

#include "problems.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace ekrom {
namespace {

using testing::dense_operator;

// Largest distance of a unit-normalized column of `k` from span(v).
double span_gap(const cmat& v, const cmat& k) {
  const Eigen::HouseholderQR<cmat> qr(v);
  const cmat q = qr.householderQ() * cmat::Identity(v.rows(), v.cols());
  double worst = 0.0;
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    const cvec c = k.col(j).normalized();
    worst = std::max(worst, (c - q * (q.adjoint() * c)).norm());
  }
  return worst;
}

Eigen::Index numerical_rank(const cmat& v, double tol) {
  Eigen::ColPivHouseholderQR<cmat> qr(v);
  qr.setThreshold(tol);
  return qr.rank();
}

// Power sequence of the extended space, columns normalized as they are built.
cmat power_sequence(const StretchedOperator& op, const FactorizedOperator& fac, const cvec& b, int k, int i) {
  cmat out(b.size(), static_cast<Eigen::Index>(k) * (i + 1));
  Eigen::Index col = 0;
  cvec x = b.normalized();
  out.col(col++) = x;
  for (int j = 0; j < k * i; ++j) {
    x = (op.matrix() * x).normalized();
    out.col(col++) = x;
  }
  x = b.normalized();
  for (int j = 1; j < k; ++j) {
    x = fac.solve(x).normalized();
    out.col(col++) = x;
  }
  return out;
}

TEST(Pks, FirstStep) {
  const auto p = testing::box_2d(10, 10, 3, 1.0, 0.5, 1.0);
  const PolynomialBasis basis = pks_lanczos(*p.op, p.b, 1);
  ASSERT_EQ(basis.order(), 1);
  const cvec v0 = p.b / p.b.norm();
  EXPECT_LE((basis.V.col(0) - v0).norm(), 1e-15);
  const cvec& m = p.op->symmetrizer();
  const complex delta = bilinear(v0, v0, m);
  const complex h = bilinear(cvec(p.op->matrix() * v0), v0, m) / delta;
  EXPECT_LE(std::abs(basis.H(0, 0) - h), 1e-14 * std::abs(h));
  EXPECT_LE(std::abs(basis.delta[0] - delta), 1e-14 * std::abs(delta));
  EXPECT_NEAR(basis.beta0, p.b.norm(), 1e-14 * p.b.norm());
}

TEST(Pks, RealSymmetricCaseIsClassicalLanczos) {
  const auto p = testing::line_1d(100, 0);
  const int m = 12;
  const PolynomialBasis basis = pks_lanczos(*p.op, p.b, m);

  // textbook Lanczos with real arithmetic and full reorthogonalization
  const Eigen::MatrixXd a = cmat(p.op->matrix()).real();
  Eigen::MatrixXd q(100, m);
  Eigen::VectorXd alpha(m), beta(m);
  q.col(0) = p.b.real().normalized();
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd w = a * q.col(j);
    alpha[j] = q.col(j).dot(w);
    w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
    w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
    beta[j] = w.norm();
    if (j + 1 < m) q.col(j + 1) = w / beta[j];
  }

  EXPECT_LE(basis.H.imag().cwiseAbs().maxCoeff(), 1e-14);
  for (int j = 0; j < m; ++j) {
    EXPECT_NEAR(basis.H(j, j).real(), alpha[j], 1e-12) << j;
    if (j + 1 < m) {
      EXPECT_NEAR(std::abs(basis.H(j + 1, j)), beta[j], 1e-12) << j;
      EXPECT_NEAR(std::abs(basis.H(j, j + 1)), beta[j], 1e-12) << j;
    }
    EXPECT_NEAR(std::abs(basis.V.col(j).dot(q.col(j).cast<complex>())), 1.0, 1e-12) << j;
  }
}

TEST(Pks, SpansPowerSequence) {
  const auto p = testing::line_1d(180, 10, 1.0, 1.0, 0.5);
  ASSERT_EQ(p.op->size(), 200u);
  const int m = 10;
  const PolynomialBasis basis = pks_lanczos(*p.op, p.b, m);
  cmat k(200, m);
  cvec x = p.b.normalized();
  for (int j = 0; j < m; ++j) {
    k.col(j) = x;
    x = (p.op->matrix() * x).normalized();
  }
  EXPECT_EQ(numerical_rank(basis.V, 1e-10), m);
  cmat both(200, 2 * m);
  both << basis.V, k;
  EXPECT_EQ(numerical_rank(both, 1e-8), m);
  EXPECT_LE(span_gap(basis.V, k), 1e-9);
}

TEST(Pks, Errors) {
  const auto p = testing::line_1d(20, 2, 1.0, 1.0, 0.5);
  EXPECT_THROW(pks_lanczos(*p.op, cvec::Zero(24), 4), usage_error);
  EXPECT_THROW(pks_lanczos(*p.op, p.b, 0), usage_error);
  EXPECT_THROW(pks_lanczos(*p.op, cvec::Ones(5), 2), usage_error);
}

TEST(Pks, IsotropicStartBreaksDown) {
  cmat a(2, 2);
  a << 1, 0, 0, 2;
  const StretchedOperator op = dense_operator(a, cvec::Ones(2));
  cvec b(2);
  b << 1.0, complex(0.0, 1.0);
  try {
    pks_lanczos(op, b, 2);
    FAIL() << "expected breakdown_error";
  } catch (const breakdown_error& e) {
    EXPECT_EQ(e.step(), 0u);
    EXPECT_LT(std::abs(e.delta()), 1e-12);
  }
}

TEST(Pks, InvariantSubspaceBreaksDown) {
  const StretchedOperator op = dense_operator(cmat::Identity(3, 3), cvec::Ones(3));
  try {
    pks_lanczos(op, cvec::Ones(3), 2);
    FAIL() << "expected breakdown_error";
  } catch (const breakdown_error& e) {
    EXPECT_EQ(e.step(), 1u);
    EXPECT_EQ(e.prefix().cols(), 1);
  }
}

TEST(Eks, TwoByTwoHandCase) {
  cmat a = cmat::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 4.0;
  const StretchedOperator op = dense_operator(a, cvec::Ones(2));
  const FactorizedOperator fac = factorize(op);
  const cvec b = cvec::Ones(2) / std::sqrt(2.0);
  const ExtendedBasis basis = eks_orthogonalize(op, fac, b, 1, 1);
  ASSERT_EQ(basis.order(), 2);
  const cmat gram = basis.V.transpose() * basis.V;
  EXPECT_LE(std::abs(gram(0, 1)), 1e-14);
  EXPECT_NEAR(std::abs(basis.V(0, 1)), std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(std::abs(basis.V(1, 1)), std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(basis.H(0, 0).real(), 2.5, 1e-14);
  EXPECT_NEAR(basis.H(1, 1).real(), 2.5, 1e-14);
  EXPECT_NEAR(std::abs(basis.H(0, 1)), 1.5, 1e-14);
  EXPECT_LT(check_decomposition(basis, op).residual, 1e-12);
}

TEST(Eks, RealSymmetricProjection) {
  const auto p = testing::line_1d(100, 0);
  const FactorizedOperator fac = factorize(*p.op);
  const ExtendedBasis basis = eks_orthogonalize(*p.op, fac, p.b, 4, 3);
  ASSERT_EQ(basis.order(), 16);
  const cmat v = basis.V;
  const cmat projection = v.transpose() * (cmat(p.op->matrix()) * v);
  const cmat dh = basis.delta.asDiagonal() * basis.H;
  EXPECT_LE((dh - projection).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index r = 0; r < 16; ++r)
    for (Eigen::Index c = 0; c < 16; ++c)
      if (std::abs(r - c) > 2) EXPECT_EQ(basis.H(r, c), complex(0.0)) << r << "," << c;
  EXPECT_LE(basis.H.imag().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Eks, SpansExtendedPowerSequence) {
  const auto p = testing::line_1d(180, 10, 1.0, 1.0, 0.5);
  const FactorizedOperator fac = factorize(*p.op);
  const int k = 3, i = 2;
  const ExtendedBasis basis = eks_orthogonalize(*p.op, fac, p.b, k, i);
  const cmat powers = power_sequence(*p.op, fac, p.b, k, i);
  const Eigen::Index d = basis.order();
  ASSERT_EQ(d, k * (i + 1));
  EXPECT_EQ(numerical_rank(basis.V, 1e-10), d);
  cmat both(basis.V.rows(), 2 * d);
  both << basis.V, powers;
  EXPECT_EQ(numerical_rank(both, 1e-8), d);
  EXPECT_LE(span_gap(basis.V, powers), 1e-9);
  EXPECT_LE(span_gap(powers, basis.V), 1e-9);
  EXPECT_EQ(basis.powers, (std::vector<int>{0, 1, 2, -1, 3, 4, -2, 5, 6}));
}

TEST(Eks, Errors) {
  const auto p = testing::line_1d(20, 2, 1.0, 1.0, 0.5);
  const FactorizedOperator fac = factorize(*p.op);
  EXPECT_THROW(eks_orthogonalize(*p.op, fac, cvec::Zero(24), 2, 1), usage_error);
  EXPECT_THROW(eks_orthogonalize(*p.op, fac, p.b, 0, 1), usage_error);
  EXPECT_THROW(eks_orthogonalize(*p.op, fac, p.b, 2, 0), usage_error);
}

TEST(Eks, IsotropicStartBreaksDown) {
  cmat a = cmat::Zero(3, 3);
  a.diagonal() << 1.0, 2.0, 3.0;
  const StretchedOperator op = dense_operator(a, cvec::Ones(3));
  const FactorizedOperator fac = factorize(op);
  cvec b(3);
  b << 1.0, complex(0.0, 1.0), 0.0;
  EXPECT_THROW(eks_orthogonalize(op, fac, b, 1, 1), breakdown_error);
}

TEST(Eks, CostMatchesKernelCounters) {
  const auto p = testing::box_2d(20, 16, 4, 1.0, 0.5, 1.0);
  const FactorizedOperator fac = factorize(*p.op);
  for (int i : {1, 3, 5, 7}) {
    const KernelCounters before = kernel_counters();
    const ExtendedBasis basis = eks_orthogonalize(*p.op, fac, p.b, 4, i);
    const KernelCounters after = kernel_counters();
    EXPECT_EQ(basis.cost.matvecs, after.matvecs - before.matvecs) << i;
    EXPECT_EQ(basis.cost.solves, after.solves - before.solves) << i;
    EXPECT_EQ(basis.cost.solves, 4u) << i;
    EXPECT_EQ(basis.cost.matvecs, static_cast<std::uint64_t>(4 * i + 1)) << i;
  }
  const KernelCounters before = kernel_counters();
  const PolynomialBasis pks = pks_lanczos(*p.op, p.b, 30);
  EXPECT_EQ(pks.cost.matvecs, kernel_counters().matvecs - before.matvecs);
  EXPECT_EQ(pks.cost.matvecs, 30u);
  EXPECT_EQ(pks.cost.solves, 0u);
}

TEST(Eks, Deterministic) {
  const auto p = testing::box_2d(20, 16, 4, 1.0, 0.5, 1.0);
  const FactorizedOperator fac = factorize(*p.op);
  const ExtendedBasis a = eks_orthogonalize(*p.op, fac, p.b, 6, 3);
  const ExtendedBasis b = eks_orthogonalize(*p.op, fac, p.b, 6, 3);
  EXPECT_EQ(a.V, b.V);
  EXPECT_EQ(a.H, b.H);
  EXPECT_EQ(a.delta, b.delta);
}

TEST(Eks, LeadingMatchesShorterRun) {
  const auto p = testing::box_2d(20, 16, 4, 1.0, 0.5, 1.0);
  const FactorizedOperator fac = factorize(*p.op);
  const ExtendedBasis full = eks_orthogonalize(*p.op, fac, p.b, 6, 2);
  const ExtendedBasis shorter = eks_orthogonalize(*p.op, fac, p.b, 3, 2);
  const ExtendedBasis cut = leading(full, 3);
  ASSERT_EQ(cut.order(), shorter.order());
  EXPECT_LE((cut.V - shorter.V).norm(), 1e-12);
  EXPECT_LE((cut.H - shorter.H).norm(), 1e-12 * shorter.H.norm());
  EXPECT_LE((cut.residual - shorter.residual).norm(), 1e-10 * (1.0 + shorter.residual.norm()));
  EXPECT_EQ(cut.cost.solves, shorter.cost.solves);
  EXPECT_EQ(cut.cost.matvecs, shorter.cost.matvecs);

  const PolynomialBasis pfull = pks_lanczos(*p.op, p.b, 40);
  const PolynomialBasis pshort = pks_lanczos(*p.op, p.b, 25);
  const PolynomialBasis pcut = leading(pfull, 25);
  EXPECT_LE((pcut.V - pshort.V).norm(), 1e-12);
  EXPECT_LE((pcut.H - pshort.H).norm(), 1e-12 * pshort.H.norm());
  EXPECT_LE((pcut.residual - pshort.residual).norm(), 1e-10 * (1.0 + pshort.residual.norm()));
}

TEST(CheckDecomposition, DeskBasisIsClean) {
  const auto p = testing::desk_2d();
  const FactorizedOperator fac = factorize(*p.op);
  const ExtendedBasis eks = eks_orthogonalize(*p.op, fac, p.b, 6, 3);
  const DecompositionDiagnostics d = check_decomposition(eks, *p.op);
  EXPECT_LE(d.residual, 1e-10);
  EXPECT_LE(d.orthogonality, 1e-10);
  EXPECT_LE(d.band_violation, 1e-10);
  EXPECT_LE(d.norm_defect, 1e-10);
  EXPECT_LE(d.delta_mismatch, 1e-10);
  EXPECT_LE(d.projection, 1e-10);
  const PolynomialBasis pks = pks_lanczos(*p.op, p.b, 40);
  EXPECT_TRUE(check_decomposition(pks, *p.op).within(1e-10, 1e-10, 1e-10));
}

TEST(CheckDecomposition, DetectsTampering) {
  const auto p = testing::line_1d(60, 6, 1.0, 1.0, 0.5);
  const FactorizedOperator fac = factorize(*p.op);
  ExtendedBasis basis = eks_orthogonalize(*p.op, fac, p.b, 3, 1);
  ASSERT_LE(check_decomposition(basis, *p.op).residual, 1e-12);
  basis.H(1, 1) += 1e-3 * basis.H.cwiseAbs().rowwise().sum().maxCoeff();
  EXPECT_GE(check_decomposition(basis, *p.op).residual, 1e-4);
}

TEST(CheckDecomposition, RealPathMatchesAssembledPath) {
  const auto p = testing::line_1d(80, 0);
  const StretchedOperator copy = StretchedOperator::from_matrices(p.op->matrix(), p.op->symmetrizer());
  const FactorizedOperator fa = factorize(*p.op), fb = factorize(copy);
  const DecompositionDiagnostics a = check_decomposition(eks_orthogonalize(*p.op, fa, p.b, 4, 2), *p.op);
  const DecompositionDiagnostics b = check_decomposition(eks_orthogonalize(copy, fb, p.b, 4, 2), copy);
  EXPECT_NEAR(a.residual, b.residual, 1e-12);
  EXPECT_NEAR(a.orthogonality, b.orthogonality, 1e-12);
  EXPECT_NEAR(a.band_violation, b.band_violation, 1e-12);
}

TEST(Checkpoint, RoundTrip) {
  const auto p = testing::box_2d(12, 10, 3, 1.0, 0.5, 1.0);
  const FactorizedOperator fac = factorize(*p.op);
  const ExtendedBasis eks = eks_orthogonalize(*p.op, fac, p.b, 4, 2);
  std::stringstream io;
  save_basis(io, eks);
  const ExtendedBasis back = load_extended_basis(io);
  EXPECT_EQ(back.V, eks.V);
  EXPECT_EQ(back.H, eks.H);
  EXPECT_EQ(back.delta, eks.delta);
  EXPECT_EQ(back.residual, eks.residual);
  EXPECT_EQ(back.powers, eks.powers);
  EXPECT_EQ(back.k, eks.k);
  EXPECT_EQ(back.i, eks.i);
  EXPECT_EQ(back.beta0, eks.beta0);
  EXPECT_EQ(back.h_forward, eks.h_forward);
  EXPECT_EQ(back.v_inverse, eks.v_inverse);
  EXPECT_EQ(back.cost.matvecs, eks.cost.matvecs);

  const PolynomialBasis pks = pks_lanczos(*p.op, p.b, 15);
  std::stringstream io2;
  save_basis(io2, pks);
  const PolynomialBasis pback = load_polynomial_basis(io2);
  EXPECT_EQ(pback.V, pks.V);
  EXPECT_EQ(pback.H, pks.H);
  EXPECT_EQ(pback.m, pks.m);

  std::stringstream wrong;
  save_basis(wrong, pks);
  EXPECT_ANY_THROW(load_extended_basis(wrong));
  std::stringstream garbage("not a checkpoint");
  EXPECT_ANY_THROW(load_polynomial_basis(garbage));
}

TEST(BruteForce, ColumnsAlignWithRecurrence) {
  const auto p = testing::line_1d(180, 10, 1.0, 1.0, 0.5);
  const FactorizedOperator fac = factorize(*p.op);
  const ExtendedBasis fast = eks_orthogonalize(*p.op, fac, p.b, 3, 2);
  const ExtendedBasis slow = brute_force_eks_basis(*p.op, fac, p.b, 3, 2);
  ASSERT_EQ(fast.order(), slow.order());
  for (Eigen::Index j = 0; j < fast.order(); ++j) {
    const complex a = slow.V.col(j).dot(fast.V.col(j));
    EXPECT_NEAR(std::abs(a), 1.0, 1e-8) << j;
    EXPECT_LE((fast.V.col(j) - a * slow.V.col(j)).norm(), 1e-8) << j;
  }
  EXPECT_EQ(fast.powers, slow.powers);
}

}  // namespace
}  // namespace ekrom
