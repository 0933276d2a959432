#include "ekrom/krylov.hpp"

#include "ekrom/errors.hpp"

#include <cmath>
#include <cstring>
#include <initializer_list>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

namespace ekrom {

namespace {

/// Shared state of one orthogonalization run.
class Recurrence {
 public:
  Recurrence(const cvec& m, Eigen::Index n, Eigen::Index capacity, const KrylovOptions& options)
      : m_(m), m_scale_(m.cwiseAbs().maxCoeff()), options_(options), V(n, capacity), delta(capacity) {}

  Eigen::Index stored() const { return stored_; }

  /// u -= (<u, v_q> / delta_q) v_q, accumulating the coefficient.
  void subtract(cvec& u, Eigen::Index q, cvec& coef) const {
    const complex a = bilinear(u, V.col(q), m_) / delta[q];
    u -= a * V.col(q);
    coef[q] += a;
  }

  /// The recurrence's own projections, then (optionally) a full second pass
  /// over columns [0, limit).
  cvec orthogonalize(cvec& u, std::initializer_list<Eigen::Index> listed, Eigen::Index limit) const {
    cvec coef = cvec::Zero(limit);
    for (Eigen::Index q : listed) subtract(u, q, coef);
    if (options_.reorthogonalize)
      for (Eigen::Index q = 0; q < limit; ++q) subtract(u, q, coef);
    return coef;
  }

  /// Normalizes u to unit Euclidean norm and appends it; returns the norm.
  double append(cvec u, double scale) {
    const double beta = u.norm();
    if (!(beta > 1e-13 * scale)) fail("Krylov space became invariant before the requested dimension", 0.0);
    u /= beta;
    const complex d = bilinear(u, u, m_);
    if (std::abs(d) < options_.breakdown_tolerance * m_scale_) fail("new basis vector is isotropic in the bilinear form", d);
    V.col(stored_) = u;
    delta[stored_] = d;
    ++stored_;
    return beta;
  }

  /// append() for the vector that only splits the residual: an exhausted
  /// space stores a zero column (delta 1) instead of breaking down.
  double append_closing(cvec u, double scale) {
    if (u.norm() > 1e-13 * scale) return append(std::move(u), scale);
    V.col(stored_).setZero();
    delta[stored_] = 1.0;
    ++stored_;
    return 0.0;
  }

  [[noreturn]] void fail(const std::string& why, complex d) const {
    std::ostringstream msg;
    msg << "serious breakdown at step " << stored_ << ": " << why << " (<v,v> = " << d << ")";
    throw breakdown_error(msg.str(), static_cast<std::size_t>(stored_), d, V.leftCols(stored_));
  }

 private:
  const cvec& m_;
  double m_scale_;
  const KrylovOptions& options_;
  Eigen::Index stored_ = 0;

 public:
  cmat V;
  cvec delta;
};

void check_source(const StretchedOperator& op, const cvec& b) {
  if (static_cast<std::size_t>(b.size()) != op.size()) throw usage_error("source length does not match the operator");
  if (!(b.norm() > 0.0)) throw usage_error("source vector is zero");
}

}  // namespace

PolynomialBasis pks_lanczos(const StretchedOperator& op, const cvec& b, int m, const KrylovOptions& options) {
  check_source(op, b);
  if (m < 1) throw usage_error("pks_lanczos: m must be >= 1");
  const KernelCounters start = kernel_counters();
  const auto n = static_cast<Eigen::Index>(op.size());
  Recurrence rec(op.symmetrizer(), n, m, options);

  PolynomialBasis out;
  out.m = m;
  out.bandwidth = 1;
  out.reorthogonalized = options.reorthogonalize;
  out.beta0 = b.norm();
  rec.append(b, 0.0);

  cmat T = cmat::Zero(m, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    cvec u = matvec(op, rec.V.col(c));
    const double scale = u.norm();
    const cvec coef = c == 0 ? rec.orthogonalize(u, {0}, c + 1) : rec.orthogonalize(u, {c - 1, c}, c + 1);
    for (Eigen::Index q = std::max<Eigen::Index>(0, c - 1); q <= c; ++q) T(q, c) = coef[q] * rec.delta[q];
    if (c + 1 < m) {
      const double beta = rec.append(std::move(u), scale);
      T(c + 1, c) = beta * rec.delta[c + 1];
    } else {
      out.residual = std::move(u);
    }
  }
  out.V = std::move(rec.V);
  out.delta = std::move(rec.delta);
  out.H = out.delta.cwiseInverse().asDiagonal() * T;
  out.cost.matvecs = kernel_counters().matvecs - start.matvecs;
  out.cost.solves = kernel_counters().solves - start.solves;
  return out;
}

ExtendedBasis eks_orthogonalize(const StretchedOperator& op, const FactorizedOperator& fac, const cvec& b, int k,
                                int i, const KrylovOptions& options) {
  check_source(op, b);
  if (k < 1 || i < 1) throw usage_error("eks_orthogonalize: k and i must be >= 1");
  if (&fac.op() != &op) throw usage_error("eks_orthogonalize: factorization belongs to a different operator");
  const KernelCounters start = kernel_counters();
  const auto n = static_cast<Eigen::Index>(op.size());
  const Eigen::Index d = static_cast<Eigen::Index>(k) * (i + 1);
  // one extra column for v_{-k}
  Recurrence rec(op.symmetrizer(), n, d + 1, options);

  ExtendedBasis out;
  out.k = k;
  out.i = i;
  out.bandwidth = 2;
  out.reorthogonalized = options.reorthogonalize;
  out.beta0 = b.norm();
  out.powers.assign(static_cast<std::size_t>(d), 0);
  rec.append(b, 0.0);

  // T = D H = V^T M A V, filled column by column. Columns produced by a matvec
  // ("forward") are authoritative for rows <= c + 1; block-final columns are
  // recovered from symmetry and the inverse-step relation.
  cmat T = cmat::Zero(d + 2, d + 2);
  std::vector<char> forward(static_cast<std::size_t>(d), 0);
  auto is_forward = [&](Eigen::Index c) { return c < d && forward[static_cast<std::size_t>(c)]; };
  auto tval = [&](Eigen::Index r, Eigen::Index q) -> complex {
    if (is_forward(q)) return T(r, q);
    if (is_forward(r)) return T(q, r);
    return T(r, q);
  };

  auto forward_step = [&](Eigen::Index c, std::initializer_list<Eigen::Index> listed, int power) {
    cvec u = matvec(op, rec.V.col(c));
    const double scale = u.norm();
    const cvec coef = rec.orthogonalize(u, listed, c + 1);
    for (Eigen::Index q = std::max<Eigen::Index>(0, c - 2); q <= c; ++q) T(q, c) = coef[q] * rec.delta[q];
    const double beta = rec.append(std::move(u), scale);
    T(c + 1, c) = beta * rec.delta[c + 1];
    forward[static_cast<std::size_t>(c)] = 1;
    out.powers[static_cast<std::size_t>(c + 1)] = power;
  };

  struct InverseStep {
    Eigen::Index c;
    cvec g;        // A^{-1} v_c = sum_q g_q v_q + beta v_{c+1}
    complex beta;
  };
  std::optional<InverseStep> pending;

  // <A^{-1} v_c, v_r> relations: delta_c [r == c] = sum_q g_q T(r, q) + beta T(r, c + 1).
  auto resolve = [&](const InverseStep& s) {
    const Eigen::Index c = s.c;
    if (!(std::abs(s.g[c]) > 1e-300)) throw numerical_error("inverse-step relation is degenerate (zero diagonal coefficient)");
    auto solve_row = [&](Eigen::Index r, complex lhs) {
      complex acc = s.beta * tval(r, c + 1);
      for (Eigen::Index q = std::max<Eigen::Index>(0, r - 2); q < c; ++q) acc += s.g[q] * tval(r, q);
      return (lhs - acc) / s.g[c];
    };
    if (i == 1 && c >= 3) {
      // two consecutive block-final vectors couple at distance 2
      const complex t = solve_row(c - 2, 0.0);
      T(c - 2, c) = t;
      T(c, c - 2) = t;
    }
    T(c, c) = solve_row(c, rec.delta[c]);
  };

  for (int p = 0; p < k; ++p) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(p) * (i + 1);
    // A v_{-p}: against v_{ip} and v_{-p} (both v_0 when p = 0).
    if (p == 0) forward_step(c0, {0, 0}, 1);
    else forward_step(c0, {c0 - 1, c0}, i * p + 1);
    if (pending) {
      resolve(*pending);
      pending.reset();
    }
    // A v_{ip+1}: against v_{ip}, v_{-p}, v_{ip+1}; then A v_{ip+j-1}: against the previous two.
    for (int j = 1; j < i; ++j) {
      const Eigen::Index c = c0 + j;
      if (j == 1) forward_step(c, {p == 0 ? c0 : c0 - 1, c0, c0 + 1}, i * p + 2);
      else forward_step(c, {c - 1, c}, i * p + j + 1);
    }
    // A^{-1} v_{i(p+1)}: against v_{-p} and v_{ip+1}, ..., v_{ip+i}.
    const Eigen::Index c = c0 + i;
    cvec w = fac.solve(rec.V.col(c));
    const double scale = w.norm();
    cvec g = cvec::Zero(c + 1);
    rec.subtract(w, c0, g);
    for (int j = 1; j <= i; ++j) rec.subtract(w, c0 + j, g);
    if (options.reorthogonalize)
      for (Eigen::Index q = 0; q <= c; ++q) rec.subtract(w, q, g);
    const double beta = c + 1 < d ? rec.append(std::move(w), scale) : rec.append_closing(std::move(w), scale);
    if (c + 1 < d) {
      out.powers[static_cast<std::size_t>(c + 1)] = -(p + 1);
      pending = InverseStep{c, std::move(g), beta};
    }
  }

  // Final column by one explicit matvec; its remainder is the residual z.
  {
    const Eigen::Index c = d - 1;
    cvec u = matvec(op, rec.V.col(c));
    cvec coef = cvec::Zero(d);
    for (Eigen::Index q : {c - 2, c - 1, c})
      if (q >= 0) rec.subtract(u, q, coef);
    if (options.reorthogonalize)
      for (Eigen::Index q = 0; q < d; ++q) rec.subtract(u, q, coef);
    for (Eigen::Index q = std::max<Eigen::Index>(0, c - 2); q <= c; ++q) T(q, c) = coef[q] * rec.delta[q];
    forward[static_cast<std::size_t>(c)] = 1;

    out.v_inverse = rec.V.col(d);
    const complex delta_inv = rec.delta[d];
    out.h_inverse = bilinear(u, out.v_inverse, op.symmetrizer()) / delta_inv;
    cvec rest = u - out.h_inverse * out.v_inverse;
    const double h = rest.norm();
    out.h_forward = h;
    out.v_forward = h > 0.0 ? cvec(rest / h) : cvec(cvec::Zero(n));
    out.residual = std::move(u);
  }

  // Mirror the forward entries into the block-final columns.
  for (Eigen::Index c = 0; c < d; ++c) {
    if (is_forward(c)) continue;
    for (Eigen::Index r = std::max<Eigen::Index>(0, c - 2); r < std::min(d, c + 3); ++r)
      if (r != c && is_forward(r)) T(r, c) = T(c, r);
  }

  out.V = rec.V.leftCols(d);
  out.delta = rec.delta.head(d);
  out.H = out.delta.cwiseInverse().asDiagonal() * T.topLeftCorner(d, d);
  out.cost.matvecs = kernel_counters().matvecs - start.matvecs;
  out.cost.solves = kernel_counters().solves - start.solves;
  return out;
}

PolynomialBasis leading(const PolynomialBasis& basis, int m) {
  if (m < 1 || m > basis.m) throw usage_error("leading: order out of range");
  if (m == basis.m) return basis;
  PolynomialBasis out;
  out.m = m;
  out.bandwidth = basis.bandwidth;
  out.reorthogonalized = basis.reorthogonalized;
  out.beta0 = basis.beta0;
  out.V = basis.V.leftCols(m);
  out.H = basis.H.topLeftCorner(m, m);
  out.delta = basis.delta.head(m);
  out.residual = basis.V.rightCols(basis.m - m) * basis.H.col(m - 1).tail(basis.m - m);
  out.cost.matvecs = static_cast<std::uint64_t>(m);
  return out;
}

ExtendedBasis leading(const ExtendedBasis& basis, int k) {
  if (k < 1 || k > basis.k) throw usage_error("leading: k out of range");
  if (k == basis.k) return basis;
  const Eigen::Index d = static_cast<Eigen::Index>(k) * (basis.i + 1);
  const Eigen::Index full = basis.order();
  ExtendedBasis out;
  out.k = k;
  out.i = basis.i;
  out.bandwidth = basis.bandwidth;
  out.reorthogonalized = basis.reorthogonalized;
  out.beta0 = basis.beta0;
  out.V = basis.V.leftCols(d);
  out.H = basis.H.topLeftCorner(d, d);
  out.delta = basis.delta.head(d);
  out.powers.assign(basis.powers.begin(), basis.powers.begin() + d);
  out.residual = basis.V.rightCols(full - d) * basis.H.col(d - 1).tail(full - d);
  out.v_inverse = basis.V.col(d);
  out.h_inverse = basis.H(d, d - 1);
  out.v_forward = basis.V.col(d + 1);
  out.h_forward = basis.H(d + 1, d - 1);
  out.cost.matvecs = static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(basis.i) + 1;
  out.cost.solves = static_cast<std::uint64_t>(k);
  return out;
}

DecompositionDiagnostics check_decomposition(const KrylovBasis& basis, const StretchedOperator& op) {
  DecompositionDiagnostics diag;
  const Eigen::Index d = basis.order();
  if (d == 0) return diag;
  const cvec& m = op.symmetrizer();
  const cmat AV = op.matrix() * basis.V;
  cmat R = AV - basis.V * basis.H;
  R.col(d - 1) -= basis.residual;
  diag.residual = R.norm() / (op.norm_inf() * basis.V.norm());

  const cmat MV = m.asDiagonal() * basis.V;
  const cmat G = basis.V.transpose() * MV;
  const double dmax = basis.delta.cwiseAbs().maxCoeff();
  double off = 0.0, dmis = 0.0;
  for (Eigen::Index q = 0; q < d; ++q)
    for (Eigen::Index p = 0; p < d; ++p) {
      if (p == q) dmis = std::max(dmis, std::abs(G(p, q) - basis.delta[p]));
      else off = std::max(off, std::abs(G(p, q)));
    }
  diag.orthogonality = off / dmax;
  diag.delta_mismatch = dmis / dmax;

  double nd = 0.0;
  for (Eigen::Index q = 0; q < d; ++q) nd = std::max(nd, std::abs(basis.V.col(q).norm() - 1.0));
  diag.norm_defect = nd;

  const double hnorm = basis.H.cwiseAbs().rowwise().sum().maxCoeff();
  double band = 0.0;
  for (Eigen::Index q = 0; q < d; ++q)
    for (Eigen::Index p = 0; p < d; ++p)
      if (std::abs(p - q) > basis.bandwidth) band = std::max(band, std::abs(basis.H(p, q)));
  diag.band_violation = hnorm > 0.0 ? band / hnorm : band;

  const cmat P = MV.transpose() * (AV);
  const cmat DH = basis.delta.asDiagonal() * basis.H;
  diag.projection = (DH - P).cwiseAbs().maxCoeff() / (op.norm_inf() * dmax);
  return diag;
}

namespace {

constexpr char kMagic[8] = {'E', 'K', 'R', 'O', 'M', 'K', 'B', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw usage_error("basis checkpoint truncated");
  return v;
}

void put_block(std::ostream& out, const complex* data, Eigen::Index count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(complex)));
}

void get_block(std::istream& in, complex* data, Eigen::Index count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(complex)));
  if (!in) throw usage_error("basis checkpoint truncated");
}

void save_common(std::ostream& out, const KrylovBasis& b, std::uint32_t kind, std::int32_t first, std::int32_t second) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kind);
  put<std::int64_t>(out, b.V.rows());
  put<std::int64_t>(out, b.V.cols());
  put<std::int32_t>(out, first);
  put<std::int32_t>(out, second);
  put<double>(out, b.beta0);
  put<std::int32_t>(out, b.bandwidth);
  put<std::int32_t>(out, b.reorthogonalized ? 1 : 0);
  put<std::uint64_t>(out, b.cost.matvecs);
  put<std::uint64_t>(out, b.cost.solves);
  put_block(out, b.V.data(), b.V.size());
  put_block(out, b.H.data(), b.H.size());
  put_block(out, b.delta.data(), b.delta.size());
  put_block(out, b.residual.data(), b.residual.size());
}

struct Header {
  std::uint32_t kind;
  std::int64_t n, d;
  std::int32_t first, second;
};

Header load_common(std::istream& in, KrylovBasis& b) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw usage_error("not an ekrom basis checkpoint");
  Header h;
  h.kind = get<std::uint32_t>(in);
  h.n = get<std::int64_t>(in);
  h.d = get<std::int64_t>(in);
  h.first = get<std::int32_t>(in);
  h.second = get<std::int32_t>(in);
  if (h.n < 0 || h.d < 0) throw usage_error("basis checkpoint has negative dimensions");
  b.beta0 = get<double>(in);
  b.bandwidth = get<std::int32_t>(in);
  b.reorthogonalized = get<std::int32_t>(in) != 0;
  b.cost.matvecs = get<std::uint64_t>(in);
  b.cost.solves = get<std::uint64_t>(in);
  b.V.resize(h.n, h.d);
  b.H.resize(h.d, h.d);
  b.delta.resize(h.d);
  b.residual.resize(h.n);
  get_block(in, b.V.data(), b.V.size());
  get_block(in, b.H.data(), b.H.size());
  get_block(in, b.delta.data(), b.delta.size());
  get_block(in, b.residual.data(), b.residual.size());
  return h;
}

}  // namespace

void save_basis(std::ostream& out, const PolynomialBasis& basis) {
  save_common(out, basis, 0, basis.m, 0);
  if (!out) throw io_error("failed writing basis checkpoint", "<stream>");
}

void save_basis(std::ostream& out, const ExtendedBasis& basis) {
  save_common(out, basis, 1, basis.k, basis.i);
  for (int p : basis.powers) put<std::int32_t>(out, p);
  put<complex>(out, basis.h_inverse);
  put<complex>(out, basis.h_forward);
  put_block(out, basis.v_inverse.data(), basis.v_inverse.size());
  put_block(out, basis.v_forward.data(), basis.v_forward.size());
  if (!out) throw io_error("failed writing basis checkpoint", "<stream>");
}

PolynomialBasis load_polynomial_basis(std::istream& in) {
  PolynomialBasis b;
  const Header h = load_common(in, b);
  if (h.kind != 0) throw usage_error("checkpoint holds an extended basis");
  b.m = h.first;
  return b;
}

ExtendedBasis load_extended_basis(std::istream& in) {
  ExtendedBasis b;
  const Header h = load_common(in, b);
  if (h.kind != 1) throw usage_error("checkpoint holds a polynomial basis");
  b.k = h.first;
  b.i = h.second;
  b.powers.resize(static_cast<std::size_t>(h.d));
  for (auto& p : b.powers) p = get<std::int32_t>(in);
  b.h_inverse = get<complex>(in);
  b.h_forward = get<complex>(in);
  b.v_inverse.resize(h.n);
  b.v_forward.resize(h.n);
  get_block(in, b.v_inverse.data(), h.n);
  get_block(in, b.v_forward.data(), h.n);
  return b;
}

}  // namespace ekrom
