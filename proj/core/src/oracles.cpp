#include "ekrom/oracles.hpp"

#include "ekrom/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace ekrom {

DenseOracle make_dense_oracle(const StretchedOperator& op, std::size_t cap) {
  if (op.size() > cap) {
    std::ostringstream msg;
    msg << "dense oracle needs N <= " << cap << " unknowns, got " << op.size();
    throw usage_error(msg.str());
  }
  DenseOracle o;
  o.A = cmat(op.matrix());
  o.m = op.symmetrizer();
  o.root = principal_sqrt(eigendecompose(-o.A));
  return o;
}

namespace {

void check_receivers(Eigen::Index n, const std::vector<std::size_t>& receivers) {
  for (std::size_t r : receivers)
    if (r >= static_cast<std::size_t>(n)) throw usage_error("receiver index out of range");
}

cmat receiver_rows(const cmat& X, const std::vector<std::size_t>& receivers) {
  cmat R(static_cast<Eigen::Index>(receivers.size()), X.cols());
  for (std::size_t q = 0; q < receivers.size(); ++q) R.row(static_cast<Eigen::Index>(q)) = X.row(static_cast<Eigen::Index>(receivers[q]));
  return R;
}

}  // namespace

ResponseSet dense_time_solution(const DenseOracle& oracle, const cvec& b, const std::vector<double>& times,
                                const std::vector<std::size_t>& receivers) {
  if (b.size() != oracle.size()) throw usage_error("dense_time_solution: source length mismatch");
  check_receivers(oracle.size(), receivers);
  for (double t : times)
    if (!(t >= 0.0)) throw usage_error("dense_time_solution: times must be >= 0");
  const cvec& mu = oracle.root.values;
  const cvec w = oracle.root.coefficients(b).cwiseQuotient(mu);
  const cmat R = receiver_rows(oracle.root.vectors, receivers);
  ResponseSet out;
  out.domain = Domain::time;
  out.times = times;
  out.receivers = receivers;
  out.provenance.method = "dense";
  out.provenance.d = oracle.size();
  out.provenance.oracle = true;
  out.values = cmat::Zero(static_cast<Eigen::Index>(times.size()), R.rows());
  cvec e(mu.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    for (Eigen::Index q = 0; q < mu.size(); ++q) e[q] = w[q] * std::exp(-mu[q] * times[j]);
    const cvec u = R * e;
    for (Eigen::Index r = 0; r < R.rows(); ++r) out.values(static_cast<Eigen::Index>(j), r) = -u[r].real();
  }
  return out;
}

ResponseSet dense_time_solution(const DenseOracle& oracle, const cvec& b, const std::vector<double>& times,
                                const std::vector<std::size_t>& receivers, const Wavelet& wavelet) {
  if (b.size() != oracle.size()) throw usage_error("dense_time_solution: source length mismatch");
  check_receivers(oracle.size(), receivers);
  const cvec& mu = oracle.root.values;
  const cvec w = oracle.root.coefficients(b).cwiseQuotient(mu);
  const cmat R = receiver_rows(oracle.root.vectors, receivers);
  const cmat C = modal_convolution(mu, wavelet, times);
  ResponseSet out;
  out.domain = Domain::time;
  out.times = times;
  out.receivers = receivers;
  out.provenance.method = "dense";
  out.provenance.d = oracle.size();
  out.provenance.oracle = true;
  out.provenance.notes = wavelet.describe();
  out.values = (-(C * w.asDiagonal() * R.transpose()).real()).cast<complex>();
  return out;
}

ResponseSet dense_freq_solution(const DenseOracle& oracle, const cvec& b, const std::vector<complex>& s_values,
                                const std::vector<std::size_t>& receivers) {
  if (b.size() != oracle.size()) throw usage_error("dense_freq_solution: source length mismatch");
  check_receivers(oracle.size(), receivers);
  const cvec& mu = oracle.root.values;
  const cvec w = oracle.root.coefficients(b).cwiseQuotient(mu);
  // conj(B)^{-1} b = conj(B^{-1} conj(b))
  const cvec wc = oracle.root.coefficients(b.conjugate()).cwiseQuotient(mu).conjugate();
  const cmat R = receiver_rows(oracle.root.vectors, receivers);
  const cmat Rc = R.conjugate();
  ResponseSet out;
  out.domain = Domain::frequency;
  out.s_values = s_values;
  out.receivers = receivers;
  out.provenance.method = "dense";
  out.provenance.d = oracle.size();
  out.provenance.oracle = true;
  out.values = cmat::Zero(static_cast<Eigen::Index>(s_values.size()), R.rows());
  cvec e(mu.size()), ec(mu.size());
  for (std::size_t j = 0; j < s_values.size(); ++j) {
    const complex s = s_values[j];
    for (Eigen::Index q = 0; q < mu.size(); ++q) {
      e[q] = w[q] / (mu[q] + s);
      ec[q] = wc[q] / (std::conj(mu[q]) + s);
    }
    out.values.row(static_cast<Eigen::Index>(j)) = (-0.5 * (R * e + Rc * ec)).transpose();
  }
  return out;
}

cvec direct_freq_solve(const StretchedOperator& op, const cvec& b, complex s) {
  if (static_cast<std::size_t>(b.size()) != op.size()) throw usage_error("direct_freq_solve: source length mismatch");
  SparseMatrix shifted = op.matrix();
  const complex s2 = s * s;
  for (int j = 0; j < shifted.outerSize(); ++j) shifted.coeffRef(j, j) += s2;
  shifted.makeCompressed();
  const StretchedOperator sop = StretchedOperator::from_matrices(std::move(shifted), op.symmetrizer());
  try {
    return factorize(sop).solve(b);
  } catch (const singular_operator_error& e) {
    std::ostringstream msg;
    msg << "A + s^2 I is numerically singular at s = " << s << " (smallest pivot " << e.pivot_magnitude() << ")";
    throw singular_operator_error(msg.str(), e.pivot_magnitude());
  }
}

ResponseSet direct_freq_response(const StretchedOperator& op, const cvec& b, const std::vector<complex>& s_values,
                                 const std::vector<std::size_t>& receivers) {
  check_receivers(static_cast<Eigen::Index>(op.size()), receivers);
  ResponseSet out;
  out.domain = Domain::frequency;
  out.s_values = s_values;
  out.receivers = receivers;
  out.provenance.method = "direct";
  out.provenance.oracle = true;
  out.provenance.solves = s_values.size();
  out.values = cmat::Zero(static_cast<Eigen::Index>(s_values.size()), static_cast<Eigen::Index>(receivers.size()));
  for (std::size_t j = 0; j < s_values.size(); ++j) {
    const cvec u = direct_freq_solve(op, b, s_values[j]);
    for (std::size_t q = 0; q < receivers.size(); ++q)
      out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(q)) = u[static_cast<Eigen::Index>(receivers[q])];
  }
  return out;
}

ExtendedBasis brute_force_eks_basis(const StretchedOperator& op, const FactorizedOperator& fac, const cvec& b,
                                    int k, int i) {
  if (k < 1 || i < 1) throw usage_error("brute_force_eks_basis: k and i must be >= 1");
  if (static_cast<std::size_t>(b.size()) != op.size()) throw usage_error("brute_force_eks_basis: source length mismatch");
  if (!(b.norm() > 0.0)) throw usage_error("brute_force_eks_basis: source vector is zero");
  const SparseMatrix& A = op.matrix();
  const cvec& m = op.symmetrizer();
  const Eigen::Index n = b.size();
  const Eigen::Index d = static_cast<Eigen::Index>(k) * (i + 1);

  // Normalized powers A^j b, j = -(k-1) .. k i.
  std::vector<cvec> pos(static_cast<std::size_t>(k * i + 1)), neg(static_cast<std::size_t>(k));
  pos[0] = b / b.norm();
  neg[0] = pos[0];
  for (std::size_t j = 1; j < pos.size(); ++j) {
    const cvec x = A * pos[j - 1];
    pos[j] = x / x.norm();
  }
  for (std::size_t j = 1; j < neg.size(); ++j) {
    const cvec x = fac.solve(neg[j - 1]);
    neg[j] = x / x.norm();
  }

  ExtendedBasis out;
  out.k = k;
  out.i = i;
  out.bandwidth = 2;
  out.beta0 = b.norm();
  out.V.resize(n, d);
  out.delta.resize(d);
  out.powers.resize(static_cast<std::size_t>(d));
  Eigen::Index col = 0;
  auto push = [&](cvec u, int power) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index q = 0; q < col; ++q) u -= (bilinear(u, out.V.col(q), m) / out.delta[q]) * out.V.col(q);
    const double nrm = u.norm();
    if (!(nrm > 0.0)) throw breakdown_error("power sequence is linearly dependent", static_cast<std::size_t>(col), 0.0, out.V.leftCols(col));
    u /= nrm;
    const complex dl = bilinear(u, u, m);
    if (std::abs(dl) < 1e-12)
      throw breakdown_error("isotropic vector in the brute-force basis", static_cast<std::size_t>(col), dl, out.V.leftCols(col));
    out.V.col(col) = u;
    out.delta[col] = dl;
    out.powers[static_cast<std::size_t>(col)] = power;
    ++col;
  };
  for (int p = 0; p < k; ++p) {
    push(neg[static_cast<std::size_t>(p)], -p);
    for (int j = 1; j <= i; ++j) push(pos[static_cast<std::size_t>(i * p + j)], i * p + j);
  }
  const cmat AV = A * out.V;
  const cmat P = (m.asDiagonal() * out.V).transpose() * AV;
  out.H = out.delta.cwiseInverse().asDiagonal() * P;
  out.residual = AV.col(d - 1) - out.V * out.H.col(d - 1);
  return out;
}

double courant_limit(const GridSpec& grid, const MediumModel& medium) {
  double inv = 0.0;
  for (int a = 0; a < grid.dims; ++a) inv += 1.0 / (grid.step[a] * grid.step[a]);
  return 0.99 / std::sqrt(medium.max_speed_squared() * inv);
}

LeapfrogResult leapfrog_reference(const GridSpec& grid, const MediumModel& medium, const cvec& b, double dt,
                                  int steps, const std::vector<std::size_t>& receivers,
                                  const std::optional<Wavelet>& wavelet) {
  if (static_cast<std::size_t>(b.size()) != grid.size()) throw usage_error("leapfrog_reference: source length mismatch");
  if (steps < 0) throw usage_error("leapfrog_reference: steps must be >= 0");
  check_receivers(static_cast<Eigen::Index>(grid.size()), receivers);
  LeapfrogResult res;
  res.courant_limit = courant_limit(grid, medium);
  if (!(dt > 0.0) || dt > res.courant_limit) {
    std::ostringstream msg;
    msg << "leapfrog time step " << dt << " exceeds the Courant limit " << res.courant_limit;
    throw usage_error(msg.str());
  }
  const StretchedOperator op = assemble_operator(grid, medium, build_stretching(grid, 1.0, 0.0));
  const Eigen::SparseMatrix<double> A = op.matrix().real();
  const Eigen::VectorXd m = op.symmetrizer().real();
  if (b.imag().cwiseAbs().maxCoeff() > 0.0) throw usage_error("leapfrog_reference: source must be real");
  const Eigen::VectorXd f = b.real();

  ResponseSet& tr = res.traces;
  tr.domain = Domain::time;
  tr.receivers = receivers;
  tr.provenance.method = "leapfrog";
  tr.provenance.oracle = true;
  tr.times.resize(static_cast<std::size_t>(steps) + 1);
  tr.values = cmat::Zero(steps + 1, static_cast<Eigen::Index>(receivers.size()));
  auto record = [&](int n, const Eigen::VectorXd& u) {
    tr.times[static_cast<std::size_t>(n)] = n * dt;
    for (std::size_t q = 0; q < receivers.size(); ++q)
      tr.values(n, static_cast<Eigen::Index>(q)) = u[static_cast<Eigen::Index>(receivers[q])];
  };
  // E_{n+1/2} = 1/2 |(u_{n+1} - u_n)/dt|_M^2 + 1/2 <A u_{n+1}, u_n>_M is exactly conserved.
  auto energy = [&](const Eigen::VectorXd& next, const Eigen::VectorXd& cur, const Eigen::VectorXd& a_next) {
    const Eigen::VectorXd v = (next - cur) / dt;
    return 0.5 * v.cwiseProduct(v).dot(m) + 0.5 * a_next.cwiseProduct(cur).dot(m);
  };

  if (wavelet) {
    validate_wavelet(*wavelet);
    tr.provenance.notes = wavelet->describe();
  }
  auto forcing = [&](int n) { return wavelet ? wavelet->value(n * dt) : 0.0; };

  Eigen::VectorXd prev = Eigen::VectorXd::Zero(f.size());
  record(0, prev);
  if (steps == 0) return res;
  Eigen::VectorXd cur;
  if (wavelet) cur = (0.5 * dt * dt * forcing(0)) * f;
  else cur = dt * f - (dt * dt * dt / 6.0) * (A * f);
  record(1, cur);
  Eigen::VectorXd Acur = A * cur;
  // energy is conserved once the forcing is over
  const int quiet = wavelet ? static_cast<int>(std::ceil(wavelet->support_end() / dt)) : 0;
  std::optional<double> e0;
  if (quiet == 0) e0 = energy(cur, prev, Acur);
  double drift = 0.0;
  for (int n = 1; n < steps; ++n) {
    Eigen::VectorXd next = 2.0 * cur - prev - (dt * dt) * Acur;
    if (wavelet) next += (dt * dt * forcing(n)) * f;
    Eigen::VectorXd Anext = A * next;
    if (n >= quiet) {
      const double e = energy(next, cur, Anext);
      if (!e0) e0 = e;
      drift = std::max(drift, std::abs(e - *e0));
    }
    prev.swap(cur);
    cur.swap(next);
    Acur.swap(Anext);
    record(n + 1, cur);
  }
  if (!e0) res.energy_drift = std::numeric_limits<double>::quiet_NaN();
  else res.energy_drift = *e0 != 0.0 ? drift / std::abs(*e0) : drift;
  return res;
}

std::vector<complex> laplace_contour(double gamma, double d_omega, int count) {
  if (!(gamma > 0.0) || !(d_omega > 0.0) || count < 3) throw usage_error("laplace_contour: need gamma > 0, d_omega > 0, count >= 3");
  std::vector<complex> s(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) s[static_cast<std::size_t>(j)] = complex(gamma, j * d_omega);
  return s;
}

LaplaceInversion laplace_inversion_check(const ResponseSet& freq, const std::vector<double>& times, double tolerance) {
  if (freq.domain != Domain::frequency) throw usage_error("laplace_inversion_check: needs frequency samples");
  const std::size_t count = freq.s_values.size();
  if (count < 3) throw usage_error("laplace_inversion_check: need at least 3 contour samples");
  const double gamma = freq.s_values[0].real();
  const double dw = freq.s_values[1].imag() - freq.s_values[0].imag();
  for (std::size_t j = 0; j < count; ++j) {
    const complex s = freq.s_values[j];
    if (std::abs(s.real() - gamma) > 1e-12 * gamma || std::abs(s.imag() - j * dw) > 1e-9 * dw * (1.0 + j))
      throw usage_error("laplace_inversion_check: samples are not on a uniform vertical contour starting at Im s = 0");
  }
  if (!(gamma > 0.0) || !(dw > 0.0)) throw usage_error("laplace_inversion_check: bad contour");

  const auto nr = static_cast<Eigen::Index>(freq.receivers.size());
  auto invert = [&](std::size_t stride) {
    cmat u = cmat::Zero(static_cast<Eigen::Index>(times.size()), nr);
    const double h = dw * static_cast<double>(stride);
    for (std::size_t t = 0; t < times.size(); ++t) {
      for (Eigen::Index r = 0; r < nr; ++r) {
        double acc = 0.5 * freq.values(0, r).real();
        for (std::size_t j = stride; j < count; j += stride) {
          const double w = freq.s_values[j].imag();
          acc += (freq.values(static_cast<Eigen::Index>(j), r) * std::exp(complex(0.0, w * times[t]))).real();
        }
        u(static_cast<Eigen::Index>(t), r) = std::exp(gamma * times[t]) / std::numbers::pi * h * acc;
      }
    }
    return u;
  };

  LaplaceInversion out;
  out.traces.domain = Domain::time;
  out.traces.times = times;
  out.traces.receivers = freq.receivers;
  out.traces.provenance = freq.provenance;
  out.traces.provenance.method = "laplace";
  out.traces.values = invert(1);
  const cmat half = invert(2);
  const double scale = out.traces.values.cwiseAbs().maxCoeff();
  const double diff = (out.traces.values - half).cwiseAbs().maxCoeff();
  out.error_estimate = scale > 0.0 ? diff / scale : diff;
  if (out.error_estimate > tolerance) {
    std::ostringstream msg;
    msg << "Laplace inversion: contour sampling too coarse, estimated relative quadrature error "
        << out.error_estimate << " > " << tolerance;
    warn(msg.str());
  }
  return out;
}

}  // namespace ekrom
