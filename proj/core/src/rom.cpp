#include "ekrom/rom.hpp"

#include "ekrom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ekrom {

double ReducedModel::min_real_eigenvalue() const {
  return spectrum.order() ? spectrum.values.real().minCoeff() : 0.0;
}

ReducedModel build_reduced_model(const KrylovBasis& basis, const std::vector<std::size_t>& receivers,
                                 Provenance provenance, bool keep_basis) {
  const Eigen::Index d = basis.order();
  if (d == 0) throw usage_error("build_reduced_model: empty basis");
  if (basis.H.rows() != d || basis.H.cols() != d || basis.delta.size() != d)
    throw usage_error("build_reduced_model: inconsistent basis");
  for (std::size_t r : receivers)
    if (r >= static_cast<std::size_t>(basis.V.rows())) throw usage_error("build_reduced_model: receiver out of range");

  cvec root(d);
  for (Eigen::Index p = 0; p < d; ++p) {
    const complex dl = basis.delta[p];
    if (dl.real() < 0.0 && std::abs(dl.imag()) <= 1e-14 * std::abs(dl)) {
      std::ostringstream msg;
      msg << "delta_" << p << " = " << dl << " lies on the negative real axis; using delta^{1/2} = +i sqrt|delta|";
      warn(msg.str());
    }
    root[p] = std::sqrt(complex(dl.real(), dl.imag() == 0.0 ? 0.0 : dl.imag()));
  }

  // -S = -D^{1/2} H D^{-1/2}
  cmat G(d, d);
  for (Eigen::Index q = 0; q < d; ++q)
    for (Eigen::Index p = 0; p < d; ++p) G(p, q) = -root[p] * basis.H(p, q) / root[q];

  ReducedModel model;
  model.d = d;
  try {
    model.spectrum = principal_sqrt(eigendecompose(G));
  } catch (const defective_matrix_error& e) {
    throw defective_matrix_error("reduced model of order " + std::to_string(d) + ": " + e.what(), e.eigenvalue(),
                                 e.condition());
  }
  const double rho = model.spectrum.spectral_radius();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(std::abs(model.spectrum.values[j]) > 1e-14 * rho)) {
      std::ostringstream msg;
      msg << "reduced model is singular: B_d eigenvalue " << model.spectrum.values[j] << " vs spectral radius " << rho;
      throw numerical_error(msg.str());
    }
  }
  model.B = model.spectrum.reconstruct();
  model.delta0 = basis.delta[0];
  model.beta0 = basis.beta0;
  model.scale = basis.beta0 * root[0];

  cvec e1 = cvec::Zero(d);
  e1[0] = 1.0;
  model.weights = model.scale * model.spectrum.coefficients(e1).cwiseQuotient(model.spectrum.values);

  const cvec inv_root = root.cwiseInverse();
  const cmat& X = model.spectrum.vectors;
  model.receivers = receivers;
  model.receiver_rows.resize(static_cast<Eigen::Index>(receivers.size()), d);
  for (std::size_t q = 0; q < receivers.size(); ++q) {
    const auto r = static_cast<Eigen::Index>(receivers[q]);
    model.receiver_rows.row(static_cast<Eigen::Index>(q)) =
        (basis.V.row(r).transpose().cwiseProduct(inv_root)).transpose() * X;
  }
  if (keep_basis) model.field = (basis.V * inv_root.asDiagonal()) * X;

  provenance.d = d;
  model.provenance = std::move(provenance);
  return model;
}

namespace {

cmat rows_for(const ReducedModel& model, const std::vector<std::size_t>& receivers) {
  cmat R(static_cast<Eigen::Index>(receivers.size()), model.d);
  for (std::size_t q = 0; q < receivers.size(); ++q) {
    const auto it = std::find(model.receivers.begin(), model.receivers.end(), receivers[q]);
    if (it != model.receivers.end()) {
      R.row(static_cast<Eigen::Index>(q)) = model.receiver_rows.row(it - model.receivers.begin());
    } else if (model.field && receivers[q] < static_cast<std::size_t>(model.field->rows())) {
      R.row(static_cast<Eigen::Index>(q)) = model.field->row(static_cast<Eigen::Index>(receivers[q]));
    } else {
      throw usage_error("receiver " + std::to_string(receivers[q]) + " was not requested when the model was built");
    }
  }
  return R;
}

}  // namespace

ResponseSet eval_time(const ReducedModel& model, const std::vector<double>& times,
                      const std::vector<std::size_t>& receivers) {
  for (double t : times)
    if (!(t >= 0.0)) throw usage_error("eval_time: times must be >= 0");
  const cmat R = rows_for(model, receivers);
  ResponseSet out;
  out.domain = Domain::time;
  out.times = times;
  out.receivers = receivers;
  out.provenance = model.provenance;
  out.values = cmat::Zero(static_cast<Eigen::Index>(times.size()), R.rows());
  cvec e(model.d);
  for (std::size_t j = 0; j < times.size(); ++j) {
    for (Eigen::Index q = 0; q < model.d; ++q) e[q] = model.weights[q] * std::exp(-model.spectrum.values[q] * times[j]);
    const cvec u = R * e;
    for (Eigen::Index r = 0; r < R.rows(); ++r) out.values(static_cast<Eigen::Index>(j), r) = -u[r].real();
  }
  return out;
}

ResponseSet eval_time(const ReducedModel& model, const std::vector<double>& times) {
  return eval_time(model, times, model.receivers);
}

ResponseSet eval_time(const ReducedModel& model, const std::vector<double>& times,
                      const std::vector<std::size_t>& receivers, const Wavelet& wavelet) {
  const cmat R = rows_for(model, receivers);
  const cmat C = modal_convolution(model.spectrum.values, wavelet, times);
  ResponseSet out;
  out.domain = Domain::time;
  out.times = times;
  out.receivers = receivers;
  out.provenance = model.provenance;
  out.provenance.notes += (out.provenance.notes.empty() ? "" : "; ") + wavelet.describe();
  out.values = (-(C * model.weights.asDiagonal() * R.transpose()).real()).cast<complex>();
  return out;
}

ResponseSet eval_time(const ReducedModel& model, const std::vector<double>& times, const Wavelet& wavelet) {
  return eval_time(model, times, model.receivers, wavelet);
}

ResponseSet eval_freq(const ReducedModel& model, const std::vector<complex>& s_values,
                      const std::vector<std::size_t>& receivers) {
  const cmat R = rows_for(model, receivers);
  const cmat Rc = R.conjugate();
  const cvec wc = model.weights.conjugate();
  ResponseSet out;
  out.domain = Domain::frequency;
  out.s_values = s_values;
  out.receivers = receivers;
  out.provenance = model.provenance;
  out.values = cmat::Zero(static_cast<Eigen::Index>(s_values.size()), R.rows());
  cvec e(model.d), ec(model.d);
  for (std::size_t j = 0; j < s_values.size(); ++j) {
    const complex s = s_values[j];
    for (Eigen::Index q = 0; q < model.d; ++q) {
      const complex mu = model.spectrum.values[q];
      const double tol = 1e-8 * (1.0 + std::abs(mu));
      if (std::abs(s + mu) < tol || std::abs(s + std::conj(mu)) < tol) {
        std::ostringstream msg;
        msg << "shift " << s << " is within " << std::min(std::abs(s + mu), std::abs(s + std::conj(mu)))
            << " of a pole at " << -mu << "; condition estimate "
            << model.spectrum.condition * (1.0 + std::abs(mu)) / std::min(std::abs(s + mu), std::abs(s + std::conj(mu)));
        warn(msg.str());
      }
      e[q] = model.weights[q] / (mu + s);
      ec[q] = wc[q] / (std::conj(mu) + s);
    }
    const cvec u = -0.5 * (R * e + Rc * ec);
    out.values.row(static_cast<Eigen::Index>(j)) = u.transpose();
  }
  return out;
}

ResponseSet eval_freq(const ReducedModel& model, const std::vector<complex>& s_values) {
  return eval_freq(model, s_values, model.receivers);
}

namespace {

std::vector<int> normalized_orders(std::vector<int> orders) {
  if (orders.empty()) throw usage_error("error curve: no orders requested");
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  if (orders.front() < 1) throw usage_error("error curve: orders must be >= 1");
  return orders;
}

void check_oracle(const ResponseSet& oracle) {
  if (oracle.samples() == 0) throw usage_error("error curve: oracle has no samples");
  if (oracle.values.rows() != static_cast<Eigen::Index>(oracle.samples()) ||
      oracle.values.cols() != static_cast<Eigen::Index>(oracle.receivers.size()))
    throw usage_error("error curve: oracle values do not match its samples");
}

std::string error_definition(const ResponseSet& oracle) {
  return oracle.domain == Domain::frequency
             ? "max over samples of ||u_d(s) - u_ref(s)||_2 / ||u_ref(s)||_2 over receivers"
             : "||u_d - u_ref||_F / ||u_ref||_F over the time window";
}

ErrorCurvePoint evaluate_point(const KrylovBasis& basis, const ResponseSet& oracle, Provenance prov,
                               const std::optional<Wavelet>& wavelet) {
  const ReducedModel model = build_reduced_model(basis, oracle.receivers, std::move(prov));
  const ResponseSet r = oracle.domain == Domain::frequency ? eval_freq(model, oracle.s_values)
                        : wavelet                          ? eval_time(model, oracle.times, *wavelet)
                                                           : eval_time(model, oracle.times);
  ErrorCurvePoint pt;
  pt.d = model.d;
  pt.error = oracle.domain == Domain::frequency ? max_relative_error(r, oracle) : relative_l2_error(r, oracle);
  pt.min_real_eigenvalue = model.min_real_eigenvalue();
  pt.spectral_radius = model.spectral_radius();
  pt.matvecs = basis.cost.matvecs;
  pt.solves = basis.cost.solves;
  return pt;
}

}  // namespace

ErrorCurve error_curve(const PolynomialBasis& basis, std::vector<int> orders, const ResponseSet& oracle,
                       const Provenance& base, const std::optional<Wavelet>& wavelet) {
  orders = normalized_orders(std::move(orders));
  check_oracle(oracle);
  if (orders.back() > basis.m) throw usage_error("error curve: order exceeds the basis");
  ErrorCurve curve;
  curve.method = {Method::Kind::pks, 0};
  curve.error_definition = error_definition(oracle);
  for (int m : orders) {
    const PolynomialBasis lb = leading(basis, m);
    Provenance prov = base;
    prov.method = "pks";
    prov.k = m;
    prov.matvecs = lb.cost.matvecs;
    prov.solves = lb.cost.solves;
    ErrorCurvePoint pt = evaluate_point(lb, oracle, prov, wavelet);
    pt.order = m;
    curve.points.push_back(pt);
  }
  return curve;
}

ErrorCurve error_curve(const ExtendedBasis& basis, std::vector<int> orders, const ResponseSet& oracle,
                       const Provenance& base, const std::optional<Wavelet>& wavelet) {
  orders = normalized_orders(std::move(orders));
  check_oracle(oracle);
  if (orders.back() > basis.k) throw usage_error("error curve: order exceeds the basis");
  ErrorCurve curve;
  curve.method = {Method::Kind::eks, basis.i};
  curve.error_definition = error_definition(oracle);
  for (int k : orders) {
    const ExtendedBasis lb = leading(basis, k);
    Provenance prov = base;
    prov.method = "eks";
    prov.k = k;
    prov.i = basis.i;
    prov.matvecs = lb.cost.matvecs;
    prov.solves = lb.cost.solves;
    ErrorCurvePoint pt = evaluate_point(lb, oracle, prov, wavelet);
    pt.order = k;
    curve.points.push_back(pt);
  }
  return curve;
}

ErrorCurve rom_error_curve(const StretchedOperator& op, const FactorizedOperator* fac, const cvec& b,
                           const Method& method, std::vector<int> orders, const ResponseSet& oracle,
                           const KrylovOptions& options, const Provenance& base,
                           const std::optional<Wavelet>& wavelet) {
  orders = normalized_orders(std::move(orders));
  check_oracle(oracle);
  if (method.kind == Method::Kind::pks) return error_curve(pks_lanczos(op, b, orders.back(), options), orders, oracle, base, wavelet);
  if (!fac) throw usage_error("rom_error_curve: extended Krylov needs a factorization");
  if (method.i < 1) throw usage_error("rom_error_curve: EKS ratio i must be >= 1");
  return error_curve(eks_orthogonalize(op, *fac, b, orders.back(), method.i, options), orders, oracle, base, wavelet);
}

}  // namespace ekrom
