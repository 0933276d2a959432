#include "ekrom/response.hpp"

#include "ekrom/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>

namespace ekrom {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const ResponseSet& r) {
  const bool time = r.domain == Domain::time;
  out << (time ? "t,receiver,re,im\n" : "re_s,im_s,receiver,re,im\n");
  for (std::size_t j = 0; j < r.samples(); ++j) {
    const std::string axis =
        time ? g17(r.times[j]) : g17(r.s_values[j].real()) + "," + g17(r.s_values[j].imag());
    for (std::size_t q = 0; q < r.receivers.size(); ++q) {
      const complex v = r.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(q));
      out << axis << ',' << r.receivers[q] << ',' << g17(v.real()) << ',' << g17(v.imag()) << '\n';
    }
  }
}

std::string provenance_json(const ResponseSet& r) {
  const Provenance& p = r.provenance;
  nlohmann::ordered_json j;
  j["domain"] = r.domain == Domain::time ? "time" : "frequency";
  j["method"] = p.method;
  j["k"] = p.k;
  j["i"] = p.i;
  j["d"] = p.d;
  j["matvecs"] = p.matvecs;
  j["solves"] = p.solves;
  j["oracle"] = p.oracle;
  j["scenario_hash"] = p.scenario_hash;
  j["tolerances"] = p.tolerances;
  j["samples"] = r.samples();
  j["receivers"] = r.receivers;
  if (!p.notes.empty()) j["notes"] = p.notes;
  return j.dump(2);
}

void require_same_samples(const ResponseSet& a, const ResponseSet& b) {
  if (a.domain != b.domain) throw usage_error("response sets live in different domains");
  if (a.receivers != b.receivers) throw usage_error("response sets have different receivers");
  if (a.domain == Domain::time ? a.times != b.times : a.s_values != b.s_values)
    throw usage_error("response sets are sampled differently");
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
    throw usage_error("response value arrays differ in shape");
}

double max_relative_error(const ResponseSet& a, const ResponseSet& ref) {
  require_same_samples(a, ref);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < ref.values.rows(); ++j) {
    const double den = ref.values.row(j).norm();
    const double num = (a.values.row(j) - ref.values.row(j)).norm();
    worst = std::max(worst, den > 0.0 ? num / den : num);
  }
  return worst;
}

double relative_l2_error(const ResponseSet& a, const ResponseSet& ref) {
  require_same_samples(a, ref);
  const double den = ref.values.norm();
  const double num = (a.values - ref.values).norm();
  return den > 0.0 ? num / den : num;
}

std::vector<complex> log_frequency_axis(double omega_min, double omega_max, int n) {
  if (!(omega_min > 0.0) || !(omega_max >= omega_min) || n < 1)
    throw usage_error("frequency axis needs 0 < omega_min <= omega_max and n >= 1");
  std::vector<complex> s(static_cast<std::size_t>(n));
  const double a = std::log(omega_min), b = std::log(omega_max);
  for (int j = 0; j < n; ++j) {
    const double w = n == 1 ? omega_min : std::exp(a + (b - a) * j / (n - 1));
    s[static_cast<std::size_t>(j)] = complex(0.0, w);
  }
  return s;
}

std::vector<double> uniform_time_axis(double t_max, int n) {
  if (!(t_max > 0.0) || n < 1) throw usage_error("time axis needs t_max > 0 and n >= 1");
  std::vector<double> t(static_cast<std::size_t>(n), 0.0);
  for (int j = 1; j < n; ++j) t[static_cast<std::size_t>(j)] = t_max * j / (n - 1);
  return t;
}

}  // namespace ekrom
