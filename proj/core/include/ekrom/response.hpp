#pragma once

#include "ekrom/grid.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ekrom {

/// Where a set of samples came from.
struct Provenance {
  std::string method;  ///< "pks", "eks", "dense", "direct", "leapfrog", "laplace"
  int k = 0;           ///< EKS block count, or m for PKS
  int i = 0;
  Eigen::Index d = 0;
  std::uint64_t matvecs = 0;
  std::uint64_t solves = 0;
  bool oracle = false;
  std::string scenario_hash;
  std::map<std::string, double> tolerances;
  std::string notes;
};

enum class Domain { time, frequency };

/// Samples x receivers. Time-domain values have zero imaginary part.
struct ResponseSet {
  Domain domain = Domain::time;
  std::vector<double> times;
  std::vector<complex> s_values;
  std::vector<std::size_t> receivers;  ///< full-grid unknown indices
  cmat values;
  Provenance provenance;

  std::size_t samples() const { return domain == Domain::time ? times.size() : s_values.size(); }
};

/// Time: "t,receiver,re,im". Frequency: "re_s,im_s,receiver,re,im". %.17g.
void write_csv(std::ostream& out, const ResponseSet& r);
/// Provenance and sample layout as a JSON object.
std::string provenance_json(const ResponseSet& r);

/// usage_error unless both sets share domain, samples (bitwise) and receivers.
void require_same_samples(const ResponseSet& a, const ResponseSet& b);

/// max over samples of ||a(s) - ref(s)||_2 / ||ref(s)||_2 (norms over receivers).
double max_relative_error(const ResponseSet& a, const ResponseSet& ref);
/// ||a - ref||_F / ||ref||_F over every sample and receiver.
double relative_l2_error(const ResponseSet& a, const ResponseSet& ref);

/// n samples log-spaced over [lo, hi] on the imaginary axis: s = i omega.
std::vector<complex> log_frequency_axis(double omega_min, double omega_max, int n);
/// n samples t_j = j T / (n - 1) (n >= 2), or {0} for n == 1.
std::vector<double> uniform_time_axis(double t_max, int n);

}  // namespace ekrom
