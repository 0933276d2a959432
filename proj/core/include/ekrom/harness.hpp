#pragma once

#include "ekrom/krylov.hpp"
#include "ekrom/response.hpp"
#include "ekrom/rom.hpp"
#include "ekrom/scenario.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ekrom {

struct RunOptions {
  bool self_convergence = false;
  bool reorthogonalize = true;
  std::optional<std::size_t> dense_cap;
  std::optional<std::uint64_t> seed;
};

/// A tolerance the run asserted, tagged with the check that produced it.
struct Check {
  std::string test;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct MethodReport {
  std::string label;  ///< "pks", "eks_i3", ...
  ErrorCurve curve;
  DecompositionDiagnostics diagnostics;  ///< of the largest basis
  Eigen::Index converged_d = -1;         ///< first d with error <= target_error, -1 if none
};

struct NamedResponse {
  std::string name;  ///< file stem
  ResponseSet response;
};

struct PhaseTime {
  std::string phase;
  double seconds = 0.0;
};

struct RunReport {
  std::string kind;  ///< "convergence", "time", "validate", or empty
  std::string scenario_name;
  std::string scenario_hash;
  std::string reference;  ///< what errors are measured against
  std::size_t unknowns = 0;
  std::vector<MethodReport> methods;
  std::vector<NamedResponse> responses;
  std::map<std::string, double> metrics;
  std::vector<Check> checks;
  std::map<std::string, double> tolerances;
  std::vector<PhaseTime> timings;  ///< recorded, never asserted

  bool passed() const;
};

/// Frequency-domain error curves for every listed method against the dense
/// stabilized oracle (or, with self_convergence, against each method's
/// largest order). config_error when N exceeds the dense cap without
/// self_convergence.
RunReport run_convergence(const Scenario& s, const RunOptions& options = {});

/// Time traces on [0, t_max] for every method and order, against the dense
/// oracle (or self-convergence); with a leapfrog section, also the
/// enlarged-domain leapfrog comparison on the pre-reflection window.
RunReport run_timedomain(const Scenario& s, const RunOptions& options = {});

/// Assembly and decomposition diagnostics only.
RunReport run_validate(const Scenario& s, const RunOptions& options = {});

struct ManifestEntry {
  std::string file;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Writes <stem>.csv + <stem>.json per response, convergence_<label>.csv per
/// method, report.json and manifest.json. io_error when `dir` exists and
/// `overwrite` is false, or on any write failure.
std::vector<ManifestEntry> emit_report(const RunReport& report, const std::filesystem::path& dir,
                                       bool overwrite = false);

}  // namespace ekrom
