#include "ekrom/harness.hpp"

#include "ekrom/errors.hpp"
#include "ekrom/oracles.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <numbers>
#include <fstream>
#include <random>
#include <sstream>

namespace ekrom {

bool RunReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

namespace {

class PhaseTimer {
 public:
  explicit PhaseTimer(RunReport& r) : report_(r) {}
  template <typename F>
  auto operator()(const std::string& phase, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Record {
      RunReport& r;
      std::string phase;
      std::chrono::steady_clock::time_point t0;
      ~Record() { r.timings.push_back({phase, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}); }
    } record{report_, phase, t0};
    return f();
  }

 private:
  RunReport& report_;
};

void add_check(RunReport& r, std::string test, double value, double tolerance) {
  r.checks.push_back({std::move(test), value, tolerance, value <= tolerance});
}

std::string label_of(const Method& m) {
  return m.kind == Method::Kind::pks ? "pks" : "eks_i" + std::to_string(m.i);
}

struct MethodRun {
  Method method;
  std::vector<int> orders;
  std::optional<PolynomialBasis> pks;
  std::optional<ExtendedBasis> eks;

  const KrylovBasis& basis() const { return pks ? static_cast<const KrylovBasis&>(*pks) : *eks; }
  int max_order() const { return orders.back(); }
};

std::vector<MethodRun> planned_methods(const Scenario& s) {
  std::vector<MethodRun> out;
  auto sorted = [](std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  if (!s.methods.pks.empty()) out.push_back({{Method::Kind::pks, 0}, sorted(s.methods.pks), {}, {}});
  for (const auto& e : s.methods.eks) out.push_back({{Method::Kind::eks, e.i}, sorted(e.k), {}, {}});
  return out;
}

/// Shared setup of every run.
struct Session {
  Scenario s;
  RunOptions options;
  Problem problem;
  KrylovOptions kopt;
  std::optional<FactorizedOperator> fac;
  RunReport report;
  PhaseTimer timer{report};

  Session(const Scenario& scenario, const RunOptions& opts, std::string kind) : s(scenario), options(opts) {
    if (options.seed) s.seed = *options.seed;
    if (options.dense_cap) s.dense_cap = *options.dense_cap;
    report.kind = std::move(kind);
    report.scenario_name = s.name;
    report.scenario_hash = scenario_hash(s);
    report.tolerances = s.tolerances;
    problem = timer("assemble", [&] { return assemble_problem(s); });
    report.unknowns = problem.op->size();
    kopt.reorthogonalize = options.reorthogonalize;
  }

  const StretchedOperator& op() const { return *problem.op; }

  const FactorizedOperator& factorization() {
    if (!fac) fac = timer("factorize", [&] { return factorize(op()); });
    return *fac;
  }

  Provenance provenance() const {
    Provenance p;
    p.scenario_hash = report.scenario_hash;
    p.tolerances = s.tolerances;
    return p;
  }

  void build(MethodRun& m) {
    const std::string label = label_of(m.method);
    timer("krylov_" + label, [&] {
      if (m.method.kind == Method::Kind::pks) m.pks = pks_lanczos(op(), problem.b, m.max_order(), kopt);
      else m.eks = eks_orthogonalize(op(), factorization(), problem.b, m.max_order(), m.method.i, kopt);
      return 0;
    });
  }

  MethodReport diagnose(const MethodRun& m) {
    MethodReport mr;
    mr.label = label_of(m.method);
    mr.diagnostics = check_decomposition(m.basis(), op());
    add_check(report, "decomposition_residual/" + mr.label, mr.diagnostics.residual,
              s.tolerances.at("decomposition_residual"));
    add_check(report, "orthogonality/" + mr.label, mr.diagnostics.orthogonality, s.tolerances.at("orthogonality"));
    add_check(report, "band_structure/" + mr.label, mr.diagnostics.band_violation, s.tolerances.at("band"));
    return mr;
  }

  ErrorCurve curve(const MethodRun& m, const ResponseSet& ref) {
    return timer("rom_" + label_of(m.method), [&] {
      const std::optional<Wavelet> w = ref.domain == Domain::time ? s.wavelet : std::nullopt;
      return m.pks ? error_curve(*m.pks, m.orders, ref, provenance(), w)
                   : error_curve(*m.eks, m.orders, ref, provenance(), w);
    });
  }

  ReducedModel top_model(const MethodRun& m) {
    Provenance p = provenance();
    p.method = m.method.kind == Method::Kind::pks ? "pks" : "eks";
    p.k = m.max_order();
    p.i = m.method.i;
    p.matvecs = m.basis().cost.matvecs;
    p.solves = m.basis().cost.solves;
    return build_reduced_model(m.basis(), problem.receivers, p);
  }

  void finish_method(MethodReport mr, ErrorCurve curve, double target) {
    mr.curve = std::move(curve);
    for (const auto& pt : mr.curve.points) {
      add_check(report, "stability/" + mr.label + "/order_" + std::to_string(pt.order), -pt.min_real_eigenvalue,
                1e-12 * pt.spectral_radius);
      if (mr.converged_d < 0 && pt.error <= target) mr.converged_d = pt.d;
    }
    report.metrics["converged_d/" + mr.label] = static_cast<double>(mr.converged_d);
    report.methods.push_back(std::move(mr));
  }

  bool use_dense() const {
    const bool fits = problem.op->size() <= s.dense_cap;
    if (!fits && !options.self_convergence) {
      std::ostringstream msg;
      msg << "dense oracle infeasible: N = " << problem.op->size() << " exceeds dense_cap = " << s.dense_cap
          << " (use --self-convergence)";
      throw config_error(msg.str());
    }
    return fits && !options.self_convergence;
  }
};

Scenario enlarged_for_leapfrog(const Scenario& s, int offset) {
  Scenario big = s;
  for (int a = 0; a < s.dims; ++a) big.cells[a] = s.cells[a] + 2 * offset;
  big.pml_cells = 0;
  big.pml_strength = 0.0;
  big.source.cell.x += offset;
  if (s.dims == 2) big.source.cell.y += offset;
  for (auto& r : big.receivers) {
    r.x += offset;
    if (s.dims == 2) r.y += offset;
  }
  if (big.medium.preset == "layered")
    for (auto& l : big.medium.layers) l.start += offset * s.step[big.medium.axis];
  if (big.medium.preset == "rod_lattice") {
    big.medium.lattice.origin[0] += offset * s.step[0];
    big.medium.lattice.origin[1] += offset * s.step[1];
  }
  return big;
}

/// Earliest arrival of a wall reflection at any receiver (image sources on
/// the four Dirichlet walls, shortened by the source footprint).
double reflection_time(const Scenario& big, double c_max) {
  const int nx = big.cells[0];
  const int ny = big.dims == 2 ? big.cells[1] : 1;
  const double hx = big.step[0], hy = big.step[1];
  const double reach = std::ceil(4.0 * big.source.width);
  const double sx = big.source.cell.x, sy = big.source.cell.y;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : big.receivers) {
    const double rx = r.x, ry = r.y;
    std::vector<std::array<double, 2>> images{{-2.0 - sx, sy}, {2.0 * nx - sx, sy}};
    if (big.dims == 2) {
      images.push_back({sx, -2.0 - sy});
      images.push_back({sx, 2.0 * ny - sy});
    }
    for (const auto& im : images) {
      const double dx = (rx - im[0]) * hx, dy = (ry - im[1]) * hy;
      const double dist = std::sqrt(dx * dx + dy * dy) - reach * std::max(hx, big.dims == 2 ? hy : hx);
      best = std::min(best, dist / c_max);
    }
  }
  return best;
}

}  // namespace

RunReport run_convergence(const Scenario& scenario, const RunOptions& options) {
  if (!scenario.has_band()) throw config_error("frequency: run-convergence needs a frequency band");
  Session ses(scenario, options, "convergence");
  const Scenario& s = ses.s;
  const std::vector<complex> s_values = log_frequency_axis(s.omega_min, s.omega_max, s.freq_samples);
  const bool dense = ses.use_dense();
  std::optional<ResponseSet> oracle;
  if (dense) {
    const DenseOracle o = ses.timer("dense_oracle", [&] { return make_dense_oracle(ses.op(), s.dense_cap); });
    oracle = dense_freq_solution(o, ses.problem.b, s_values, ses.problem.receivers);
    oracle->provenance.scenario_hash = ses.report.scenario_hash;
    oracle->provenance.tolerances = s.tolerances;
    ses.report.responses.push_back({"oracle_freq", *oracle});
    // PML floor: stabilized field vs the plain shifted solve at the match frequency
    const std::vector<complex> s0{complex(0.0, s.omega0)};
    const ResponseSet a = dense_freq_solution(o, ses.problem.b, s0, ses.problem.receivers);
    const ResponseSet b = ses.timer("direct_solve", [&] { return direct_freq_response(ses.op(), ses.problem.b, s0, ses.problem.receivers); });
    ses.report.metrics["pml_floor"] = max_relative_error(b, a);
    ses.report.reference = "dense stabilized oracle, u(s) = -1/2 [B^-1 (B + s)^-1 + conj(B)^-1 (conj(B) + s)^-1] b, B = sqrt(-A)";
  } else {
    ses.report.reference = "self-convergence: each method against its own largest order";
  }
  const double target = dense ? s.tolerances.at("target_error") : s.tolerances.at("self_convergence");

  for (MethodRun& m : planned_methods(s)) {
    ses.build(m);
    MethodReport mr = ses.diagnose(m);
    const ReducedModel top = ses.top_model(m);
    ResponseSet top_response = eval_freq(top, s_values);
    ses.report.responses.push_back({mr.label + "_freq", top_response});
    const ResponseSet& ref = dense ? *oracle : top_response;
    ErrorCurve curve = ses.curve(m, ref);
    ses.finish_method(std::move(mr), std::move(curve), target);
  }
  return std::move(ses.report);
}

RunReport run_timedomain(const Scenario& scenario, const RunOptions& options) {
  if (!scenario.has_window()) throw config_error("time: run-time needs a time window");
  Session ses(scenario, options, "time");
  const Scenario& s = ses.s;
  const std::vector<double> times = uniform_time_axis(s.t_max, s.time_samples);
  const bool dense = ses.use_dense();
  std::optional<ResponseSet> oracle;
  if (dense) {
    const DenseOracle o = ses.timer("dense_oracle", [&] { return make_dense_oracle(ses.op(), s.dense_cap); });
    oracle = s.wavelet ? dense_time_solution(o, ses.problem.b, times, ses.problem.receivers, *s.wavelet)
                       : dense_time_solution(o, ses.problem.b, times, ses.problem.receivers);
    oracle->provenance.scenario_hash = ses.report.scenario_hash;
    oracle->provenance.tolerances = s.tolerances;
    ses.report.responses.push_back({"oracle_time", *oracle});
    ses.report.reference = "dense stabilized oracle, u(t) = -Re[B^-1 exp(-B t)] b, B = sqrt(-A)";
    if (s.wavelet) ses.report.reference += ", convolved with the source wavelet";
  } else {
    ses.report.reference = "self-convergence: each method against its own largest order";
  }
  const double target = dense ? s.tolerances.at("target_error") : s.tolerances.at("self_convergence");

  std::vector<ReducedModel> tops;
  std::vector<std::string> labels;
  for (MethodRun& m : planned_methods(s)) {
    ses.build(m);
    MethodReport mr = ses.diagnose(m);
    tops.push_back(ses.top_model(m));
    labels.push_back(mr.label);
    ResponseSet top_response = s.wavelet ? eval_time(tops.back(), times, *s.wavelet) : eval_time(tops.back(), times);
    ses.report.responses.push_back({mr.label + "_time", top_response});
    const ResponseSet& ref = dense ? *oracle : top_response;
    ErrorCurve curve = ses.curve(m, ref);
    ses.finish_method(std::move(mr), std::move(curve), target);
  }

  if (s.wavelet) {
    // eval_freq times the wavelet spectrum, inverted on a vertical contour
    const double gamma = 2.0 / s.t_max;
    const double dw = 2.0 * std::numbers::pi / (10.0 * s.t_max);
    const int count = static_cast<int>(std::ceil((s.wavelet->center + 6.0 / s.wavelet->tau) / dw)) + 1;
    const std::vector<complex> contour = laplace_contour(gamma, dw, count);
    for (std::size_t j = 0; j < tops.size(); ++j) {
      ResponseSet freq = eval_freq(tops[j], contour);
      for (Eigen::Index q = 0; q < freq.values.rows(); ++q)
        freq.values.row(q) *= s.wavelet->laplace(contour[static_cast<std::size_t>(q)]);
      const LaplaceInversion inv = laplace_inversion_check(freq, times, s.tolerances.at("laplace"));
      const ResponseSet direct = eval_time(tops[j], times, *s.wavelet);
      add_check(ses.report, "laplace/" + labels[j], relative_l2_error(inv.traces, direct), s.tolerances.at("laplace"));
      ses.report.metrics["laplace_quadrature_estimate/" + labels[j]] = inv.error_estimate;
    }
  }

  if (s.leapfrog.enabled) {
    const int offset = s.pml_cells + s.leapfrog.margin;
    const Scenario big = enlarged_for_leapfrog(s, offset);
    const Problem bp = assemble_problem(big);
    const double c_max = std::sqrt(bp.medium.max_speed_squared());
    const double limit = courant_limit(bp.grid, bp.medium);
    const double dt = s.leapfrog.dt > 0.0 ? s.leapfrog.dt : 0.5 * limit;
    const double window = std::min(s.t_max, reflection_time(big, c_max));
    ses.report.metrics["leapfrog_window"] = window;
    ses.report.metrics["leapfrog_dt"] = dt;
    if (window > dt) {
      const int steps = static_cast<int>(std::floor(window / dt));
      LeapfrogResult lf = ses.timer("leapfrog", [&] { return leapfrog_reference(bp.grid, bp.medium, bp.b, dt, steps, bp.receivers, s.wavelet); });
      lf.traces.receivers = ses.problem.receivers;  // same physical points on the original grid
      lf.traces.provenance.scenario_hash = ses.report.scenario_hash;
      if (std::isfinite(lf.energy_drift)) {
        ses.report.metrics["leapfrog_energy_drift"] = lf.energy_drift;
        add_check(ses.report, "leapfrog_energy", lf.energy_drift, 1e-6);
      }
      ses.report.responses.push_back({"leapfrog_time", lf.traces});
      for (std::size_t j = 0; j < tops.size(); ++j) {
        const ResponseSet rom =
            s.wavelet ? eval_time(tops[j], lf.traces.times, *s.wavelet) : eval_time(tops[j], lf.traces.times);
        add_check(ses.report, "leapfrog/" + labels[j], relative_l2_error(rom, lf.traces), s.tolerances.at("leapfrog"));
      }
    } else {
      warn("leapfrog window is empty: wall reflections arrive before the first step");
    }
  }
  return std::move(ses.report);
}

RunReport run_validate(const Scenario& scenario, const RunOptions& options) {
  Session ses(scenario, options, "validate");
  const Scenario& s = ses.s;
  const StretchedOperator& op = ses.op();
  add_check(ses.report, "symmetry", op.symmetry_defect(), 1e-14);

  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> g;
  auto random_vec = [&] {
    cvec v(static_cast<Eigen::Index>(op.size()));
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = complex(g(rng), g(rng));
    return v;
  };
  const cvec x = random_vec(), y = random_vec();
  const cvec& m = op.symmetrizer();
  const double gap = std::abs(bilinear(op.matrix() * x, y, m) - bilinear(x, op.matrix() * y, m));
  const double scale = std::pow(std::max(x.norm(), y.norm()), 2) * op.norm_inf() * m.cwiseAbs().maxCoeff();
  add_check(ses.report, "self_adjoint", gap / scale, 1e-12);

  bool needs_fac = !s.methods.eks.empty();
  if (needs_fac) {
    const auto& st = ses.factorization().stats();
    ses.report.metrics["lu_nonzeros"] = static_cast<double>(st.nonzeros_l + st.nonzeros_u);
    ses.report.metrics["lu_pivot_ratio"] = st.min_pivot / st.max_pivot;
  }
  for (MethodRun& m_run : planned_methods(s)) {
    ses.build(m_run);
    MethodReport mr = ses.diagnose(m_run);
    mr.curve.method = m_run.method;
    ses.report.methods.push_back(std::move(mr));
  }
  ses.report.reference = "none (diagnostics only)";
  return std::move(ses.report);
}

namespace {

nlohmann::ordered_json report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = r.kind;
  j["scenario"] = r.scenario_name;
  j["scenario_hash"] = r.scenario_hash;
  j["unknowns"] = r.unknowns;
  j["reference"] = r.reference;
  j["methods"] = nlohmann::ordered_json::array();
  for (const auto& m : r.methods) {
    nlohmann::ordered_json mj;
    mj["label"] = m.label;
    mj["i"] = m.curve.method.i;
    mj["error_definition"] = m.curve.error_definition;
    mj["converged_d"] = m.converged_d;
    mj["diagnostics"] = {{"residual", m.diagnostics.residual},
                         {"orthogonality", m.diagnostics.orthogonality},
                         {"delta_mismatch", m.diagnostics.delta_mismatch},
                         {"norm_defect", m.diagnostics.norm_defect},
                         {"band_violation", m.diagnostics.band_violation},
                         {"projection", m.diagnostics.projection}};
    mj["points"] = nlohmann::ordered_json::array();
    for (const auto& p : m.curve.points)
      mj["points"].push_back({{"order", p.order},
                              {"d", p.d},
                              {"error", p.error},
                              {"matvecs", p.matvecs},
                              {"solves", p.solves},
                              {"min_re_eig", p.min_real_eigenvalue},
                              {"spectral_radius", p.spectral_radius}});
    j["methods"].push_back(mj);
  }
  j["metrics"] = r.metrics;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks)
    j["checks"].push_back({{"test", c.test}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed}});
  j["tolerances"] = r.tolerances;
  j["responses"] = nlohmann::ordered_json::array();
  for (const auto& n : r.responses) j["responses"].push_back(n.name);
  j["timings"] = nlohmann::ordered_json::array();
  for (const auto& t : r.timings) j["timings"].push_back({{"phase", t.phase}, {"seconds", t.seconds}});
  return j;
}

std::string convergence_csv(const MethodReport& m) {
  std::ostringstream out;
  out << "method,i,order,d,error,matvecs,solves,min_re_eig,spectral_radius\n";
  char buf[64];
  for (const auto& p : m.curve.points) {
    out << m.label << ',' << m.curve.method.i << ',' << p.order << ',' << p.d << ',';
    std::snprintf(buf, sizeof buf, "%.17g", p.error);
    out << buf << ',' << p.matvecs << ',' << p.solves << ',';
    std::snprintf(buf, sizeof buf, "%.17g", p.min_real_eigenvalue);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", p.spectral_radius);
    out << buf << '\n';
  }
  return out.str();
}

}  // namespace

std::vector<ManifestEntry> emit_report(const RunReport& report, const std::filesystem::path& dir, bool overwrite) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(dir, ec) && !overwrite)
    throw io_error("output directory already exists (pass --overwrite to replace its files)", dir.string());
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory: " + ec.message(), dir.string());

  std::vector<ManifestEntry> manifest;
  auto write = [&](const std::string& name, const std::string& content, bool listed = true) {
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing", path.string());
    out << content;
    out.close();
    if (!out) throw io_error("write failed", path.string());
    if (listed) manifest.push_back({name, sha256_hex(content), content.size()});
  };

  for (const auto& m : report.methods) {
    if (m.curve.points.empty()) continue;
    write("convergence_" + m.label + ".csv", convergence_csv(m));
    nlohmann::ordered_json side;
    side["method"] = m.label;
    side["i"] = m.curve.method.i;
    side["scenario_hash"] = report.scenario_hash;
    side["reference"] = report.reference;
    side["error_definition"] = m.curve.error_definition;
    side["tolerances"] = report.tolerances;
    write("convergence_" + m.label + ".json", side.dump(2) + "\n");
  }
  for (const auto& r : report.responses) {
    std::ostringstream csv;
    write_csv(csv, r.response);
    write(r.name + ".csv", csv.str());
    write(r.name + ".json", provenance_json(r.response) + "\n");
  }
  write("report.json", report_json(report).dump(2) + "\n");

  nlohmann::ordered_json mj;
  mj["files"] = nlohmann::ordered_json::array();
  for (const auto& e : manifest) mj["files"].push_back({{"file", e.file}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  write("manifest.json", mj.dump(2) + "\n", false);
  return manifest;
}

}  // namespace ekrom
