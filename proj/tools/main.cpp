// ekrom command line: scenario runs, diagnostics and report emission.

#include "ekrom/errors.hpp"
#include "ekrom/harness.hpp"
#include "ekrom/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

enum ExitCode { ok = 0, failure = 1, config = 2, numerical = 3, io = 4 };

struct Flags {
  std::string scenario;
  std::string out;
  bool overwrite = false;
  std::size_t dense_cap = 0;
  bool self_convergence = false;
  bool no_reorth = false;
  std::uint64_t seed = 0;
};

void add_run_flags(CLI::App* cmd, Flags& f, bool with_out) {
  cmd->add_option("scenario", f.scenario, "scenario JSON file")->required();
  if (with_out) {
    cmd->add_option("--out", f.out, "output directory for CSV/JSON reports");
    cmd->add_flag("--overwrite", f.overwrite, "replace files in an existing output directory");
  }
  cmd->add_option("--dense-cap", f.dense_cap, "largest N for the dense oracle (default: scenario, 5000)");
  cmd->add_flag("--self-convergence", f.self_convergence, "measure errors against each method's largest order");
  cmd->add_flag("--no-reorth", f.no_reorth, "disable the full reorthogonalization pass");
  cmd->add_option("--seed", f.seed, "override the scenario seed");
}

ekrom::RunOptions options_from(const Flags& f, const CLI::App* cmd) {
  ekrom::RunOptions o;
  o.self_convergence = f.self_convergence;
  o.reorthogonalize = !f.no_reorth;
  if (cmd->count("--dense-cap")) o.dense_cap = f.dense_cap;
  if (cmd->count("--seed")) o.seed = f.seed;
  return o;
}

void print_report(const ekrom::RunReport& r) {
  std::printf("scenario %s (%s), N = %zu\n", r.scenario_name.c_str(), r.scenario_hash.substr(0, 12).c_str(), r.unknowns);
  std::printf("reference: %s\n", r.reference.c_str());
  for (const auto& m : r.methods) {
    std::printf("\n%s  residual %.2e  orthogonality %.2e  band %.2e\n", m.label.c_str(), m.diagnostics.residual,
                m.diagnostics.orthogonality, m.diagnostics.band_violation);
    if (m.curve.points.empty()) continue;
    std::printf("  %6s %6s %12s %8s %6s\n", "order", "d", "error", "matvecs", "solves");
    for (const auto& p : m.curve.points)
      std::printf("  %6d %6ld %12.4e %8llu %6llu\n", p.order, static_cast<long>(p.d), p.error,
                  static_cast<unsigned long long>(p.matvecs), static_cast<unsigned long long>(p.solves));
  }
  if (!r.metrics.empty()) {
    std::printf("\n");
    for (const auto& [k, v] : r.metrics) std::printf("%s = %.6g\n", k.c_str(), v);
  }
  std::size_t failed = 0;
  for (const auto& c : r.checks)
    if (!c.passed) {
      ++failed;
      std::printf("FAILED %s: %.3e > %.3e\n", c.test.c_str(), c.value, c.tolerance);
    }
  std::printf("\n%zu checks, %zu failed\n", r.checks.size(), failed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stabilized polynomial and extended Krylov reduced-order models"};
  app.require_subcommand(1);
  Flags f;
  auto* conv = app.add_subcommand("run-convergence", "frequency-domain error curves");
  auto* time = app.add_subcommand("run-time", "time-domain traces and error curves");
  auto* validate = app.add_subcommand("validate", "assembly and Krylov diagnostics only");
  auto* presets = app.add_subcommand("list-presets", "list medium presets");
  add_run_flags(conv, f, true);
  add_run_flags(time, f, true);
  add_run_flags(validate, f, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config;
  }

  try {
    if (presets->parsed()) {
      for (const auto& p : ekrom::medium_presets()) std::printf("%-12s %s\n", p.name.c_str(), p.parameters.c_str());
      return ok;
    }
    CLI::App* cmd = conv->parsed() ? conv : time->parsed() ? time : validate;
    const ekrom::Scenario s = ekrom::load_scenario(f.scenario);
    const ekrom::RunOptions o = options_from(f, cmd);
    ekrom::RunReport r;
    if (cmd == conv) r = ekrom::run_convergence(s, o);
    else if (cmd == time) r = ekrom::run_timedomain(s, o);
    else r = ekrom::run_validate(s, o);
    print_report(r);
    if (!f.out.empty()) {
      const auto manifest = ekrom::emit_report(r, f.out, f.overwrite);
      std::printf("wrote %zu files to %s\n", manifest.size() + 1, f.out.c_str());
    }
    return r.passed() ? ok : failure;
  } catch (const ekrom::config_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return config;
  } catch (const ekrom::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return numerical;
  } catch (const ekrom::io_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return io;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return config;
  }
}
