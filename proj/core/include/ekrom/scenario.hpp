#pragma once

#include "ekrom/grid.hpp"
#include "ekrom/linalg.hpp"
#include "ekrom/wavelet.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ekrom {

struct MediumSpec {
  std::string preset = "homogeneous";
  double speed_squared = 1.0;   ///< homogeneous
  int axis = 0;                 ///< layered
  std::vector<Layer> layers;    ///< layered
  RodLattice lattice;           ///< rod_lattice
};

struct SourceSpec {
  CellIndex cell;
  double amplitude = 1.0;
  double width = 0.0;  ///< Gaussian footprint in cells; 0 = point source
};

struct EksSpec {
  int i = 1;
  std::vector<int> k;
};

struct MethodsSpec {
  std::vector<int> pks;  ///< orders m
  std::vector<EksSpec> eks;
};

/// Extra real cells per side for the leapfrog reference domain.
struct LeapfrogSpec {
  bool enabled = false;
  int margin = 0;
  double dt = 0.0;  ///< 0 = half the Courant limit
};

/// Experiment description. Source and receiver cells are interior-relative.
/// Angular frequencies in rad/s, times in s, lengths in m (any consistent
/// unit system works; the analog scenarios use c = 1).
struct Scenario {
  std::string name;
  int dims = 2;
  std::array<int, 2> cells{1, 1};
  std::array<double, 2> step{1.0, 1.0};
  int pml_cells = 0;
  double pml_strength = 0.0;
  double omega0 = 0.0;  ///< resolved: geometric mean of the band unless given
  MediumSpec medium;
  SourceSpec source;
  std::vector<CellIndex> receivers;
  double omega_min = 0.0;
  double omega_max = 0.0;
  int freq_samples = 64;
  double t_max = 0.0;
  int time_samples = 0;
  std::optional<Wavelet> wavelet;  ///< time traces are impulse responses without one
  MethodsSpec methods;
  std::map<std::string, double> tolerances;
  LeapfrogSpec leapfrog;
  std::uint64_t seed = 0;
  std::size_t dense_cap = 5000;

  bool has_band() const { return omega_max > 0.0; }
  bool has_window() const { return t_max > 0.0 && time_samples > 0; }
};

/// Defaults for every tolerance key; unknown keys in a scenario are rejected.
const std::map<std::string, double>& default_tolerances();

/// JSON scenario; fills defaults and validates. config_error names the key path.
Scenario parse_scenario(std::string_view text, const std::string& origin = "<string>");
/// io_error when the file cannot be read.
Scenario load_scenario(const std::string& path);

/// Canonical JSON of the fully defaulted scenario and its SHA-256.
std::string canonical_json(const Scenario& s);
std::string scenario_hash(const Scenario& s);
std::string sha256_hex(std::string_view bytes);

GridSpec build_grid(const Scenario& s);
MediumModel build_medium(const Scenario& s, const GridSpec& grid);

struct PresetInfo {
  std::string name;
  std::string parameters;
};
std::vector<PresetInfo> medium_presets();

/// Everything assembled for one scenario. The operator lives behind a
/// shared pointer so factorizations referring to it stay valid when the
/// problem is moved.
struct Problem {
  GridSpec grid;
  MediumModel medium;
  StretchingProfile stretch;
  std::shared_ptr<const StretchedOperator> op;
  cvec b;
  std::vector<std::size_t> receivers;
};
Problem assemble_problem(const Scenario& s);

}  // namespace ekrom
