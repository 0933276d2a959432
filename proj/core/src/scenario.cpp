#include "ekrom/scenario.hpp"

#include "ekrom/errors.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ekrom {

using nlohmann::json;

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"decomposition_residual", 1e-10},
      {"orthogonality", 1e-8},
      {"band", 1e-12},
      {"target_error", 1e-4},
      {"laplace", 1e-3},
      {"leapfrog", 1e-2},
      {"self_convergence", 1e-4},
  };
  return t;
}

namespace {

/// A JSON object whose keys must all be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw config_error(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return take<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw config_error(at(key) + ": required key missing");
    return take<T>(key);
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), at(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw config_error(at(it.key()) + ": unknown key");
  }

 private:
  template <typename T>
  T take(const std::string& key) {
    seen_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw config_error(at(key) + ": wrong type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::array<int, 2> int_pair(const json& v, const std::string& path, int dims) {
  try {
    if (v.is_number_integer()) return {v.get<int>(), 1};
    const auto a = v.get<std::vector<int>>();
    if (static_cast<int>(a.size()) != dims) throw config_error(path + ": expected " + std::to_string(dims) + " entries");
    return {a[0], dims == 2 ? a[1] : 1};
  } catch (const json::exception&) {
    throw config_error(path + ": wrong type");
  }
}

std::array<double, 2> real_pair(const json& v, const std::string& path, int dims) {
  try {
    if (v.is_number()) {
      const double h = v.get<double>();
      return {h, dims == 2 ? h : 1.0};
    }
    const auto a = v.get<std::vector<double>>();
    if (static_cast<int>(a.size()) != dims) throw config_error(path + ": expected " + std::to_string(dims) + " entries");
    return {a[0], dims == 2 ? a[1] : 1.0};
  } catch (const json::exception&) {
    throw config_error(path + ": wrong type");
  }
}

CellIndex cell_of(const json& v, const std::string& path, int dims) {
  const auto c = int_pair(v, path, dims);
  return {c[0], dims == 2 ? c[1] : 0};
}

double max_speed(const MediumSpec& m) {
  if (m.preset == "homogeneous") return std::sqrt(m.speed_squared);
  if (m.preset == "layered") {
    double c2 = 0.0;
    for (const auto& l : m.layers) c2 = std::max(c2, l.speed_squared);
    return std::sqrt(c2);
  }
  const double eps = std::min(m.lattice.permittivity, m.lattice.background_permittivity);
  return m.lattice.light_speed / std::sqrt(eps);
}

void parse_medium(Section sec, MediumSpec& m, int dims) {
  m.preset = sec.get<std::string>("preset", "homogeneous");
  if (m.preset == "homogeneous") {
    m.speed_squared = sec.get<double>("speed_squared", 1.0);
    if (!(m.speed_squared > 0.0)) throw config_error(sec.at("speed_squared") + ": must be > 0");
  } else if (m.preset == "layered") {
    m.axis = sec.get<int>("axis", 0);
    if (m.axis < 0 || m.axis >= dims) throw config_error(sec.at("axis") + ": out of range");
    if (!sec.has("layers")) throw config_error(sec.at("layers") + ": required key missing");
    const json& layers = sec.raw("layers");
    if (!layers.is_array() || layers.empty()) throw config_error(sec.at("layers") + ": expected a nonempty array");
    for (std::size_t j = 0; j < layers.size(); ++j) {
      Section l(layers[j], sec.at("layers") + "[" + std::to_string(j) + "]");
      Layer layer;
      layer.start = l.require<double>("start");
      layer.speed_squared = l.require<double>("speed_squared");
      if (!(layer.speed_squared > 0.0)) throw config_error(l.at("speed_squared") + ": must be > 0");
      l.finish();
      m.layers.push_back(layer);
    }
  } else if (m.preset == "rod_lattice") {
    if (dims != 2) throw config_error(sec.at("preset") + ": rod_lattice needs dims = 2");
    RodLattice& r = m.lattice;
    r.permittivity = sec.get<double>("permittivity", r.permittivity);
    r.background_permittivity = sec.get<double>("background_permittivity", r.background_permittivity);
    r.spacing = sec.get<double>("spacing", r.spacing);
    r.radius_ratio = sec.get<double>("radius_ratio", r.radius_ratio);
    r.rows = sec.get<int>("rows", r.rows);
    r.cols = sec.get<int>("cols", r.cols);
    r.light_speed = sec.get<double>("light_speed", r.light_speed);
    r.subsamples = sec.get<int>("subsamples", r.subsamples);
    if (sec.has("origin")) r.origin = real_pair(sec.raw("origin"), sec.at("origin"), 2);
    if (sec.has("removed")) {
      try {
        r.removed = sec.raw("removed").get<std::vector<std::array<int, 2>>>();
      } catch (const json::exception&) {
        throw config_error(sec.at("removed") + ": expected [[row, col], ...]");
      }
    }
    if (!(r.permittivity > 0.0) || !(r.background_permittivity > 0.0))
      throw config_error(sec.at("permittivity") + ": must be > 0");
    if (!(r.spacing > 0.0)) throw config_error(sec.at("spacing") + ": must be > 0");
    if (!(r.radius_ratio > 0.0 && r.radius_ratio < 0.5)) throw config_error(sec.at("radius_ratio") + ": must be in (0, 0.5)");
    if (r.subsamples < 1) throw config_error(sec.at("subsamples") + ": must be >= 1");
  } else {
    throw config_error(sec.at("preset") + ": unknown medium preset '" + m.preset + "'");
  }
  sec.finish();
}

std::vector<int> positive_list(const json& v, const std::string& path) {
  std::vector<int> out;
  try {
    out = v.get<std::vector<int>>();
  } catch (const json::exception&) {
    throw config_error(path + ": expected a list of integers");
  }
  if (out.empty()) throw config_error(path + ": must not be empty");
  for (int x : out)
    if (x < 1) throw config_error(path + ": orders must be >= 1");
  return out;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(origin + ": invalid JSON: " + e.what());
  }
  Scenario s;
  Section top(root, "");
  s.name = top.get<std::string>("name", "unnamed");

  {
    if (!top.has("grid")) throw config_error("grid: required section missing");
    Section g = top.child("grid");
    s.dims = g.get<int>("dims", 2);
    if (s.dims != 1 && s.dims != 2) throw config_error("grid.dims: must be 1 or 2");
    if (!g.has("cells")) throw config_error("grid.cells: required key missing");
    s.cells = int_pair(g.raw("cells"), "grid.cells", s.dims);
    if (g.has("step")) s.step = real_pair(g.raw("step"), "grid.step", s.dims);
    for (int a = 0; a < s.dims; ++a) {
      if (s.cells[a] < 1) throw config_error("grid.cells: must be >= 1");
      if (!(s.step[a] > 0.0)) throw config_error("grid.step: must be > 0");
    }
    g.finish();
  }

  if (top.has("medium")) parse_medium(top.child("medium"), s.medium, s.dims);

  if (top.has("frequency")) {
    Section f = top.child("frequency");
    s.omega_min = f.require<double>("omega_min");
    s.omega_max = f.require<double>("omega_max");
    s.freq_samples = f.get<int>("samples", 64);
    if (!(s.omega_min > 0.0)) throw config_error("frequency.omega_min: must be > 0");
    if (!(s.omega_max >= s.omega_min)) throw config_error("frequency.omega_max: must be >= omega_min");
    if (s.freq_samples < 1) throw config_error("frequency.samples: must be >= 1");
    f.finish();
  }

  if (top.has("time")) {
    Section t = top.child("time");
    s.t_max = t.require<double>("t_max");
    s.time_samples = t.get<int>("samples", 200);
    if (!(s.t_max > 0.0)) throw config_error("time.t_max: must be > 0");
    if (s.time_samples < 2) throw config_error("time.samples: must be >= 2");
    if (t.has("wavelet")) {
      const bool band = s.has_band();
      if (t.raw("wavelet").is_string()) {
        if (t.raw("wavelet").get<std::string>() != "band") throw config_error("time.wavelet: expected \"band\" or an object");
        if (!band) throw config_error("time.wavelet: \"band\" needs a frequency section");
        s.wavelet = Wavelet::for_band(s.omega_min, s.omega_max);
      } else {
        Section w = t.child("wavelet");
        const double edge = w.get<double>("edge_level", 1e-2);
        if (!(edge > 0.0 && edge < 1.0)) throw config_error("time.wavelet.edge_level: must be in (0, 1)");
        Wavelet wl;
        if (band) wl = Wavelet::for_band(s.omega_min, s.omega_max, edge);
        else if (!w.has("center") || !w.has("tau")) throw config_error("time.wavelet: center and tau are required without a frequency section");
        wl.center = w.get<double>("center", wl.center);
        wl.tau = w.get<double>("tau", wl.tau);
        wl.delay = w.get<double>("delay", 5.0 * wl.tau);
        try {
          validate_wavelet(wl);
        } catch (const std::invalid_argument& e) {
          throw config_error(std::string("time.wavelet: ") + e.what());
        }
        w.finish();
        s.wavelet = wl;
      }
    }
    t.finish();
  }

  {
    const double hmin = s.dims == 2 ? std::min(s.step[0], s.step[1]) : s.step[0];
    if (top.has("pml")) {
      Section p = top.child("pml");
      s.pml_cells = p.get<int>("cells", 0);
      if (s.pml_cells < 0) throw config_error("pml.cells: must be >= 0");
      // target round-trip attenuation e^{-2 strength n h / (3 c)} = 1e-4 at omega0
      const double fallback = s.pml_cells > 0 ? 3.0 * max_speed(s.medium) * std::log(1e4) / (2.0 * s.pml_cells * hmin) : 0.0;
      s.pml_strength = p.get<double>("strength", fallback);
      if (!(s.pml_strength >= 0.0)) throw config_error("pml.strength: must be >= 0");
      s.omega0 = p.get<double>("omega0", 0.0);
      if (p.has("omega0") && !(s.omega0 > 0.0)) throw config_error("pml.omega0: must be > 0");
      p.finish();
    }
    if (s.omega0 == 0.0) {
      if (s.has_band()) s.omega0 = std::sqrt(s.omega_min * s.omega_max);
      else if (s.pml_cells > 0 && s.pml_strength > 0.0)
        throw config_error("pml.omega0: required when no frequency band is given");
      else s.omega0 = 1.0;
    }
  }

  {
    if (!top.has("source")) throw config_error("source: required section missing");
    Section src = top.child("source");
    if (!src.has("cell")) throw config_error("source.cell: required key missing");
    s.source.cell = cell_of(src.raw("cell"), "source.cell", s.dims);
    s.source.amplitude = src.get<double>("amplitude", 1.0);
    s.source.width = src.get<double>("width", 0.0);
    if (!(s.source.width >= 0.0)) throw config_error("source.width: must be >= 0");
    src.finish();
  }

  {
    if (!top.has("receivers")) throw config_error("receivers: required key missing");
    const json& r = top.raw("receivers");
    if (!r.is_array() || r.empty()) throw config_error("receivers: expected a nonempty array");
    for (std::size_t j = 0; j < r.size(); ++j)
      s.receivers.push_back(cell_of(r[j], "receivers[" + std::to_string(j) + "]", s.dims));
  }

  if (top.has("methods")) {
    Section m = top.child("methods");
    if (m.has("pks")) s.methods.pks = positive_list(m.raw("pks"), "methods.pks");
    if (m.has("eks")) {
      const json& e = m.raw("eks");
      if (!e.is_array()) throw config_error("methods.eks: expected an array");
      for (std::size_t j = 0; j < e.size(); ++j) {
        const std::string path = "methods.eks[" + std::to_string(j) + "]";
        Section es(e[j], path);
        EksSpec spec;
        spec.i = es.require<int>("i");
        if (spec.i < 1) throw config_error(path + ".i: must be >= 1");
        if (!es.has("k")) throw config_error(path + ".k: required key missing");
        spec.k = positive_list(es.raw("k"), path + ".k");
        es.finish();
        s.methods.eks.push_back(std::move(spec));
      }
    }
    m.finish();
  }
  if (s.methods.pks.empty() && s.methods.eks.empty()) throw config_error("methods: at least one method is required");

  s.tolerances = default_tolerances();
  if (top.has("tolerances")) {
    Section t = top.child("tolerances");
    for (auto& [key, value] : s.tolerances) {
      value = t.get<double>(key, value);
      if (!(value > 0.0)) throw config_error(t.at(key) + ": must be > 0");
    }
    t.finish();
  }

  if (top.has("leapfrog")) {
    Section l = top.child("leapfrog");
    s.leapfrog.enabled = true;
    s.leapfrog.margin = l.get<int>("margin", 0);
    s.leapfrog.dt = l.get<double>("dt", 0.0);
    if (s.leapfrog.margin < 0) throw config_error("leapfrog.margin: must be >= 0");
    if (s.leapfrog.dt < 0.0) throw config_error("leapfrog.dt: must be >= 0");
    l.finish();
  }

  s.seed = top.get<std::uint64_t>("seed", 0);
  s.dense_cap = top.get<std::size_t>("dense_cap", 5000);
  top.finish();

  // geometry checks that need the grid
  const GridSpec grid = build_grid(s);
  if (!in_interior(grid, s.source.cell)) throw config_error("source.cell: not an interior cell");
  for (std::size_t j = 0; j < s.receivers.size(); ++j)
    if (!in_interior(grid, s.receivers[j]))
      throw config_error("receivers[" + std::to_string(j) + "]: not an interior cell");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open scenario", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw io_error("failed reading scenario", path);
  return parse_scenario(buf.str(), path);
}

std::string canonical_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["grid"] = {{"dims", s.dims}, {"cells", s.cells}, {"step", s.step}};
  json med = {{"preset", s.medium.preset}};
  if (s.medium.preset == "homogeneous") med["speed_squared"] = s.medium.speed_squared;
  if (s.medium.preset == "layered") {
    med["axis"] = s.medium.axis;
    for (const auto& l : s.medium.layers) med["layers"].push_back({{"start", l.start}, {"speed_squared", l.speed_squared}});
  }
  if (s.medium.preset == "rod_lattice") {
    const RodLattice& r = s.medium.lattice;
    med["permittivity"] = r.permittivity;
    med["background_permittivity"] = r.background_permittivity;
    med["spacing"] = r.spacing;
    med["radius_ratio"] = r.radius_ratio;
    med["rows"] = r.rows;
    med["cols"] = r.cols;
    med["origin"] = r.origin;
    med["removed"] = r.removed;
    med["light_speed"] = r.light_speed;
    med["subsamples"] = r.subsamples;
  }
  j["medium"] = med;
  j["pml"] = {{"cells", s.pml_cells}, {"strength", s.pml_strength}, {"omega0", s.omega0}};
  j["source"] = {{"cell", {s.source.cell.x, s.source.cell.y}}, {"amplitude", s.source.amplitude}, {"width", s.source.width}};
  for (const auto& r : s.receivers) j["receivers"].push_back({r.x, r.y});
  j["frequency"] = {{"omega_min", s.omega_min}, {"omega_max", s.omega_max}, {"samples", s.freq_samples}};
  j["time"] = {{"t_max", s.t_max}, {"samples", s.time_samples}};
  if (s.wavelet) j["time"]["wavelet"] = {{"center", s.wavelet->center}, {"tau", s.wavelet->tau}, {"delay", s.wavelet->delay}};
  j["methods"]["pks"] = s.methods.pks;
  j["methods"]["eks"] = json::array();
  for (const auto& e : s.methods.eks) j["methods"]["eks"].push_back({{"i", e.i}, {"k", e.k}});
  j["tolerances"] = s.tolerances;
  if (s.leapfrog.enabled) j["leapfrog"] = {{"margin", s.leapfrog.margin}, {"dt", s.leapfrog.dt}};
  j["seed"] = s.seed;
  j["dense_cap"] = s.dense_cap;
  return j.dump();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw numerical_error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[digest[k] >> 4]);
    out.push_back(hex[digest[k] & 15]);
  }
  return out;
}

std::string scenario_hash(const Scenario& s) { return sha256_hex(canonical_json(s)); }

GridSpec build_grid(const Scenario& s) {
  return make_grid(s.dims, s.cells, s.step, {s.pml_cells, s.dims == 2 ? s.pml_cells : 0});
}

MediumModel build_medium(const Scenario& s, const GridSpec& grid) {
  const MediumSpec& m = s.medium;
  if (m.preset == "homogeneous") return homogeneous_medium(grid, m.speed_squared);
  if (m.preset == "layered") return layered_medium(grid, m.axis, m.layers);
  if (m.preset == "rod_lattice") return rod_lattice_medium(grid, m.lattice);
  throw config_error("medium.preset: unknown preset '" + m.preset + "'");
}

std::vector<PresetInfo> medium_presets() {
  return {
      {"homogeneous", "speed_squared (default 1)"},
      {"layered", "axis (0 = x, 1 = y), layers: [{start, speed_squared}, ...]"},
      {"rod_lattice",
       "permittivity (11.56), background_permittivity (1), spacing a (0.58e-6 m), radius_ratio (0.18), rows (7), "
       "cols (7), origin [x, y] (m), removed [[row, col], ...], light_speed (299792458), subsamples (8)"},
  };
}

Problem assemble_problem(const Scenario& s) {
  Problem p;
  p.grid = build_grid(s);
  p.medium = build_medium(s, p.grid);
  p.stretch = build_stretching(p.grid, s.omega0, s.pml_strength);
  p.op = std::make_shared<const StretchedOperator>(assemble_operator(p.grid, p.medium, p.stretch));
  p.b = assemble_source(p.grid, s.source.cell, s.source.amplitude, s.source.width);
  for (const auto& r : s.receivers) p.receivers.push_back(interior_linear(p.grid, r));
  return p;
}

}  // namespace ekrom
