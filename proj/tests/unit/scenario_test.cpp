#include "ekrom/errors.hpp"
#include "ekrom/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

namespace ekrom {
namespace {

const char* kMinimal = R"({
  "grid": {"dims": 1, "cells": [100]},
  "pml": {"cells": 10, "omega0": 0.5},
  "source": {"cell": [50]},
  "receivers": [[60]],
  "methods": {"pks": [10]}
})";

// Replaces the first occurrence of `from` in the minimal scenario.
std::string minimal_with(const std::string& from, const std::string& to) {
  std::string s = kMinimal;
  const auto at = s.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return s.replace(at, from.size(), to);
}

std::string config_message(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const config_error& e) {
    return e.what();
  }
  return "";
}

TEST(Scenario, MinimalDefaults) {
  const Scenario s = parse_scenario(kMinimal);
  EXPECT_EQ(s.name, "unnamed");
  EXPECT_EQ(s.dims, 1);
  EXPECT_EQ(s.step[0], 1.0);
  EXPECT_EQ(s.medium.preset, "homogeneous");
  EXPECT_EQ(s.medium.speed_squared, 1.0);
  EXPECT_NEAR(s.pml_strength, 3.0 * std::log(1e4) / 20.0, 1e-15);
  EXPECT_EQ(s.omega0, 0.5);
  EXPECT_EQ(s.source.amplitude, 1.0);
  EXPECT_EQ(s.source.width, 0.0);
  EXPECT_FALSE(s.wavelet.has_value());
  EXPECT_EQ(s.tolerances, default_tolerances());
  EXPECT_EQ(s.seed, 0u);
  EXPECT_EQ(s.dense_cap, 5000u);
  const Problem p = assemble_problem(s);
  EXPECT_EQ(p.op->size(), 120u);
  EXPECT_EQ(p.receivers.size(), 1u);
}

TEST(Scenario, RodLatticePreset) {
  const Scenario s = parse_scenario(R"({
    "grid": {"dims": 2, "cells": [32, 32], "step": 7.25e-8},
    "medium": {"preset": "rod_lattice", "permittivity": 11.56, "spacing": 0.58e-6, "radius_ratio": 0.18,
               "rows": 4, "cols": 4, "removed": [[1, 1]]},
    "pml": {"cells": 6},
    "source": {"cell": [4, 12]},
    "receivers": [[20, 20]],
    "frequency": {"omega_min": 9.8e14, "omega_max": 1.44e15},
    "methods": {"eks": [{"i": 1, "k": [10]}]}
  })");
  EXPECT_EQ(s.medium.preset, "rod_lattice");
  EXPECT_EQ(s.medium.lattice.permittivity, 11.56);
  EXPECT_EQ(s.medium.lattice.spacing, 0.58e-6);
  EXPECT_EQ(s.medium.lattice.radius_ratio, 0.18);
  EXPECT_EQ(s.medium.lattice.removed.size(), 1u);
  EXPECT_EQ(s.omega_min, 9.8e14);
  EXPECT_EQ(s.omega_max, 1.44e15);
  EXPECT_NEAR(s.omega0, std::sqrt(9.8e14 * 1.44e15), 1.0);
  const GridSpec g = build_grid(s);
  const MediumModel m = build_medium(s, g);
  EXPECT_EQ(m.preset, "rod_lattice");
  EXPECT_EQ(m.speed_squared.size(), g.size());
  const double c2 = 299792458.0 * 299792458.0;
  EXPECT_NEAR(m.max_speed_squared(), c2, 1e-12 * c2);
}

TEST(Scenario, UnknownKeysNameTheirPath) {
  EXPECT_NE(config_message(minimal_with(R"("cells": 10,)", R"("cells": 10, "thickness": 3,)")).find("pml.thickness"),
            std::string::npos);
  EXPECT_NE(config_message(minimal_with(R"("grid")", R"("colour": 1, "grid")")).find("colour"), std::string::npos);
  EXPECT_NE(config_message(minimal_with(R"({"pks": [10]})", R"({"pks": [10], "eks": [{"i": 2, "k": [3], "j": 1}]})"))
                .find("methods.eks[0].j"),
            std::string::npos);
}

TEST(Scenario, SchemaViolations) {
  EXPECT_THROW(parse_scenario("{not json"), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("cells": [100])", R"("cells": [0])")), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("cells": [100])", R"("cells": "many")")), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("receivers": [[60]])", R"("receivers": [[104]])")), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("receivers": [[60]])", R"("receivers": [])")), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("cell": [50])", R"("cell": [-3])")), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("pks": [10])", R"("pks": [])")), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"({"pks": [10]})", "{}")), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("omega0": 0.5)", R"("omega0": 0.0)")), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("grid")", R"("frequency": {"omega_min": 0.0, "omega_max": 1.0}, "grid")")),
               config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("grid")", R"("time": {"t_max": -1.0}, "grid")")), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("grid")", R"("tolerances": {"laplace": 0.0}, "grid")")), config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("grid")", R"("tolerances": {"nonsense": 1.0}, "grid")")), config_error);
}

TEST(Scenario, WaveletFromBand) {
  const Scenario s = parse_scenario(minimal_with(
      R"("grid")", R"("frequency": {"omega_min": 0.25, "omega_max": 0.75}, "time": {"t_max": 50, "wavelet": "band"}, "grid")"));
  ASSERT_TRUE(s.wavelet.has_value());
  const Wavelet w = Wavelet::for_band(0.25, 0.75);
  EXPECT_EQ(s.wavelet->center, w.center);
  EXPECT_EQ(s.wavelet->tau, w.tau);
  EXPECT_EQ(s.wavelet->delay, w.delay);
}

TEST(Scenario, WaveletObject) {
  const Scenario s = parse_scenario(
      minimal_with(R"("grid")", R"("time": {"t_max": 50, "wavelet": {"center": 0.5, "tau": 8}}, "grid")"));
  ASSERT_TRUE(s.wavelet.has_value());
  EXPECT_EQ(s.wavelet->center, 0.5);
  EXPECT_EQ(s.wavelet->tau, 8.0);
  EXPECT_EQ(s.wavelet->delay, 40.0);

  const Scenario banded = parse_scenario(minimal_with(
      R"("grid")",
      R"("frequency": {"omega_min": 0.25, "omega_max": 0.75}, "time": {"t_max": 50, "wavelet": {"delay": 3}}, "grid")"));
  EXPECT_EQ(banded.wavelet->center, 0.5);
  EXPECT_EQ(banded.wavelet->delay, 3.0);

  EXPECT_THROW(parse_scenario(minimal_with(R"("grid")", R"("time": {"t_max": 50, "wavelet": "band"}, "grid")")),
               config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("grid")", R"("time": {"t_max": 50, "wavelet": {"center": 1}}, "grid")")),
               config_error);
  EXPECT_THROW(parse_scenario(minimal_with(
                   R"("grid")", R"("time": {"t_max": 50, "wavelet": {"center": 1, "tau": -2}}, "grid")")),
               config_error);
  EXPECT_THROW(parse_scenario(minimal_with(R"("grid")", R"("time": {"t_max": 50, "wavelet": "ricker"}, "grid")")),
               config_error);
}

TEST(Scenario, HashIsStableAndSensitive) {
  const Scenario a = parse_scenario(kMinimal);
  const Scenario b = parse_scenario(kMinimal);
  EXPECT_EQ(canonical_json(a), canonical_json(b));
  EXPECT_EQ(scenario_hash(a), scenario_hash(b));
  EXPECT_EQ(scenario_hash(a).size(), 64u);
  const Scenario c = parse_scenario(minimal_with(R"("grid")", R"("seed": 9, "grid")"));
  EXPECT_NE(scenario_hash(a), scenario_hash(c));
}

TEST(Scenario, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Scenario, MissingFileIsAnIoError) {
  try {
    load_scenario("/nonexistent/scenario.json");
    FAIL() << "expected io_error";
  } catch (const io_error& e) {
    EXPECT_EQ(e.path(), "/nonexistent/scenario.json");
  }
}

TEST(Scenario, ShippedScenariosParse) {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(EKROM_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    const Scenario s = load_scenario(entry.path().string());
    EXPECT_FALSE(s.name.empty());
    EXPECT_NO_THROW(build_medium(s, build_grid(s)));
    ++count;
  }
  EXPECT_GE(count, 4);
}

TEST(Scenario, PresetList) {
  std::vector<std::string> names;
  for (const auto& p : medium_presets()) names.push_back(p.name);
  EXPECT_EQ(names, (std::vector<std::string>{"homogeneous", "layered", "rod_lattice"}));
}

}  // namespace
}  // namespace ekrom
