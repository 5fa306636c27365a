#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "helpers.hpp"
#include "tweezer/json_io.hpp"
#include "tweezer/pipelines.hpp"

using namespace tweezer;
using json_io::Json;

namespace {

FitResult sample_fit() {
  FitResult r;
  r.kind = ModelKind::ALConst;
  r.names = parameter_names(r.kind);
  r.params = {0.97, 736.04, 2.1e-9};
  r.param_sigma = {0.012, 4.7, 3e-11};
  r.param_sigma_raw = {0.011, 4.6, 2.9e-11};
  r.covariance = {{1.44e-4, 0.03, 1e-13}, {0.03, 22.09, 2e-10}, {1e-13, 2e-10, 9e-22}};
  r.chi2 = 8097.889130548145;
  r.chi2_reduced = 8097.889130548145 / 8188.0;
  r.n_points = 8191;
  r.n_iterations = 11;
  r.converged = true;
  r.band = {0.15258789, 4999.8474};
  r.weight_mode = WeightMode::ModelRefined;
  return r;
}

}  // namespace

TEST(JsonIo, FitResultRoundTripIsExact) {
  const auto fit = sample_fit();
  const auto back = json_io::fit_from_json(Json::parse(json_io::to_json(fit).dump()));
  EXPECT_EQ(back.kind, fit.kind);
  EXPECT_EQ(back.names, fit.names);
  EXPECT_EQ(back.params, fit.params);
  EXPECT_EQ(back.param_sigma, fit.param_sigma);
  EXPECT_EQ(back.param_sigma_raw, fit.param_sigma_raw);
  EXPECT_EQ(back.covariance, fit.covariance);
  EXPECT_EQ(back.chi2, fit.chi2);
  EXPECT_EQ(back.chi2_reduced, fit.chi2_reduced);
  EXPECT_EQ(back.n_points, fit.n_points);
  EXPECT_EQ(back.n_iterations, fit.n_iterations);
  EXPECT_EQ(back.converged, fit.converged);
  EXPECT_EQ(back.band.f_min, fit.band.f_min);
  EXPECT_EQ(back.band.f_max, fit.band.f_max);
  EXPECT_EQ(back.weight_mode, fit.weight_mode);
}

TEST(JsonIo, ReportRoundTripKeepsSweepFields) {
  CalibrationReport r;
  r.method = Method::Knife;
  r.fc_hz = 741.25;
  r.fc_sigma_hz = 2.5;
  r.fc_sigma_raw_hz = 2.4;
  r.power_mw = 35.0;
  r.fit = sample_fit();
  r.input = "run.csv";
  r.seed = 9;
  const auto text = json_io::to_json(r).dump();
  const auto back = json_io::report_from_json(Json::parse(text));
  EXPECT_EQ(back.method, r.method);
  EXPECT_EQ(back.fc_hz, r.fc_hz);
  EXPECT_EQ(back.fc_sigma_hz, r.fc_sigma_hz);
  EXPECT_EQ(back.fc_sigma_raw_hz, r.fc_sigma_raw_hz);
  EXPECT_EQ(back.power_mw, r.power_mw);
  EXPECT_EQ(back.input, r.input);
  EXPECT_EQ(back.fit.params, r.fit.params);
}

TEST(JsonIo, ReportWithoutPowerReadsBackUnlabeled) {
  CalibrationReport r;
  r.fit = sample_fit();
  const auto j = json_io::to_json(r);
  EXPECT_TRUE(j.at("power_mw").is_null());
  EXPECT_TRUE(j.at("diagnostics").is_null());
  EXPECT_FALSE(json_io::report_from_json(j).power_mw.has_value());
}

TEST(JsonIo, ReportFieldOrderIsStable) {
  CalibrationReport r;
  r.fit = sample_fit();
  const auto j = json_io::to_json(r);
  std::vector<std::string> keys;
  for (const auto& item : j.items()) keys.push_back(item.key());
  const std::vector<std::string> expected{"method",     "fc_hz",           "fc_sigma_hz", "fc_sigma_raw_hz",
                                          "power_mw",   "fit",             "spectrum",    "guarded_samples",
                                          "diagnostics", "provenance"};
  EXPECT_EQ(keys, expected);
}

TEST(JsonIo, ScenarioFieldsAreRead) {
  const auto j = Json::parse(R"({
    "sample_rate_hz": 20000, "n_samples": 4096, "seed": 77,
    "trap": {"radial": {"fc_hz": 500, "diffusion": 2e-13}, "axial": {"fc_hz": 90, "diffusion": 1e-13}},
    "detector": {"alpha_x": 3e7, "alpha_s": 12, "mean_power_w": 0.02, "beam_offset": 1e-8},
    "noise": {"X": {"white_level": 1e-9, "pink_level": 2e-7, "pink_exponent": 1.5,
                    "mains_lines": [{"center_hz": 50, "width_hz": 0.5, "height": 1e-6}]}},
    "meta": {"device": "bench", "power_mw": 20}
  })");
  const auto sc = json_io::scenario_from_json(j);
  EXPECT_EQ(sc.sample_rate_hz, 20000.0);
  EXPECT_EQ(sc.n_samples, 4096u);
  EXPECT_EQ(sc.seed, 77u);
  EXPECT_EQ(sc.trap.radial.fc_hz, 500.0);
  EXPECT_EQ(sc.trap.axial.diffusion, 1e-13);
  EXPECT_EQ(sc.detector.alpha_x, 3e7);
  EXPECT_EQ(sc.detector.beam_offset, 1e-8);
  EXPECT_EQ(sc.noise.x.pink_exponent, 1.5);
  ASSERT_EQ(sc.noise.x.mains_lines.size(), 1u);
  EXPECT_EQ(sc.noise.x.mains_lines[0].center_hz, 50.0);
  EXPECT_TRUE(sc.noise.s.silent());
  EXPECT_EQ(sc.meta.device, "bench");
  EXPECT_EQ(sc.meta.power_mw, 20.0);

  // The truth sidecar carries the same values.
  const auto truth = Json::parse(json_io::truth_json(sc).dump());
  EXPECT_EQ(truth.at("seed").get<std::uint64_t>(), 77u);
  EXPECT_EQ(truth.at("fc_radial_hz").get<double>(), 500.0);
  EXPECT_EQ(truth.at("detector").at("beam_offset").get<double>(), 1e-8);
  EXPECT_EQ(json_io::noise_from_json(truth.at("noise").at("X")).mains_lines[0].height, 1e-6);
}

TEST(JsonIo, ScenarioErrorsAreConfigErrors) {
  EXPECT_THROW(json_io::scenario_from_json(Json::parse(R"({"seed": 1})")), ConfigError);
  EXPECT_THROW(json_io::scenario_from_json(Json::parse(R"({"trap": {"radial": {"fc_hz": -5, "diffusion": 1}}})")),
               ConfigError);
  EXPECT_THROW(json_io::scenario_from_json(Json::parse(R"({"trap": {"radial": {"fc_hz": 5}}})")), ConfigError);
  EXPECT_THROW(json_io::scenario_from_json(Json::parse(R"({"sample_rate_hz": 0, "trap": {"radial": {"fc_hz": 5, "diffusion": 1}}})")),
               RateError);
  EXPECT_THROW(json_io::scenario_from_json(
                   Json::parse(R"({"trap": {"radial": {"fc_hz": 5, "diffusion": 1}}, "noise": {"X": {"white_level": -1}}})")),
               SpecError);
}

TEST(JsonIo, LaserOffScenarioNeedsNoTrap) {
  const auto sc = json_io::scenario_from_json(Json::parse(R"({"laser_off": true, "noise": {"X": {"white_level": 1e-9}}})"));
  EXPECT_TRUE(sc.laser_off);
  const auto rec = sim::run_scenario([&] {
    auto s = sc;
    s.n_samples = 256;
    return s;
  }());
  EXPECT_TRUE(rec.has("X"));
}

TEST(JsonIo, FilesRoundTripAndReportBadPaths) {
  tweezer::testing::TempDir dir("json");
  const auto path = dir / "fit.json";
  json_io::write_json_file(path, json_io::to_json(sample_fit()));
  EXPECT_EQ(json_io::fit_from_json(json_io::read_json_file(path)).params, sample_fit().params);

  try {
    json_io::read_json_file(dir / "absent.json");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("absent.json"), std::string::npos);
  }
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_THROW(json_io::read_json_file(dir / "broken.json"), ConfigError);
}
