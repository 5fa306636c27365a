#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "tweezer/error.hpp"
#include "tweezer/fitting.hpp"
#include "tweezer/pipelines.hpp"
#include "tweezer/simulator.hpp"

// JSON forms of scenarios, fits and reports. Objects are built with
// ordered_json so that field order, and therefore the serialized bytes, are
// fixed for a given input.

namespace tweezer::json_io {

using Json = nlohmann::ordered_json;

inline Json to_json(const Band& b) { return Json{{"f_min_hz", b.f_min}, {"f_max_hz", b.f_max}}; }

inline Json to_json(const FitResult& r) {
  Json params = Json::object();
  Json sigmas = Json::object();
  Json raw = Json::object();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    params[r.names[i]] = r.params[i];
    sigmas[r.names[i]] = r.param_sigma[i];
    raw[r.names[i]] = r.param_sigma_raw[i];
  }
  Json j;
  j["model"] = std::string(to_string(r.kind));
  j["params"] = params;
  j["param_sigma"] = sigmas;
  j["param_sigma_raw"] = raw;
  j["covariance"] = r.covariance;
  j["chi2"] = r.chi2;
  j["chi2_reduced"] = r.chi2_reduced;
  j["n_points"] = r.n_points;
  j["n_iterations"] = r.n_iterations;
  j["converged"] = r.converged;
  j["band"] = to_json(r.band);
  j["weight_mode"] = std::string(to_string(r.weight_mode));
  return j;
}

inline FitResult fit_from_json(const Json& j) {
  FitResult r;
  r.kind = model_kind_from_string(j.at("model").get<std::string>());
  r.names = parameter_names(r.kind);
  for (const auto& name : r.names) {
    r.params.push_back(j.at("params").at(name).get<double>());
    r.param_sigma.push_back(j.at("param_sigma").at(name).get<double>());
    r.param_sigma_raw.push_back(j.at("param_sigma_raw").at(name).get<double>());
  }
  r.covariance = j.at("covariance").get<std::vector<std::vector<double>>>();
  r.chi2 = j.at("chi2").get<double>();
  r.chi2_reduced = j.at("chi2_reduced").get<double>();
  r.n_points = j.at("n_points").get<std::size_t>();
  r.n_iterations = j.at("n_iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.band = {j.at("band").at("f_min_hz").get<double>(), j.at("band").at("f_max_hz").get<double>()};
  r.weight_mode = weight_mode_from_string(j.at("weight_mode").get<std::string>());
  return r;
}

inline Json to_json(const ApproximationDiagnostics& d) {
  Json j;
  j["power_fluctuation"] = d.power_fluctuation;
  j["power_fluctuation_se"] = d.power_fluctuation_se;
  j["centering"] = d.centering;
  j["centering_se"] = d.centering_se;
  j["cross_term"] = d.cross_term;
  j["power_flag"] = std::string(to_string(d.power_flag));
  j["centering_flag"] = std::string(to_string(d.centering_flag));
  j["overall"] = std::string(to_string(d.overall()));
  return j;
}

inline Json to_json(const CalibrationReport& r) {
  Json j;
  j["method"] = std::string(to_string(r.method));
  j["fc_hz"] = r.fc_hz;
  j["fc_sigma_hz"] = r.fc_sigma_hz;
  j["fc_sigma_raw_hz"] = r.fc_sigma_raw_hz;
  j["power_mw"] = r.power_mw ? Json(*r.power_mw) : Json(nullptr);
  j["fit"] = to_json(r.fit);
  j["spectrum"] = Json{{"n_bins", r.spectrum.size()},
                       {"n_blocks", r.spectrum.n_blocks},
                       {"block_length", r.spectrum.block_length},
                       {"resolution_hz", r.spectrum.resolution_hz()},
                       {"source_rate_hz", r.spectrum.source_rate_hz},
                       {"band", to_json(r.spectrum.band)}};
  j["guarded_samples"] = r.guarded_samples;
  j["diagnostics"] = r.diagnostics ? to_json(*r.diagnostics) : Json(nullptr);
  j["provenance"] = Json{{"input", r.input}, {"seed", r.seed ? Json(*r.seed) : Json(nullptr)}};
  return j;
}

/// Enough of a report to take part in a power sweep.
inline CalibrationReport report_from_json(const Json& j) {
  CalibrationReport r;
  r.method = method_from_string(j.at("method").get<std::string>());
  r.fc_hz = j.at("fc_hz").get<double>();
  r.fc_sigma_hz = j.at("fc_sigma_hz").get<double>();
  r.fc_sigma_raw_hz = j.value("fc_sigma_raw_hz", r.fc_sigma_hz);
  if (j.contains("power_mw") && !j.at("power_mw").is_null()) r.power_mw = j.at("power_mw").get<double>();
  r.fit = fit_from_json(j.at("fit"));
  if (j.contains("provenance")) r.input = j.at("provenance").value("input", "");
  return r;
}

inline Json to_json(const ModelComparison& c) {
  Json j;
  j["model_a"] = c.label_a;
  j["model_b"] = c.label_b;
  j["chi2_a"] = c.chi2_a;
  j["chi2_b"] = c.chi2_b;
  j["chi2_reduced_a"] = c.chi2_reduced_a;
  j["chi2_reduced_b"] = c.chi2_reduced_b;
  j["chi2_ratio"] = c.ratio;
  return j;
}

inline Json to_json(const SweepResult& s) {
  Json pts = Json::array();
  for (const auto& p : s.points) pts.push_back(Json{{"power_mw", p.x}, {"fc_hz", p.y}, {"fc_sigma_hz", p.sigma}});
  Json j;
  j["method"] = std::string(to_string(s.method));
  j["slope_hz_per_mw"] = s.slope_hz_per_mw;
  j["slope_sigma_hz_per_mw"] = s.slope_sigma;
  j["chi2"] = s.chi2;
  j["points"] = pts;
  return j;
}

// --- scenarios -------------------------------------------------------------

inline sim::NoiseSpec noise_from_json(const Json& j) {
  sim::NoiseSpec n;
  n.white_level = j.value("white_level", 0.0);
  n.pink_level = j.value("pink_level", 0.0);
  n.pink_exponent = j.value("pink_exponent", 1.0);
  if (j.contains("mains_lines")) {
    for (const auto& l : j.at("mains_lines")) {
      n.mains_lines.push_back({l.at("center_hz").get<double>(), l.at("width_hz").get<double>(),
                               l.at("height").get<double>()});
    }
  }
  n.validate();
  return n;
}

inline Json to_json(const sim::NoiseSpec& n) {
  Json lines = Json::array();
  for (const auto& l : n.mains_lines) {
    lines.push_back(Json{{"center_hz", l.center_hz}, {"width_hz", l.width_hz}, {"height", l.height}});
  }
  return Json{{"white_level", n.white_level},
              {"pink_level", n.pink_level},
              {"pink_exponent", n.pink_exponent},
              {"mains_lines", lines}};
}

inline sim::AxisParams axis_from_json(const Json& j) {
  sim::AxisParams a{j.at("fc_hz").get<double>(), j.at("diffusion").get<double>()};
  if (!(a.fc_hz > 0.0)) throw ConfigError("scenario: fc_hz must be > 0");
  if (a.diffusion < 0.0) throw ConfigError("scenario: diffusion must be >= 0");
  return a;
}

/// Parses a scenario object. Every block except "trap.radial" is optional.
inline sim::Scenario scenario_from_json(const Json& j) {
  try {
    sim::Scenario sc;
    sc.sample_rate_hz = j.value("sample_rate_hz", sc.sample_rate_hz);
    sc.n_samples = j.value("n_samples", sc.n_samples);
    sc.seed = j.value("seed", sc.seed);
    sc.laser_off = j.value("laser_off", false);
    if (!(sc.sample_rate_hz > 0.0)) throw RateError("scenario: sample_rate_hz must be > 0");
    if (sc.n_samples < 2) throw ConfigError("scenario: n_samples must be >= 2");

    if (j.contains("trap")) {
      const auto& t = j.at("trap");
      sc.trap.radial = axis_from_json(t.at("radial"));
      sc.trap.axial = t.contains("axial") ? axis_from_json(t.at("axial")) : sim::AxisParams{sc.trap.radial.fc_hz / 5.0, 0.0};
    } else if (!sc.laser_off) {
      throw ConfigError("scenario: missing 'trap' block");
    }
    if (j.contains("detector")) {
      const auto& d = j.at("detector");
      auto& det = sc.detector;
      det.alpha_x = d.value("alpha_x", det.alpha_x);
      det.alpha_s = d.value("alpha_s", det.alpha_s);
      det.alpha_0 = d.value("alpha_0", det.alpha_0);
      det.alpha_knife_x = d.value("alpha_knife_x", det.alpha_knife_x);
      det.mean_power_w = d.value("mean_power_w", det.mean_power_w);
      det.axial_power_coupling = d.value("axial_power_coupling", det.axial_power_coupling);
      det.beam_offset = d.value("beam_offset", det.beam_offset);
      if (!(det.alpha_s > 0.0) || !(det.mean_power_w > 0.0)) {
        throw ConfigError("scenario: alpha_s and mean_power_w must be > 0");
      }
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      if (n.contains("X")) sc.noise.x = noise_from_json(n.at("X"));
      if (n.contains("S")) sc.noise.s = noise_from_json(n.at("S"));
      if (n.contains("Xk")) sc.noise.xk = noise_from_json(n.at("Xk"));
    }
    if (j.contains("meta")) {
      const auto& m = j.at("meta");
      sc.meta.device = m.value("device", "");
      sc.meta.notes = m.value("notes", "");
      if (m.contains("power_mw")) sc.meta.power_mw = m.at("power_mw").get<double>();
    }
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

/// Ground truth written next to a simulated recording.
inline Json truth_json(const sim::Scenario& sc) {
  Json j;
  j["seed"] = sc.seed;
  j["sample_rate_hz"] = sc.sample_rate_hz;
  j["n_samples"] = sc.n_samples;
  j["laser_off"] = sc.laser_off;
  j["fc_radial_hz"] = sc.trap.radial.fc_hz;
  j["diffusion_radial"] = sc.trap.radial.diffusion;
  j["fc_axial_hz"] = sc.trap.axial.fc_hz;
  j["diffusion_axial"] = sc.trap.axial.diffusion;
  j["detector"] = Json{{"alpha_x", sc.detector.alpha_x},
                       {"alpha_s", sc.detector.alpha_s},
                       {"alpha_0", sc.detector.alpha_0},
                       {"alpha_knife_x", sc.detector.alpha_knife_x},
                       {"mean_power_w", sc.detector.mean_power_w},
                       {"axial_power_coupling", sc.detector.axial_power_coupling},
                       {"beam_offset", sc.detector.beam_offset}};
  j["noise"] = Json{{"X", to_json(sc.noise.x)}, {"S", to_json(sc.noise.s)}, {"Xk", to_json(sc.noise.xk)}};
  j["power_mw"] = sc.meta.power_mw ? Json(*sc.meta.power_mw) : Json(nullptr);
  return j;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace tweezer::json_io
