// tweezer: command-line front end for simulation, spectral estimation,
// fitting and trap calibration.
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or input error.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tweezer/fitting.hpp"
#include "tweezer/json_io.hpp"
#include "tweezer/pipelines.hpp"
#include "tweezer/recording_io.hpp"
#include "tweezer/simulator.hpp"
#include "tweezer/spectrum.hpp"

namespace fs = std::filesystem;
using tweezer::json_io::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitInput = 2;

// Options shared by the subcommands that read a recording.
struct RecordingArgs {
  std::string channels;
  std::optional<double> rate_hz;
};

struct BandArgs {
  std::optional<double> fmin_hz;
  std::optional<double> fmax_hz;
};

void add_recording_options(CLI::App* cmd, RecordingArgs& args) {
  cmd->add_option("--channels", args.channels,
                  "column map, e.g. X=0,S=1,Xk=2 (indices) or X=x_volts (header names); "
                  "defaults to every header column under its own name");
  cmd->add_option("--rate-hz", args.rate_hz, "sample rate; defaults to a '# sample_rate_hz:' comment in the file")
      ->check(CLI::PositiveNumber);
}

void add_band_options(CLI::App* cmd, BandArgs& band) {
  cmd->add_option("--fmin-hz", band.fmin_hz, "lower edge of the fit band");
  cmd->add_option("--fmax-hz", band.fmax_hz, "upper edge of the fit band");
}

// Fit controls shared by fit, compare, calibrate and sweep.
struct FitControls {
  std::string weight_mode = "data";
  int max_iterations = 200;
  double step_tol = 1e-8;
  double chi2_tol = 1e-10;
  bool log_space = false;
  std::vector<double> lower;
  std::vector<double> upper;

  tweezer::FitOptions options() const {
    tweezer::FitOptions o;
    o.weight_mode = tweezer::weight_mode_from_string(weight_mode);
    o.max_iterations = max_iterations;
    o.rel_step_tol = step_tol;
    o.rel_chi2_tol = chi2_tol;
    o.log_space = log_space;
    o.lower = lower;
    o.upper = upper;
    return o;
  }
};

FitControls refined_controls() {
  FitControls f;
  f.weight_mode = "model_refined";
  return f;
}

void add_fit_options(CLI::App* cmd, FitControls& f) {
  cmd->add_option("--weight-mode", f.weight_mode, "data or model_refined")->capture_default_str();
  cmd->add_option("--max-iterations", f.max_iterations, "iteration cap of the fit")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--step-tol", f.step_tol, "relative parameter step that ends the fit")->capture_default_str();
  cmd->add_option("--chi2-tol", f.chi2_tol, "relative chi2 decrease that ends the fit")->capture_default_str();
  cmd->add_flag("--log-space", f.log_space, "iterate amplitudes and corner frequencies in log space");
  cmd->add_option("--lower", f.lower, "lower parameter bounds, comma separated")->delimiter(',');
  cmd->add_option("--upper", f.upper, "upper parameter bounds, comma separated")->delimiter(',');
}

tweezer::Recording read_recording(const std::string& path, const RecordingArgs& args) {
  if (!fs::exists(path)) throw tweezer::ConfigError("input file '" + path + "' does not exist");
  const auto header = tweezer::inspect_recording(path);
  tweezer::ChannelSchema schema;
  if (!args.channels.empty()) {
    schema = tweezer::parse_channel_schema(args.channels);
  } else if (!header.column_names.empty()) {
    schema = tweezer::schema_from_names(header.column_names);
  } else {
    throw tweezer::SchemaError("'" + path + "' has no header line; pass --channels");
  }
  const auto rate = args.rate_hz ? args.rate_hz : header.sample_rate_hz;
  if (!rate) throw tweezer::RateError("'" + path + "' does not declare its sample rate; pass --rate-hz");
  return tweezer::load_recording(path, schema, *rate);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw tweezer::ConfigError("cannot write '" + path + "'");
  std::fputs(text.c_str(), f);
  std::fputc('\n', f);
  std::fclose(f);
}

void emit(const std::string& path, Json j, bool timestamp) {
  if (timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["timestamp"] = buf;
  }
  write_text(path, j.dump(2));
}

void require_distinct(const std::string& input, const std::string& output) {
  if (!input.empty() && !output.empty() && output != "-" && fs::exists(input) && fs::exists(output) &&
      fs::equivalent(input, output)) {
    throw tweezer::ConfigError("input and output paths must differ");
  }
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string output;
  std::string truth;
  std::optional<std::uint64_t> seed;
  bool laser_off = false;
  int digits = 9;
};

int run_simulate(const SimulateArgs& a) {
  if (!fs::exists(a.scenario)) throw tweezer::ConfigError("scenario file '" + a.scenario + "' does not exist");
  auto sc = tweezer::json_io::scenario_from_json(tweezer::json_io::read_json_file(a.scenario));
  if (a.seed) sc.seed = *a.seed;
  if (a.laser_off) sc.laser_off = true;
  const auto rec = tweezer::sim::run_scenario(sc);
  tweezer::export_recording(a.output, rec, a.digits);
  const std::string truth = a.truth.empty() ? a.output + ".truth.json" : a.truth;
  tweezer::json_io::write_json_file(truth, tweezer::json_io::truth_json(sc));
  return kExitOk;
}

// --- psd -----------------------------------------------------------------------

struct PsdArgs {
  std::string input;
  std::string output;
  RecordingArgs rec;
  BandArgs band;
  std::string channel;
  std::string method;
  std::size_t blocks = 64;
  bool experimental_single_channel = false;
};

int run_psd(const PsdArgs& a) {
  require_distinct(a.input, a.output);
  const auto rec = read_recording(a.input, a.rec);
  std::optional<tweezer::TimeSeries> series;
  std::string label;
  if (!a.method.empty()) {
    tweezer::CalibrationConfig cfg;
    cfg.method = tweezer::method_from_string(a.method);
    cfg.experimental_single_channel = a.experimental_single_channel;
    series.emplace(tweezer::method_proxy(rec, cfg).series);
    label = a.method;
  } else {
    const std::string name = a.channel.empty() ? rec.channel_names().front() : a.channel;
    series.emplace(rec.channel(name));
    label = name;
  }
  auto spec = tweezer::bartlett_psd(*series, a.blocks);
  if (a.band.fmin_hz || a.band.fmax_hz) {
    spec = tweezer::band_mask(spec, a.band.fmin_hz.value_or(spec.freqs_hz.front()),
                              a.band.fmax_hz.value_or(spec.nyquist_hz()));
  }
  spec.label = label;
  tweezer::export_spectrum(a.output, spec);
  return kExitOk;
}

// --- fit / compare on spectrum files ----------------------------------------------

struct SpectrumFitArgs {
  std::string input;
  std::string output;
  std::string dark;
  BandArgs band;
  std::optional<double> rate_hz;
  FitControls fit;
  std::string model_out;
};

struct LoadedSpectrum {
  tweezer::Spectrum spectrum;
  std::shared_ptr<const tweezer::Spectrum> dark;
  double rate_hz = 0.0;
};

LoadedSpectrum read_spectrum(const SpectrumFitArgs& a) {
  if (!fs::exists(a.input)) throw tweezer::ConfigError("input file '" + a.input + "' does not exist");
  LoadedSpectrum out;
  out.spectrum = tweezer::load_spectrum(a.input);
  out.spectrum = tweezer::band_mask(out.spectrum, a.band.fmin_hz.value_or(out.spectrum.freqs_hz.front()),
                                    a.band.fmax_hz.value_or(tweezer::highest_full_bin_hz(out.spectrum)));
  out.rate_hz = a.rate_hz.value_or(out.spectrum.source_rate_hz);
  if (!a.dark.empty()) {
    if (!fs::exists(a.dark)) throw tweezer::ConfigError("dark spectrum '" + a.dark + "' does not exist");
    out.dark = std::make_shared<tweezer::Spectrum>(tweezer::load_spectrum(a.dark));
  }
  return out;
}

tweezer::FitResult fit_one(const LoadedSpectrum& s, tweezer::ModelKind kind, const FitControls& controls) {
  if (kind == tweezer::ModelKind::ALDark && !s.dark) {
    throw tweezer::ConfigError("model al_dark needs a dark spectrum (--dark)");
  }
  tweezer::ModelSpec spec{kind, s.rate_hz, s.dark, false};
  return tweezer::fit_model(s.spectrum, spec, controls.options());
}

void dump_model(const std::string& path, const LoadedSpectrum& s, const tweezer::FitResult& fit) {
  if (path.empty()) return;
  tweezer::ModelSpec spec{fit.kind, s.rate_hz, s.dark, false};
  tweezer::export_spectrum(path, s.spectrum, tweezer::model_eval(spec, fit.params, s.spectrum.freqs_hz));
}

struct FitArgs {
  SpectrumFitArgs common;
  std::string model = "al_const";
  bool timestamp = false;
};

int run_fit(const FitArgs& a) {
  require_distinct(a.common.input, a.common.output);
  const auto s = read_spectrum(a.common);
  const auto fit = fit_one(s, tweezer::model_kind_from_string(a.model), a.common.fit);
  dump_model(a.common.model_out, s, fit);
  emit(a.common.output, tweezer::json_io::to_json(fit), a.timestamp);
  return kExitOk;
}

struct CompareArgs {
  SpectrumFitArgs common;
  std::string model_a = "al_const";
  std::string model_b = "al_dark";
  std::string fit_a;
  std::string fit_b;
  bool timestamp = false;
};

int run_compare(const CompareArgs& a) {
  const auto s = read_spectrum(a.common);
  tweezer::FitResult fa, fb;
  if (!a.fit_a.empty() || !a.fit_b.empty()) {
    if (a.fit_a.empty() || a.fit_b.empty()) throw tweezer::ConfigError("--fit-a and --fit-b go together");
    fa = tweezer::json_io::fit_from_json(tweezer::json_io::read_json_file(a.fit_a));
    fb = tweezer::json_io::fit_from_json(tweezer::json_io::read_json_file(a.fit_b));
  } else {
    fa = fit_one(s, tweezer::model_kind_from_string(a.model_a), a.common.fit);
    fb = fit_one(s, tweezer::model_kind_from_string(a.model_b), a.common.fit);
  }
  const auto cmp = tweezer::compare_models(s.spectrum, fa, fb);
  Json j = tweezer::json_io::to_json(cmp);
  j["fit_a"] = tweezer::json_io::to_json(fa);
  j["fit_b"] = tweezer::json_io::to_json(fb);
  emit(a.common.output, std::move(j), a.timestamp);
  return kExitOk;
}

// --- calibrate / sweep ------------------------------------------------------------

struct CalibrateArgs {
  RecordingArgs rec;
  BandArgs band;
  std::string method = "mean";
  std::size_t blocks = 64;
  std::string dark;
  std::string model;
  std::optional<double> power_mw;
  std::optional<std::uint64_t> seed;
  FitControls fit = refined_controls();
  bool experimental_single_channel = false;
  std::string x_channel = "X";
  std::string s_channel = "S";
  std::string knife_channel = "Xk";
};

tweezer::CalibrationConfig make_config(const CalibrateArgs& a) {
  tweezer::CalibrationConfig cfg;
  cfg.method = tweezer::method_from_string(a.method);
  cfg.n_blocks = a.blocks;
  cfg.f_min_hz = a.band.fmin_hz;
  cfg.f_max_hz = a.band.fmax_hz;
  if (!a.model.empty()) cfg.model_override = tweezer::model_kind_from_string(a.model);
  cfg.fit = a.fit.options();
  cfg.experimental_single_channel = a.experimental_single_channel;
  cfg.x_channel = a.x_channel;
  cfg.s_channel = a.s_channel;
  cfg.knife_channel = a.knife_channel;
  const auto kind = cfg.model_override.value_or(tweezer::default_model(cfg.method));
  if (kind == tweezer::ModelKind::ALDark) {
    if (a.dark.empty()) throw tweezer::ConfigError("dark recording required for the noise method (--dark)");
    cfg.dark = std::make_shared<tweezer::Recording>(read_recording(a.dark, a.rec));
  }
  return cfg;
}

tweezer::CalibrationReport calibrate_file(const std::string& path, const CalibrateArgs& a,
                                          const tweezer::CalibrationConfig& cfg) {
  const auto rec = read_recording(path, a.rec);
  auto report = tweezer::calibrate(rec, cfg);
  if (a.power_mw) report.power_mw = a.power_mw;
  report.input = fs::path(path).filename().string();
  report.seed = a.seed;
  return report;
}

struct CalibrateCmd {
  CalibrateArgs args;
  std::string input;
  std::string output;
  std::string spectrum_out;
  bool timestamp = false;
};

int run_calibrate(const CalibrateCmd& c) {
  require_distinct(c.input, c.output);
  const auto cfg = make_config(c.args);
  const auto report = calibrate_file(c.input, c.args, cfg);
  if (!c.spectrum_out.empty()) tweezer::export_spectrum(c.spectrum_out, report.spectrum, report.model_curve());
  emit(c.output, tweezer::json_io::to_json(report), c.timestamp);
  return kExitOk;
}

struct SweepCmd {
  CalibrateArgs args;
  std::vector<std::string> inputs;
  std::string output;
  std::size_t jobs = 1;
  bool timestamp = false;
};

// Calibrates every recording (or reads every report JSON) into a slot of
// its own, so the result does not depend on the number of workers.
int run_sweep(const SweepCmd& c) {
  const std::size_t n = c.inputs.size();
  std::vector<std::optional<tweezer::CalibrationReport>> reports(n);
  std::vector<std::exception_ptr> errors(n);
  std::optional<tweezer::CalibrationConfig> cfg;
  bool needs_config = false;
  for (const auto& in : c.inputs) needs_config = needs_config || fs::path(in).extension() != ".json";
  if (needs_config) cfg = make_config(c.args);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const auto& in = c.inputs[i];
        if (fs::path(in).extension() == ".json") {
          reports[i] = tweezer::json_io::report_from_json(tweezer::json_io::read_json_file(in));
        } else {
          reports[i] = calibrate_file(in, c.args, *cfg);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(c.jobs, n));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<tweezer::CalibrationReport> list;
  for (auto& r : reports) list.push_back(std::move(*r));
  const auto sweep = tweezer::power_sweep(list);
  emit(c.output, tweezer::json_io::to_json(sweep), c.timestamp);
  return kExitOk;
}

void add_calibrate_options(CLI::App* cmd, CalibrateArgs& a) {
  add_recording_options(cmd, a.rec);
  add_band_options(cmd, a.band);
  cmd->add_option("--method", a.method, "inst, mean, noise, knife or single_channel")->capture_default_str();
  cmd->add_option("--blocks", a.blocks, "Bartlett block count")->capture_default_str()->check(CLI::Range(2, 1 << 24));
  cmd->add_option("--dark", a.dark, "laser-off recording (noise method)");
  cmd->add_option("--model", a.model, "override the method's model kind");
  cmd->add_option("--power-mw", a.power_mw, "trap power label, overrides the file's '# power_mw:' comment");
  cmd->add_option("--seed", a.seed, "seed of a simulated input, recorded as provenance");
  add_fit_options(cmd, a.fit);
  cmd->add_option("--x-channel", a.x_channel, "position channel")->capture_default_str();
  cmd->add_option("--s-channel", a.s_channel, "sum channel")->capture_default_str();
  cmd->add_option("--knife-channel", a.knife_channel, "knife-edge channel")->capture_default_str();
  cmd->add_flag("--experimental-single-channel", a.experimental_single_channel,
                "enable the single-channel (two-AL + noise) method");
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Optical trap calibration from detector power spectra"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tweezer 1.0.0");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "simulate a recording from a scenario file");
  c_sim->add_option("--scenario", sim.scenario, "scenario JSON")->required();
  c_sim->add_option("--output", sim.output, "recording to write")->required();
  c_sim->add_option("--truth", sim.truth, "truth JSON (default: <output>.truth.json)");
  c_sim->add_option("--seed", sim.seed, "override the scenario seed");
  c_sim->add_flag("--laser-off", sim.laser_off, "write the laser-off (dark) recording");
  c_sim->add_option("--digits", sim.digits, "significant digits per sample")->capture_default_str()->check(
      CLI::Range(6, 17));

  PsdArgs psd;
  auto* c_psd = app.add_subcommand("psd", "Bartlett PSD of a channel or of a method's position proxy");
  c_psd->add_option("--input", psd.input, "recording")->required();
  c_psd->add_option("--output", psd.output, "spectrum file to write")->required();
  add_recording_options(c_psd, psd.rec);
  add_band_options(c_psd, psd.band);
  c_psd->add_option("--channel", psd.channel, "channel to transform (default: first channel)");
  c_psd->add_option("--method", psd.method, "transform this method's position proxy instead");
  c_psd->add_option("--blocks", psd.blocks, "Bartlett block count")->capture_default_str();
  c_psd->add_flag("--experimental-single-channel", psd.experimental_single_channel);

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "fit a spectral model to a spectrum file");
  c_fit->add_option("--input", fit.common.input, "spectrum file")->required();
  c_fit->add_option("--output", fit.common.output, "fit JSON (default: stdout)");
  c_fit->add_option("--model", fit.model, "lorentzian, al, al_const, al_dark or two_al_noise")->capture_default_str();
  c_fit->add_option("--dark", fit.common.dark, "dark spectrum file (al_dark)");
  c_fit->add_option("--rate-hz", fit.common.rate_hz, "sample rate for aliasing (default: from the file)");
  add_fit_options(c_fit, fit.common.fit);
  c_fit->add_option("--model-out", fit.common.model_out, "write the spectrum with a model column");
  c_fit->add_flag("--timestamp", fit.timestamp, "add a timestamp field");
  add_band_options(c_fit, fit.common.band);

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "chi-square ratio of two model fits on one spectrum");
  c_cmp->add_option("--input", cmp.common.input, "spectrum file")->required();
  c_cmp->add_option("--output", cmp.common.output, "comparison JSON (default: stdout)");
  c_cmp->add_option("--model-a", cmp.model_a, "first model")->capture_default_str();
  c_cmp->add_option("--model-b", cmp.model_b, "second model")->capture_default_str();
  c_cmp->add_option("--fit-a", cmp.fit_a, "use this fit JSON instead of fitting model A");
  c_cmp->add_option("--fit-b", cmp.fit_b, "use this fit JSON instead of fitting model B");
  c_cmp->add_option("--dark", cmp.common.dark, "dark spectrum file (al_dark)");
  c_cmp->add_option("--rate-hz", cmp.common.rate_hz, "sample rate for aliasing (default: from the file)");
  add_fit_options(c_cmp, cmp.common.fit);
  c_cmp->add_flag("--timestamp", cmp.timestamp, "add a timestamp field");
  add_band_options(c_cmp, cmp.common.band);

  CalibrateCmd cal;
  auto* c_cal = app.add_subcommand("calibrate", "corner frequency of a recording by one method");
  c_cal->add_option("--input", cal.input, "recording")->required();
  c_cal->add_option("--output", cal.output, "report JSON (default: stdout)");
  c_cal->add_option("--spectrum-out", cal.spectrum_out, "write the fitted spectrum with a model column");
  c_cal->add_flag("--timestamp", cal.timestamp, "add a timestamp field");
  add_calibrate_options(c_cal, cal.args);

  SweepCmd sweep;
  auto* c_sw = app.add_subcommand("sweep", "fc-versus-power slope over recordings or report JSONs");
  c_sw->add_option("--input", sweep.inputs, "recordings or calibrate reports (*.json)")->required()->expected(2, -1);
  c_sw->add_option("--output", sweep.output, "sweep JSON (default: stdout)");
  c_sw->add_option("--jobs", sweep.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  c_sw->add_flag("--timestamp", sweep.timestamp, "add a timestamp field");
  add_calibrate_options(c_sw, sweep.args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (c_sim->parsed()) return run_simulate(sim);
  if (c_psd->parsed()) return run_psd(psd);
  if (c_fit->parsed()) return run_fit(fit);
  if (c_cmp->parsed()) return run_compare(cmp);
  if (c_cal->parsed()) return run_calibrate(cal);
  if (c_sw->parsed()) return run_sweep(sweep);
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const tweezer::NoConvergence& e) {
    std::cerr << "tweezer: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const tweezer::Error& e) {
    std::cerr << "tweezer: " << e.what() << '\n';
    return e.numerical() ? kExitNumerical : kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "tweezer: malformed JSON: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "tweezer: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "tweezer: " << e.what() << '\n';
    return kExitNumerical;
  }
}
