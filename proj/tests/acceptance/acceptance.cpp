// Acceptance run: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Pass criterion numbers as arguments to
// run a subset, e.g. `acceptance 1 3`.

#include <algorithm>
#include <bit>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "tweezer/fitting.hpp"
#include "tweezer/json_io.hpp"
#include "tweezer/models.hpp"
#include "tweezer/pipelines.hpp"
#include "tweezer/recording_io.hpp"
#include "tweezer/simulator.hpp"
#include "tweezer/spectrum.hpp"

using namespace tweezer;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kRate = 10000.0;
constexpr std::size_t kSamples = 1u << 20;
constexpr std::size_t kBlocks = 64;
constexpr double kFcRadial = 737.9;
constexpr double kFcAxial = 150.0;
constexpr double kDiffusion = 3.8e-13;
constexpr int kReplicates = 100;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Runs body(i) for i in [0, n) on all hardware threads; every index writes
// only its own slot, so results do not depend on scheduling.
void parallel_for(int n, const std::function<void(int)>& body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(n)));
  std::atomic<int> next{0};
  auto run = [&] {
    for (int i = next++; i < n; i = next++) body(i);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
}

double axial_std(double fc_axial) {
  return std::sqrt(sim::AxisParams{fc_axial, kDiffusion}.variance());
}

// Electronic white-noise level: a fifth of the radial X signal at Nyquist.
double white_level(double alpha_x, double power_w, double fc) {
  return 0.2 * std::pow(alpha_x * power_w, 2) * aliased_lorentzian_eval(kRate / 2.0, kDiffusion, fc, kRate);
}

// PS detector plus knife detector, 2% power modulation by axial motion,
// white electronic noise on every channel.
sim::Scenario baseline(std::uint64_t seed, double power_w = 0.055, double fc_radial = kFcRadial,
                       double fc_axial = kFcAxial) {
  sim::Scenario sc;
  sc.sample_rate_hz = kRate;
  sc.n_samples = kSamples;
  sc.seed = seed;
  sc.trap.radial = {fc_radial, kDiffusion};
  sc.trap.axial = {fc_axial, kDiffusion};
  sc.detector.alpha_x = 1e8;
  sc.detector.alpha_s = 20.0;
  sc.detector.alpha_0 = 10.0;
  sc.detector.alpha_knife_x = 1e8;
  sc.detector.mean_power_w = power_w;
  sc.detector.axial_power_coupling = 0.02 / axial_std(fc_axial);
  const double w = white_level(1e8, 0.055, kFcRadial);
  sc.noise.x.white_level = w;
  sc.noise.s.white_level = w;
  sc.noise.xk.white_level = w;
  sc.meta.power_mw = power_w * 1e3;
  return sc;
}

sim::Scenario dark_of(sim::Scenario sc, std::uint64_t seed) {
  sc.laser_off = true;
  sc.seed = seed;
  return sc;
}

CalibrationConfig config_for(Method m, std::shared_ptr<const Recording> dark = nullptr) {
  CalibrationConfig cfg;
  cfg.method = m;
  cfg.n_blocks = kBlocks;
  cfg.dark = std::move(dark);
  return cfg;
}

bool within(double value, double truth, double sigma, double k = 2.0) { return std::abs(value - truth) < k * sigma; }

// --- 1 ----------------------------------------------------------------------

// Sum of Lorentzians shifted by n fs for |n| <= N, plus the midpoint-rule
// integral of the remaining terms on each side.
double alias_sum(double f, double d, double fc, double fs, int n_alias) {
  double s = 0.0;
  for (int n = n_alias; n >= 1; --n) {
    s += lorentzian_eval(f + n * fs, d, fc);
    s += lorentzian_eval(f - n * fs, d, fc);
  }
  s += lorentzian_eval(f, d, fc);
  const double pre = d / (std::numbers::pi * std::numbers::pi * fc * fs);
  const double edge = (n_alias + 0.5) * fs;
  s += pre * (std::numbers::pi / 2.0 - std::atan((edge + f) / fc));
  s += pre * (std::numbers::pi / 2.0 - std::atan((edge - f) / fc));
  return s;
}

Outcome criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double fs = std::pow(10.0, 3.0 + 2.0 * u(rng));
    const double fc = fs * std::pow(10.0, -3.0 + std::log10(450.0) * u(rng));  // [1e-3, 0.45] fs
    const double f = 0.5 * fs * u(rng);
    const double al = aliased_lorentzian_eval(f, 1e-12, fc, fs);
    const double oracle = alias_sum(f, 1e-12, fc, fs, 10000);
    worst = std::max(worst, std::abs(al - oracle) / oracle);
  }
  const double t = seconds_since(t0);
  return {worst < 1e-6 && t < 10.0, fmt("max relative error %.2e over 1000 triples in %.2f s", worst, t)};
}

// --- 2 ----------------------------------------------------------------------

Outcome criterion_2() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> len(4, 6000);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = len(rng);
    const double rate = std::pow(10.0, 2.0 + 3.0 * u(rng));
    const double offset = 100.0 * g(rng);
    const double tone = 5.0 * u(rng);
    const double f0 = rate * 0.5 * u(rng);
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = offset + tone * std::sin(2.0 * std::numbers::pi * f0 * static_cast<double>(k) / rate) + g(rng);
    }
    const TimeSeries ts(x, rate);
    const auto p = periodogram(ts);
    const double df = rate / static_cast<double>(n);
    double integral = 0.0;
    for (double v : p.power) integral += v * df;
    const double var = stddev(ts) * stddev(ts);
    worst = std::max(worst, std::abs(integral - var) / var);
  }
  return {worst < 1e-9, fmt("max relative Parseval error %.2e over 100 signals (odd and even lengths)", worst)};
}

// --- 3 ----------------------------------------------------------------------

Outcome criterion_3() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fs = 10000.0;
  auto dark = std::make_shared<Spectrum>();
  for (int k = 1; k <= 512; ++k) {
    dark->freqs_hz.push_back(fs / 1024.0 * k);
    dark->power.push_back(1e-9 * (1.0 + 5.0 * u(rng)));
    dark->sigma.push_back(dark->power.back() / 8.0);
  }
  dark->source_rate_hz = fs;
  dark->block_length = 1024;
  dark->n_blocks = 64;

  double worst = 0.0;
  std::size_t checks = 0;
  const ModelKind kinds[] = {ModelKind::Lorentzian, ModelKind::AL, ModelKind::ALConst, ModelKind::ALDark,
                             ModelKind::TwoALNoise};
  for (int i = 0; i < 100; ++i) {
    for (ModelKind kind : kinds) {
      ModelSpec spec{kind, fs, kind == ModelKind::ALDark ? dark : nullptr, false};
      const double f = dark->freqs_hz[static_cast<std::size_t>(u(rng) * 511.999)];
      const std::vector<double> freqs{f};
      std::vector<double> theta;
      switch (kind) {
        case ModelKind::Lorentzian:
        case ModelKind::AL: theta = {1e-12 * (0.1 + u(rng)), 20.0 + 2000.0 * u(rng)}; break;
        case ModelKind::ALConst: theta = {1e-12 * (0.1 + u(rng)), 20.0 + 2000.0 * u(rng), 1e-10 * (0.1 + u(rng))}; break;
        case ModelKind::ALDark: theta = {1e-12 * (0.1 + u(rng)), 20.0 + 2000.0 * u(rng), 0.1 + 3.0 * u(rng)}; break;
        case ModelKind::TwoALNoise:
          theta = {1e-12 * (0.1 + u(rng)), 500.0 + 1500.0 * u(rng), 1e-12 * (0.1 + u(rng)), 20.0 + 400.0 * u(rng),
                   1e-10 * (0.1 + u(rng))};
          break;
      }
      const auto grad = model_gradient(spec, theta, freqs);
      const double value = model_eval(spec, theta, freqs)[0];
      for (std::size_t j = 0; j < theta.size(); ++j) {
        auto up = theta, dn = theta;
        const double h = 1e-6 * theta[j];
        up[j] += h;
        dn[j] -= h;
        const double fd = (model_eval(spec, up, freqs)[0] - model_eval(spec, dn, freqs)[0]) / (2.0 * h);
        // Partials that cross zero (d/dfc changes sign along f) are compared
        // on the scale of the parameter's overall sensitivity value/theta.
        const double scale = std::max(std::abs(fd), value / theta[j]);
        worst = std::max(worst, std::abs(grad[j][0] - fd) / scale);
        ++checks;
      }
    }
  }
  return {worst < 1e-5, fmt("max relative deviation %.2e over %zu partials (100 points x 5 model kinds)", worst, checks)};
}

// --- 4, 5, 9 share one set of replicates ----------------------------------------

struct Replicate {
  bool ok = false;
  std::string error;
  double fc[4] = {0, 0, 0, 0};
  double sigma[4] = {0, 0, 0, 0};
  double chi2r_raw_al = 0.0;
  double chi2r_knife = 0.0;
  double seconds_core = 0.0;
  double seconds_extra = 0.0;
};

constexpr Method kMethods[4] = {Method::Inst, Method::Mean, Method::Noise, Method::Knife};

std::vector<Replicate>& replicates() {
  static std::vector<Replicate> reps = [] {
    std::vector<Replicate> out(kReplicates);
    parallel_for(kReplicates, [&](int r) {
      auto& rep = out[static_cast<std::size_t>(r)];
      try {
        const auto t0 = Clock::now();
        const auto sc = baseline(1000 + static_cast<std::uint64_t>(r));
        const auto rec = sim::run_scenario(sc);
        auto dark = std::make_shared<Recording>(sim::run_scenario(dark_of(sc, 500000 + static_cast<std::uint64_t>(r))));
        for (int m = 0; m < 4; ++m) {
          const auto report = calibrate(rec, config_for(kMethods[m], dark));
          rep.fc[m] = report.fc_hz;
          rep.sigma[m] = report.fc_sigma_hz;
          if (kMethods[m] == Method::Knife) rep.chi2r_knife = report.fit.chi2_reduced;
        }
        rep.seconds_core = seconds_since(t0);

        // Raw knife channel, same band as the knife calibration.
        const auto t1 = Clock::now();
        auto raw = band_mask(bartlett_psd(rec.channel("Xk"), kBlocks), kKnifeLowCutHz,
                             highest_full_bin_hz(bartlett_psd(rec.channel("Xk"), kBlocks)));
        FitOptions opt;
        opt.weight_mode = WeightMode::ModelRefined;
        try {
          rep.chi2r_raw_al = fit_model(raw, ModelSpec{ModelKind::AL, kRate, nullptr, false}, opt).chi2_reduced;
        } catch (const NoConvergence& e) {
          // A raw single-AL fit that never settles still has a chi2 at its
          // last iterate, and that is what the comparison needs.
          rep.chi2r_raw_al = e.partial().chi2_reduced;
        }
        rep.seconds_extra = seconds_since(t1);
        rep.ok = true;
      } catch (const std::exception& e) {
        rep.error = e.what();
      }
    });
    return out;
  }();
  return reps;
}

double suite_seconds = 0.0;

Outcome criterion_4() {
  const auto t0 = Clock::now();
  auto& reps = replicates();
  suite_seconds = seconds_since(t0);
  double core = 0.0, extra = 0.0;
  for (const auto& r : reps) {
    core += r.seconds_core;
    extra += r.seconds_extra;
  }
  // Wall time attributable to criterion 4 (simulation plus four calibrations).
  const double wall = suite_seconds * core / std::max(core + extra, 1e-9);
  std::string detail;
  bool pass = wall < 300.0;
  for (int m = 0; m < 4; ++m) {
    int cover = 0, n = 0;
    double bias = 0.0;
    for (const auto& r : reps) {
      if (!(r.fc[m] > 0.0)) continue;
      ++n;
      if (within(r.fc[m], kFcRadial, r.sigma[m])) ++cover;
      bias += (r.fc[m] - kFcRadial) / kFcRadial;
    }
    bias = n > 0 ? bias / n : 1.0;
    pass = pass && n == kReplicates && cover >= 93 && std::abs(bias) < 0.005;
    detail += fmt("%s %d/%d bias %+.3f%%; ", std::string(to_string(kMethods[m])).c_str(), cover, n, 100.0 * bias);
  }
  detail += fmt("%.0f s for 100 replicates", wall);
  return {pass, detail};
}

Outcome criterion_5() {
  auto& reps = replicates();
  int agree = 0;
  for (const auto& r : reps) {
    bool all = true;
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        all = all && r.fc[i] > 0.0 && r.fc[j] > 0.0 &&
              std::abs(r.fc[i] - r.fc[j]) < 2.0 * std::hypot(r.sigma[i], r.sigma[j]);
      }
    }
    if (all) ++agree;
  }
  return {agree >= 90, fmt("all six method pairs agree within 2 combined sigma in %d/%d replicates", agree, kReplicates)};
}

Outcome criterion_9() {
  auto& reps = replicates();
  int worse = 0;
  double min_raw = 1e300, max_knife = 0.0;
  for (const auto& r : reps) {
    if (r.chi2r_raw_al > r.chi2r_knife && r.chi2r_knife > 0.0) ++worse;
    min_raw = std::min(min_raw, r.chi2r_raw_al);
    max_knife = std::max(max_knife, r.chi2r_knife);
  }
  return {worse >= 95, fmt("single-AL chi2r on raw Xk exceeds AL+const chi2r on Xk/S in %d/%d replicates "
                           "(min raw %.2f, max Xk/S %.2f)",
                           worse, kReplicates, min_raw, max_knife)};
}

// --- 6 ----------------------------------------------------------------------

// DAQ-like electronic noise on X: white floor, 1/f rise and mains lines.
sim::NoiseSpec daq_noise() {
  sim::NoiseSpec n;
  n.white_level = 0.5 * white_level(1e8, 0.055, kFcRadial);
  n.pink_level = 5e-6;
  n.pink_exponent = 1.0;
  n.mains_lines = {{60.0, 0.4, 3e-5}, {180.0, 0.4, 1e-5}};
  return n;
}

Outcome criterion_6() {
  struct Row {
    bool ok = false;
    double ratio = 0.0;
    double chi2r_dark = 0.0;
    bool covered = false;
  };
  std::vector<Row> rows(kReplicates);
  parallel_for(kReplicates, [&](int r) {
    try {
      auto sc = baseline(2000 + static_cast<std::uint64_t>(r));
      sc.noise.x = daq_noise();
      const auto rec = sim::run_scenario(sc);
      auto dark = std::make_shared<Recording>(sim::run_scenario(dark_of(sc, 600000 + static_cast<std::uint64_t>(r))));
      const auto cfg = config_for(Method::Noise, dark);
      const auto ms = method_spectrum(rec, cfg);
      const auto fit_dark = fit_model(ms.spectrum, ModelSpec{ModelKind::ALDark, kRate, ms.dark, false}, cfg.fit);
      const auto fit_const = fit_model(ms.spectrum, ModelSpec{ModelKind::ALConst, kRate, nullptr, false}, cfg.fit);
      const auto cmp = compare_models(ms.spectrum, fit_const, fit_dark);
      rows[static_cast<std::size_t>(r)] = {true, cmp.ratio, fit_dark.chi2_reduced,
                                           within(fit_dark.corner_hz(), kFcRadial, fit_dark.corner_sigma_hz())};
    } catch (const std::exception&) {
    }
  });
  int above = 0, in_range = 0, covered = 0;
  double min_ratio = 1e300, lo = 1e300, hi = 0.0;
  for (const auto& row : rows) {
    if (!row.ok) continue;
    if (row.ratio > 2.0) ++above;
    if (row.chi2r_dark >= 0.7 && row.chi2r_dark <= 1.4) ++in_range;
    if (row.covered) ++covered;
    min_ratio = std::min(min_ratio, row.ratio);
    lo = std::min(lo, row.chi2r_dark);
    hi = std::max(hi, row.chi2r_dark);
  }
  return {above >= 95 && in_range == kReplicates,
          fmt("ratio > 2 in %d/%d (min %.2f); al_dark chi2r in [0.7, 1.4] in %d/%d (range %.3f..%.3f); "
              "noise method covers fc* in %d/%d",
              above, kReplicates, min_ratio, in_range, kReplicates, lo, hi, covered, kReplicates)};
}

// --- 7 ----------------------------------------------------------------------

Outcome criterion_7() {
  const double powers_mw[] = {15.0, 25.0, 35.0, 45.0, 55.0};
  const double alpha_true = kFcRadial / 55.0;  // Hz per mW
  std::vector<std::vector<CalibrationReport>> by_method(4, std::vector<CalibrationReport>(5));
  std::vector<std::string> errors(5);
  parallel_for(5, [&](int i) {
    try {
      const double p = powers_mw[i];
      const auto sc = baseline(7000 + static_cast<std::uint64_t>(i), p * 1e-3, alpha_true * p, kFcAxial * p / 55.0);
      const auto rec = sim::run_scenario(sc);
      auto dark = std::make_shared<Recording>(sim::run_scenario(dark_of(sc, 700000 + static_cast<std::uint64_t>(i))));
      for (int m = 0; m < 4; ++m) by_method[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)] = calibrate(rec, config_for(kMethods[m], dark));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) return {false, "calibration failed: " + e};
  }
  bool pass = true;
  std::string detail = fmt("alpha* %.4f Hz/mW; ", alpha_true);
  std::vector<SweepResult> sweeps;
  for (int m = 0; m < 4; ++m) {
    const auto s = power_sweep(by_method[static_cast<std::size_t>(m)]);
    sweeps.push_back(s);
    const bool ok = within(s.slope_hz_per_mw, alpha_true, s.slope_sigma);
    pass = pass && ok;
    detail += fmt("%s %.4f+-%.4f; ", std::string(to_string(kMethods[m])).c_str(), s.slope_hz_per_mw, s.slope_sigma);
  }
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const double z = std::abs(sweeps[i].slope_hz_per_mw - sweeps[j].slope_hz_per_mw) /
                       std::hypot(sweeps[i].slope_sigma, sweeps[j].slope_sigma);
      worst = std::max(worst, z);
    }
  }
  pass = pass && worst < 2.0;
  detail += fmt("largest pairwise difference %.2f combined sigma", worst);
  return {pass, detail};
}

// --- 8 ----------------------------------------------------------------------

Outcome criterion_8() {
  const double levels[] = {0.01, 0.05, 0.1, 0.3};
  struct Row {
    double gap = 0.0;
    double combined = 0.0;
    bool converged = true;
    bool flagged = false;
    double measured = 0.0;
  };
  std::vector<Row> rows(4);
  std::vector<std::string> errors(4);
  parallel_for(4, [&](int i) {
    try {
      auto sc = baseline(8000);
      sc.detector.axial_power_coupling = levels[i] / axial_std(kFcAxial);
      // Quiet electronics isolate the division scheme. With the baseline
      // noise, the linearized power crosses zero on 3.3-sigma axial
      // excursions at the 0.3 level and X/S is dominated by noise spikes.
      sc.noise.x.white_level = 1e-4 * sc.noise.x.white_level;
      sc.noise.s.white_level = 1e-4 * sc.noise.s.white_level;
      const auto rec = sim::run_scenario(sc);
      auto& row = rows[static_cast<std::size_t>(i)];
      const auto diag = approximation_report(rec);
      row.flagged = diag.power_flag != Flag::Pass || diag.centering_flag != Flag::Pass;
      row.measured = diag.power_fluctuation;
      const auto mean_r = calibrate(rec, config_for(Method::Mean));
      try {
        const auto inst_r = calibrate(rec, config_for(Method::Inst));
        row.gap = std::abs(inst_r.fc_hz - mean_r.fc_hz);
        row.combined = std::hypot(inst_r.fc_sigma_hz, mean_r.fc_sigma_hz);
      } catch (const Error&) {
        // Division by a sum signal that nearly vanishes: no usable estimate.
        row.converged = false;
        row.gap = std::numeric_limits<double>::infinity();
        row.combined = 1.0;
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) return {false, "calibration failed: " + e};
  }
  bool monotone = true, disagree_only_last = true, flags_only_last = true;
  std::string detail;
  for (int i = 0; i < 4; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (i > 0) monotone = monotone && r.gap > rows[static_cast<std::size_t>(i - 1)].gap;
    const bool disagree = !(r.gap < 2.0 * r.combined);
    disagree_only_last = disagree_only_last && (disagree == (i == 3));
    flags_only_last = flags_only_last && (r.flagged == (i == 3));
    detail += fmt("dS/S %.2f (measured %.4f): |inst-mean| %.2f Hz = %.2f sigma%s, %s; ", levels[i], r.measured, r.gap,
                  r.gap / r.combined, r.converged ? "" : " (inst unusable)", r.flagged ? "flagged" : "pass");
  }
  detail += fmt("monotone %s", monotone ? "yes" : "no");
  return {monotone && disagree_only_last && flags_only_last, detail};
}

// --- 10 ---------------------------------------------------------------------

Outcome criterion_10() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / fmt("tweezer_acceptance_%d", static_cast<int>(::getpid()));
  fs::create_directories(dir);
  const auto sc = baseline(31337);
  const auto rec = sim::run_scenario(sc);
  const auto rec_again = sim::run_scenario(sc);
  bool identical = true;
  for (const auto& name : rec.channel_names()) {
    const auto a = rec.channel(name).samples();
    const auto b = rec_again.channel(name).samples();
    identical = identical && std::equal(a.begin(), a.end(), b.begin(), b.end(),
                                        [](double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); });
  }
  const auto path = dir / "recording.csv";
  const auto dark_path = dir / "dark.csv";
  export_recording(path, rec);
  export_recording(dark_path, sim::run_scenario(dark_of(sc, 31338)));
  const auto schema = parse_channel_schema("X=X,S=S,Xk=Xk");

  double worst = 0.0;
  std::string slowest;
  for (Method m : kMethods) {
    std::string first_json;
    for (int run = 0; run < 2; ++run) {
      const auto t0 = Clock::now();
      const auto loaded = load_recording(path, schema, kRate);
      auto dark = m == Method::Noise ? std::make_shared<Recording>(load_recording(dark_path, schema, kRate)) : nullptr;
      const auto report = calibrate(loaded, config_for(m, dark));
      const double t = seconds_since(t0);
      if (t > worst) {
        worst = t;
        slowest = std::string(to_string(m));
      }
      const auto json = json_io::to_json(report).dump();
      if (run == 0) {
        first_json = json;
      } else {
        identical = identical && json == first_json;
      }
    }
  }
  fs::remove_all(dir);
  return {worst < 5.0 && identical,
          fmt("slowest load+calibrate of 2^20 samples %.2f s (%s); repeated simulation and reports bit-identical: %s",
              worst, slowest.c_str(), identical ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, Outcome (*)()>> criteria = {
      {1, {"alias-sum oracle", criterion_1}},
      {2, {"Parseval", criterion_2}},
      {3, {"gradient check", criterion_3}},
      {4, {"unbiased recovery", criterion_4}},
      {5, {"method agreement", criterion_5}},
      {6, {"misspecified noise floor", criterion_6}},
      {7, {"power sweep", criterion_7}},
      {8, {"division validity boundary", criterion_8}},
      {9, {"raw knife channel", criterion_9}},
      {10, {"performance and determinism", criterion_10}},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  bool all = true;
  for (const auto& [id, entry] : criteria) {
    if (!selected.empty() && !selected.contains(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = entry.second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, entry.first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
