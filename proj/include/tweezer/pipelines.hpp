#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tweezer/error.hpp"
#include "tweezer/fitting.hpp"
#include "tweezer/models.hpp"
#include "tweezer/spectrum.hpp"
#include "tweezer/timeseries.hpp"

namespace tweezer {

/// Position proxy and model used to extract the corner frequency.
enum class Method {
  Inst,           ///< X / S sample by sample, AL + constant
  Mean,           ///< X / <S>, AL + constant
  Noise,          ///< X / <S>, AL + beta * dark PSD
  Knife,          ///< Xk / S sample by sample, AL + constant, 30 Hz low cut
  SingleChannel,  ///< raw Xk, two AL + constant (experimental)
};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Inst: return "inst";
    case Method::Mean: return "mean";
    case Method::Noise: return "noise";
    case Method::Knife: return "knife";
    case Method::SingleChannel: return "single_channel";
  }
  throw ConfigError("unhandled method");
}

inline Method method_from_string(std::string_view s) {
  for (auto m : {Method::Inst, Method::Mean, Method::Noise, Method::Knife, Method::SingleChannel}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

inline ModelKind default_model(Method m) {
  switch (m) {
    case Method::Noise: return ModelKind::ALDark;
    case Method::SingleChannel: return ModelKind::TwoALNoise;
    default: return ModelKind::ALConst;
  }
}

/// Knife-edge mounts vibrate; their spectra are cut below this frequency.
inline constexpr double kKnifeLowCutHz = 30.0;

enum class Flag { Pass, Warn, Fail };

inline std::string_view to_string(Flag f) {
  switch (f) {
    case Flag::Pass: return "PASS";
    case Flag::Warn: return "WARN";
    case Flag::Fail: return "FAIL";
  }
  return "?";
}

struct ApproximationThresholds {
  double warn = 0.1;
  double fail = 0.3;
  /// A metric is flagged only when it exceeds a threshold by more than this
  /// many standard errors (estimated from the block-to-block scatter).
  double margin_sigmas = 2.0;
  std::size_t n_blocks = 64;
};

/// Validity diagnostics for replacing X/S by X/<S>.
struct ApproximationDiagnostics {
  double power_fluctuation = 0.0;  ///< rms(delta_S) / <S>
  double power_fluctuation_se = 0.0;
  double centering = 0.0;  ///< |<X>| / <S>
  double centering_se = 0.0;
  double cross_term = 0.0;  ///< <|delta_X delta_S|> / <S>^2
  Flag power_flag = Flag::Pass;
  Flag centering_flag = Flag::Pass;

  Flag overall() const { return std::max(power_flag, centering_flag); }
};

namespace detail {

inline double block_standard_error(std::span<const double> per_block) {
  if (per_block.size() < 2) return 0.0;
  const double m = mean(per_block);
  double acc = 0.0;
  for (double v : per_block) acc += (v - m) * (v - m);
  const double nb = static_cast<double>(per_block.size());
  return std::sqrt(acc / (nb - 1.0) / nb);
}

inline Flag classify(double value, double se, const ApproximationThresholds& t) {
  const double lower_edge = value - t.margin_sigmas * se;
  if (lower_edge > t.fail) return Flag::Fail;
  if (lower_edge > t.warn) return Flag::Warn;
  return Flag::Pass;
}

}  // namespace detail

/// Measures how far a recording is from the regime where X/S and X/<S>
/// give the same spectrum: relative power fluctuation, beam centering and
/// the size of the neglected cross term.
inline ApproximationDiagnostics approximation_report(const Recording& recording, const std::string& x_channel = "X",
                                                     const std::string& s_channel = "S",
                                                     const ApproximationThresholds& thresholds = {}) {
  if (!recording.has(x_channel)) throw MissingChannel("approximation report needs channel '" + x_channel + "'");
  if (!recording.has(s_channel)) throw MissingChannel("approximation report needs channel '" + s_channel + "'");
  const auto x = recording.channel(x_channel).samples();
  const auto s = recording.channel(s_channel).samples();
  const double mx = mean(x);
  const double ms = mean(s);
  if (ms == 0.0) throw ZeroMeanDenominator("mean of the sum channel is zero");
  const double ams = std::abs(ms);

  const std::size_t n = x.size();
  double sum_ds2 = 0.0;
  double sum_cross = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ds = s[i] - ms;
    sum_ds2 += ds * ds;
    sum_cross += std::abs((x[i] - mx) * ds);
  }
  ApproximationDiagnostics d;
  d.power_fluctuation = std::sqrt(sum_ds2 / static_cast<double>(n)) / ams;
  d.centering = std::abs(mx) / ams;
  d.cross_term = sum_cross / static_cast<double>(n) / (ms * ms);

  const std::size_t nb = std::clamp<std::size_t>(thresholds.n_blocks, 1, n);
  const std::size_t len = n / nb;
  std::vector<double> block_rms, block_center;
  for (std::size_t b = 0; b < nb && len > 1; ++b) {
    double acc = 0.0;
    double xs = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) {
      acc += (s[i] - ms) * (s[i] - ms);
      xs += x[i];
    }
    block_rms.push_back(std::sqrt(acc / static_cast<double>(len)) / ams);
    block_center.push_back(std::abs(xs / static_cast<double>(len)) / ams);
  }
  d.power_fluctuation_se = detail::block_standard_error(block_rms);
  d.centering_se = detail::block_standard_error(block_center);
  d.power_flag = detail::classify(d.power_fluctuation, d.power_fluctuation_se, thresholds);
  d.centering_flag = detail::classify(d.centering, d.centering_se, thresholds);
  return d;
}

struct CalibrationConfig {
  Method method = Method::Mean;
  std::size_t n_blocks = 64;
  std::optional<double> f_min_hz;
  std::optional<double> f_max_hz;
  std::optional<ModelKind> model_override;
  /// Laser-off recording, required by Method::Noise.
  std::shared_ptr<const Recording> dark;
  /// Guard for sample-by-sample division; default 1e-6 max|S|.
  std::optional<double> guard;
  std::string x_channel = "X";
  std::string s_channel = "S";
  std::string knife_channel = "Xk";
  FitOptions fit = [] {
    FitOptions o;
    o.weight_mode = WeightMode::ModelRefined;
    return o;
  }();
  bool experimental_single_channel = false;
  ApproximationThresholds thresholds;
};

struct CalibrationReport {
  Method method = Method::Mean;
  double fc_hz = 0.0;
  double fc_sigma_hz = 0.0;      ///< chi2-scaled
  double fc_sigma_raw_hz = 0.0;  ///< unscaled
  FitResult fit;
  Spectrum spectrum;  ///< the band-limited spectrum that was fitted
  std::shared_ptr<const Spectrum> dark;
  std::size_t guarded_samples = 0;
  std::optional<ApproximationDiagnostics> diagnostics;
  std::optional<double> power_mw;
  std::string input;                  ///< provenance: file path or scenario label
  std::optional<std::uint64_t> seed;  ///< provenance for simulated inputs

  /// Fitted model evaluated on the spectrum grid.
  std::vector<double> model_curve() const {
    ModelSpec spec{fit.kind, spectrum.source_rate_hz, dark, false};
    return model_eval(spec, fit.params, spectrum.freqs_hz);
  }
};

namespace detail {

inline const TimeSeries& need(const Recording& rec, const std::string& name, Method m) {
  if (!rec.has(name)) {
    throw MissingChannel("method " + std::string(to_string(m)) + " needs channel '" + name + "'");
  }
  return rec.channel(name);
}

}  // namespace detail

/// Position proxy a method derives from the recording: X/S, X/<S>, Xk/S or
/// the raw knife channel.
struct MethodProxy {
  TimeSeries series;
  std::size_t guarded_samples = 0;
};

inline MethodProxy method_proxy(const Recording& recording, const CalibrationConfig& config) {
  const Method m = config.method;
  switch (m) {
    case Method::Inst: {
      auto r = ratio_instantaneous(detail::need(recording, config.x_channel, m),
                                   detail::need(recording, config.s_channel, m), config.guard);
      return {std::move(r.series), r.guarded_count};
    }
    case Method::Mean:
    case Method::Noise:
      return {ratio_mean(detail::need(recording, config.x_channel, m), detail::need(recording, config.s_channel, m)),
              0};
    case Method::Knife: {
      auto r = ratio_instantaneous(detail::need(recording, config.knife_channel, m),
                                   detail::need(recording, config.s_channel, m), config.guard);
      return {std::move(r.series), r.guarded_count};
    }
    case Method::SingleChannel:
      if (!config.experimental_single_channel) {
        throw ConfigError("single-channel calibration is experimental; enable it explicitly");
      }
      return {detail::need(recording, config.knife_channel, m), 0};
  }
  throw ConfigError("unhandled method");
}

/// Band-limited spectrum a calibration method fits, plus the dark reference
/// for Method::Noise. Exposed separately so callers can fit other models
/// to exactly the same data.
struct MethodSpectrum {
  Spectrum spectrum;
  std::shared_ptr<const Spectrum> dark;
  std::size_t guarded_samples = 0;
};

inline MethodSpectrum method_spectrum(const Recording& recording, const CalibrationConfig& config) {
  const Method m = config.method;
  MethodSpectrum out;
  auto proxy = method_proxy(recording, config);
  out.guarded_samples = proxy.guarded_samples;

  Spectrum full = bartlett_psd(proxy.series, config.n_blocks);
  const double f_lo = config.f_min_hz.value_or(m == Method::Knife ? kKnifeLowCutHz : full.freqs_hz.front());
  const double f_hi = config.f_max_hz.value_or(highest_full_bin_hz(full));
  if (!(f_lo > 0.0) || f_hi > full.nyquist_hz() * (1.0 + 1e-12)) {
    throw ConfigError("fit band must lie within (0, Nyquist]");
  }
  out.spectrum = band_mask(full, f_lo, f_hi);
  out.spectrum.label = std::string(to_string(m));

  const ModelKind kind = config.model_override.value_or(default_model(m));
  if (kind == ModelKind::ALDark) {
    if (!config.dark) throw ConfigError("dark recording required for the noise method");
    const std::string& dark_channel = m == Method::Knife || m == Method::SingleChannel ? config.knife_channel
                                                                                      : config.x_channel;
    if (!config.dark->has(dark_channel)) {
      throw MissingChannel("dark recording lacks channel '" + dark_channel + "'");
    }
    if (config.dark->sample_rate_hz() != recording.sample_rate_hz()) {
      throw DarkGridMismatch("dark recording sample rate differs from the signal's");
    }
    auto dark = std::make_shared<Spectrum>(dark_psd(*config.dark, dark_channel, config.n_blocks));
    if (dark->block_length != full.block_length) {
      throw DarkGridMismatch("dark and signal spectra have different block lengths (" +
                             std::to_string(dark->block_length) + " vs " + std::to_string(full.block_length) + ")");
    }
    out.dark = std::move(dark);
  }
  return out;
}

/// Full calibration: position proxy, Bartlett PSD, band mask, initial
/// guess and weighted fit with the method's model.
inline CalibrationReport calibrate(const Recording& recording, const CalibrationConfig& config) {
  auto ms = method_spectrum(recording, config);
  const ModelKind kind = config.model_override.value_or(default_model(config.method));
  ModelSpec spec{kind, recording.sample_rate_hz(), ms.dark, false};

  CalibrationReport report;
  report.method = config.method;
  report.fit = fit_model(ms.spectrum, spec, config.fit);
  report.spectrum = std::move(ms.spectrum);
  report.dark = std::move(ms.dark);
  report.guarded_samples = ms.guarded_samples;
  report.fc_hz = report.fit.corner_hz();
  report.fc_sigma_hz = report.fit.corner_sigma_hz();
  report.fc_sigma_raw_hz = report.fit.param_sigma_raw[1];  // fc and fc_r share slot 1
  report.power_mw = recording.meta().power_mw;
  if (recording.has(config.x_channel) && recording.has(config.s_channel)) {
    report.diagnostics = approximation_report(recording, config.x_channel, config.s_channel, config.thresholds);
  }
  return report;
}

struct SweepResult {
  Method method = Method::Mean;
  double slope_hz_per_mw = 0.0;
  double slope_sigma = 0.0;
  double chi2 = 0.0;
  std::vector<OriginPoint> points;
};

/// Through-origin fit of corner frequency against trap power.
inline SweepResult power_sweep(std::span<const CalibrationReport> reports) {
  if (reports.empty()) throw InsufficientPowers("no reports");
  SweepResult result;
  result.method = reports.front().method;
  std::set<double> powers;
  for (const auto& r : reports) {
    if (r.method != result.method) throw MixedMethods("sweep mixes calibration methods");
    if (!r.fit.converged) throw ConfigError("sweep input contains a non-converged calibration");
    if (!r.power_mw) throw ConfigError("calibration report lacks a trap power label");
    powers.insert(*r.power_mw);
    result.points.push_back({*r.power_mw, r.fc_hz, r.fc_sigma_hz});
  }
  if (powers.size() < 2) throw InsufficientPowers("sweep needs at least two distinct powers");
  const auto line = linear_origin_fit(result.points);
  result.slope_hz_per_mw = line.slope;
  result.slope_sigma = line.slope_sigma;
  result.chi2 = line.chi2;
  return result;
}

struct Stiffness {
  double kappa_n_per_m = 0.0;
  double sigma = 0.0;
};

/// kappa = 2 pi fc gamma with Stokes drag gamma = 6 pi eta a. The result
/// is only as good as the assumed viscosity and radius.
inline Stiffness stiffness_from_corner(double fc_hz, double fc_sigma_hz, double viscosity_pa_s, double radius_m) {
  if (!(fc_hz > 0.0) || !(viscosity_pa_s > 0.0) || !(radius_m > 0.0) || fc_sigma_hz < 0.0) {
    throw NonPositiveInput("corner frequency, viscosity and radius must be positive");
  }
  const double drag = 6.0 * std::numbers::pi * viscosity_pa_s * radius_m;
  return {2.0 * std::numbers::pi * fc_hz * drag, 2.0 * std::numbers::pi * fc_sigma_hz * drag};
}

}  // namespace tweezer
