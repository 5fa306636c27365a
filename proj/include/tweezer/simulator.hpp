#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tweezer/error.hpp"
#include "tweezer/fft.hpp"
#include "tweezer/timeseries.hpp"

namespace tweezer::sim {

/// Overdamped trap along one axis.
struct AxisParams {
  double fc_hz = 0.0;      ///< corner frequency
  double diffusion = 0.0;  ///< D in m^2/s (or any squared unit per second)

  /// Stationary variance D/(2 pi fc).
  double variance() const { return diffusion / (2.0 * std::numbers::pi * fc_hz); }
};

struct TrapParams {
  AxisParams radial;
  AxisParams axial;
};

/// Detector gains and the laser power feeding them.
struct DetectorParams {
  double alpha_x = 1.0;        ///< PS detector X gain, V/(m W)
  double alpha_s = 1.0;        ///< PS detector sum gain, V/W
  double alpha_0 = 0.0;        ///< knife detector offset gain, V/W
  double alpha_knife_x = 0.0;  ///< knife detector position gain, V/(m W)
  double mean_power_w = 1.0;
  double axial_power_coupling = 0.0;  ///< relative power change per unit z
  double beam_offset = 0.0;           ///< static radial miscentering, same unit as x_p
};

struct MainsLine {
  double center_hz = 60.0;
  double width_hz = 1.0;  ///< Gaussian standard deviation
  double height = 0.0;    ///< peak one-sided PSD, V^2/Hz
};

/// Closed-form one-sided noise PSD: white + pink/f^gamma + Gaussian lines.
struct NoiseSpec {
  double white_level = 0.0;
  double pink_level = 0.0;
  double pink_exponent = 1.0;
  std::vector<MainsLine> mains_lines;

  double psd(double f) const {
    double p = white_level;
    if (pink_level > 0.0 && f > 0.0) p += pink_level / std::pow(f, pink_exponent);
    for (const auto& line : mains_lines) {
      const double u = (f - line.center_hz) / line.width_hz;
      p += line.height * std::exp(-0.5 * u * u);
    }
    return p;
  }

  bool silent() const {
    if (white_level > 0.0 || pink_level > 0.0) return false;
    for (const auto& line : mains_lines) {
      if (line.height > 0.0) return false;
    }
    return true;
  }

  void validate() const {
    if (white_level < 0.0 || pink_level < 0.0) throw SpecError("noise levels must be >= 0");
    if (!(pink_exponent > 0.0 && pink_exponent <= 2.0)) throw SpecError("pink exponent must lie in (0, 2]");
    for (const auto& line : mains_lines) {
      if (!(line.width_hz > 0.0)) throw SpecError("mains line width must be > 0");
      if (line.height < 0.0) throw SpecError("mains line height must be >= 0");
    }
  }
};

/// Sub-stream identifiers; each derives an independent generator from the
/// master seed.
enum class Stream : std::uint32_t { Radial = 1, Axial = 2, NoiseX = 3, NoiseS = 4, NoiseXk = 5 };

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    stream, 0x7eeu};
  return std::mt19937_64(seq);
}

/// Exact discretization of the Ornstein-Uhlenbeck process:
///   x[k+1] = c x[k] + sigma1 xi[k],  c = exp(-2 pi fc dt),
///   sigma1^2 = (1 - c^2) D / (2 pi fc),
/// started from the stationary distribution. Deterministic given the seed.
inline TimeSeries simulate_ou(const AxisParams& axis, double sample_rate_hz, std::size_t n_samples,
                              std::uint64_t seed, std::uint32_t stream = 0) {
  if (n_samples < 2) throw InvalidSeries("simulate_ou needs n_samples >= 2");
  if (!(axis.fc_hz > 0.0)) throw SpecError("corner frequency must be > 0");
  if (axis.diffusion < 0.0) throw SpecError("diffusion must be >= 0");
  if (!(sample_rate_hz > 0.0)) throw RateError("sample rate must be positive");

  const double dt = 1.0 / sample_rate_hz;
  const double rate = 2.0 * std::numbers::pi * axis.fc_hz * dt;
  const double c = std::exp(-rate);
  const double variance = axis.variance();
  const double sigma1 = std::sqrt(-std::expm1(-2.0 * rate) * variance);

  auto rng = make_rng(seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n_samples);
  x[0] = std::sqrt(variance) * normal(rng);
  for (std::size_t k = 1; k < n_samples; ++k) x[k] = c * x[k - 1] + sigma1 * normal(rng);
  return TimeSeries(std::move(x), sample_rate_hz);
}

/// Gaussian noise with expected one-sided PSD equal to spec.psd(f).
///
/// Shaped in the frequency domain: every positive-frequency bin receives an
/// independent complex Gaussian coefficient of variance psd(f_k) N fs / 2
/// (the Nyquist bin a real one), DC is zero, and the inverse DFT yields the
/// series.
inline TimeSeries synthesize_noise(const NoiseSpec& spec, double sample_rate_hz, std::size_t n_samples,
                                   std::uint64_t seed, std::uint32_t stream = 0) {
  if (n_samples < 2) throw InvalidSeries("synthesize_noise needs n_samples >= 2");
  spec.validate();
  if (spec.silent()) throw SpecError("noise spectrum is zero everywhere");

  const std::size_t n = n_samples;
  const double nd = static_cast<double>(n);
  const double df = sample_rate_hz / nd;
  auto rng = make_rng(seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::complex<double>> half(n / 2 + 1);
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double level = spec.psd(df * static_cast<double>(k));
    if (n % 2 == 0 && k == n / 2) {
      half[k] = {std::sqrt(level * nd * sample_rate_hz) * normal(rng), 0.0};
    } else {
      const double s = std::sqrt(level * nd * sample_rate_hz / 4.0);
      const double re = normal(rng);
      const double im = normal(rng);
      half[k] = {s * re, s * im};
    }
  }
  auto x = fft::inverse_real(half, n);
  for (double& v : x) v /= nd;
  return TimeSeries(std::move(x), sample_rate_hz);
}

/// Same stream of noise, or zeros when the NoiseSpec is silent.
inline std::vector<double> noise_or_zero(const NoiseSpec& spec, double rate, std::size_t n, std::uint64_t seed,
                                         Stream stream) {
  if (spec.silent()) return std::vector<double>(n, 0.0);
  auto s = synthesize_noise(spec, rate, n, seed, static_cast<std::uint32_t>(stream));
  return {s.samples().begin(), s.samples().end()};
}

struct ChannelNoise {
  NoiseSpec x;
  NoiseSpec s;
  NoiseSpec xk;
};

/// Forward model of the detection chain.
///
///   P(t)  = <P> (1 + g_z z_p(t))
///   X(t)  = alpha_x (x_p(t) + x_0) P(t) + eta_X(t)
///   S(t)  = alpha_s P(t) + eta_S(t)
///   Xk(t) = (alpha_0 + alpha_knife_x x_p(t)) P(t) + eta_Xk(t)
///
/// x_p and z_p are independent OU paths; every stream has its own sub-seed.
inline Recording synthesize_recording(const TrapParams& trap, const DetectorParams& det, const ChannelNoise& noise,
                                      double sample_rate_hz, std::size_t n_samples, std::uint64_t seed,
                                      RecordingMeta meta = {}) {
  if (!(det.alpha_s > 0.0)) throw SpecError("alpha_s must be > 0");
  if (!(det.mean_power_w > 0.0)) throw SpecError("mean power must be > 0");

  const auto xp = simulate_ou(trap.radial, sample_rate_hz, n_samples, seed, static_cast<std::uint32_t>(Stream::Radial));
  const auto zp = simulate_ou(trap.axial, sample_rate_hz, n_samples, seed, static_cast<std::uint32_t>(Stream::Axial));
  const auto eta_x = noise_or_zero(noise.x, sample_rate_hz, n_samples, seed, Stream::NoiseX);
  const auto eta_s = noise_or_zero(noise.s, sample_rate_hz, n_samples, seed, Stream::NoiseS);
  const auto eta_k = noise_or_zero(noise.xk, sample_rate_hz, n_samples, seed, Stream::NoiseXk);

  std::vector<double> x(n_samples), s(n_samples), xk(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double p = det.mean_power_w * (1.0 + det.axial_power_coupling * zp[i]);
    x[i] = det.alpha_x * (xp[i] + det.beam_offset) * p + eta_x[i];
    s[i] = det.alpha_s * p + eta_s[i];
    xk[i] = (det.alpha_0 + det.alpha_knife_x * xp[i]) * p + eta_k[i];
  }
  std::map<std::string, TimeSeries> channels;
  channels.emplace("X", TimeSeries(std::move(x), sample_rate_hz));
  channels.emplace("S", TimeSeries(std::move(s), sample_rate_hz));
  channels.emplace("Xk", TimeSeries(std::move(xk), sample_rate_hz));
  return Recording(std::move(channels), std::move(meta));
}

/// Laser-off recording: every channel carries only its electronic noise.
inline Recording synthesize_dark_recording(const ChannelNoise& noise, double sample_rate_hz, std::size_t n_samples,
                                           std::uint64_t seed, RecordingMeta meta = {}) {
  std::map<std::string, TimeSeries> channels;
  channels.emplace("X", TimeSeries(noise_or_zero(noise.x, sample_rate_hz, n_samples, seed, Stream::NoiseX), sample_rate_hz));
  channels.emplace("S", TimeSeries(noise_or_zero(noise.s, sample_rate_hz, n_samples, seed, Stream::NoiseS), sample_rate_hz));
  channels.emplace("Xk", TimeSeries(noise_or_zero(noise.xk, sample_rate_hz, n_samples, seed, Stream::NoiseXk), sample_rate_hz));
  return Recording(std::move(channels), std::move(meta));
}

/// Complete simulation scenario, as read from a scenario file.
struct Scenario {
  TrapParams trap;
  DetectorParams detector;
  ChannelNoise noise;
  double sample_rate_hz = 10000.0;
  std::size_t n_samples = 1u << 20;
  std::uint64_t seed = 1;
  bool laser_off = false;
  RecordingMeta meta;
};

inline Recording run_scenario(const Scenario& sc) {
  if (sc.laser_off) return synthesize_dark_recording(sc.noise, sc.sample_rate_hz, sc.n_samples, sc.seed, sc.meta);
  return synthesize_recording(sc.trap, sc.detector, sc.noise, sc.sample_rate_hz, sc.n_samples, sc.seed, sc.meta);
}

}  // namespace tweezer::sim
