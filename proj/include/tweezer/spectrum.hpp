#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tweezer/error.hpp"
#include "tweezer/fft.hpp"
#include "tweezer/timeseries.hpp"

namespace tweezer {

/// Frequency band [f_min, f_max] in Hz.
struct Band {
  double f_min = 0.0;
  double f_max = 0.0;
  bool operator==(const Band&) const = default;
};

/// One-sided power spectral density estimate.
///
/// Normalized so that the sum of power*df over the grid equals the variance
/// of the (mean-removed) input. DC is never part of the grid; the Nyquist
/// bin is included for even block lengths.
struct Spectrum {
  std::vector<double> freqs_hz;
  std::vector<double> power;
  std::vector<double> sigma;
  std::size_t n_blocks = 1;
  std::size_t block_length = 0;
  double source_rate_hz = 0.0;
  Band band;
  bool dark = false;
  std::string label;

  std::size_t size() const noexcept { return freqs_hz.size(); }
  double resolution_hz() const noexcept {
    return block_length > 0 ? source_rate_hz / static_cast<double>(block_length) : 0.0;
  }
  double nyquist_hz() const noexcept { return source_rate_hz / 2.0; }
};

namespace detail {

// Accumulates the one-sided periodogram of `block` (mean removed) into `acc`.
inline void accumulate_periodogram(fft::RealForward& plan, std::span<const double> block, double rate,
                                   std::vector<double>& acc) {
  const std::size_t n = block.size();
  const double m = mean(block);
  auto in = plan.input();
  for (std::size_t i = 0; i < n; ++i) in[i] = block[i] - m;
  plan.execute();
  const double dt = 1.0 / rate;
  const double scale = 2.0 * dt / static_cast<double>(n);
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k <= half; ++k) {
    double p = scale * plan.norm2(k);
    if (n % 2 == 0 && k == half) p *= 0.5;  // Nyquist bin has no mirror image
    acc[k - 1] += p;
  }
}

inline Spectrum make_grid(std::size_t block_length, double rate, std::size_t n_blocks) {
  Spectrum s;
  const std::size_t bins = block_length / 2;
  s.freqs_hz.resize(bins);
  const double df = rate / static_cast<double>(block_length);
  for (std::size_t k = 1; k <= bins; ++k) s.freqs_hz[k - 1] = df * static_cast<double>(k);
  s.power.assign(bins, 0.0);
  s.sigma.assign(bins, 0.0);
  s.n_blocks = n_blocks;
  s.block_length = block_length;
  s.source_rate_hz = rate;
  s.band = {s.freqs_hz.front(), s.freqs_hz.back()};
  return s;
}

}  // namespace detail

/// Single-block, rectangular-window periodogram of the mean-removed series.
///
/// P(f_k) = (2 dt / N) |DFT_k|^2 for 0 < k < N/2; the Nyquist bin of an even
/// record carries (dt / N) |DFT_k|^2. Sigma equals power (one block gives a
/// 100% relative error).
inline Spectrum periodogram(const TimeSeries& series) {
  const std::size_t n = series.size();
  if (n < 4) throw TooShort("periodogram needs at least 4 samples, got " + std::to_string(n));
  Spectrum s = detail::make_grid(n, series.sample_rate_hz(), 1);
  fft::RealForward plan(n);
  detail::accumulate_periodogram(plan, series.samples(), series.sample_rate_hz(), s.power);
  s.sigma = s.power;
  return s;
}

/// Bartlett estimate: mean of the periodograms of n_blocks equal,
/// non-overlapping blocks (tail remainder discarded); sigma = power/sqrt(n).
inline Spectrum bartlett_psd(const TimeSeries& series, std::size_t n_blocks) {
  if (n_blocks < 2) throw BadBlockCount("Bartlett averaging needs n_blocks >= 2, got " + std::to_string(n_blocks));
  if (series.size() < 4 * n_blocks) {
    throw TooShort(std::to_string(series.size()) + " samples cannot fill " + std::to_string(n_blocks) +
                   " blocks of at least 4");
  }
  const std::size_t len = series.size() / n_blocks;
  Spectrum s = detail::make_grid(len, series.sample_rate_hz(), n_blocks);
  fft::RealForward plan(len);
  const auto all = series.samples();
  for (std::size_t b = 0; b < n_blocks; ++b) {
    detail::accumulate_periodogram(plan, all.subspan(b * len, len), series.sample_rate_hz(), s.power);
  }
  const double inv = 1.0 / static_cast<double>(n_blocks);
  const double rel = 1.0 / std::sqrt(static_cast<double>(n_blocks));
  for (std::size_t k = 0; k < s.size(); ++k) {
    s.power[k] *= inv;
    s.sigma[k] = s.power[k] * rel;
  }
  return s;
}

/// Bartlett PSD of a channel recorded with the trapping laser off.
inline Spectrum dark_psd(const Recording& recording, const std::string& channel, std::size_t n_blocks) {
  Spectrum s = bartlett_psd(recording.channel(channel), n_blocks);
  s.dark = true;
  s.label = "dark:" + channel;
  return s;
}

/// Highest bin whose expected value is the one-sided density. The Nyquist
/// bin of an even block holds half a bin of density (it has no mirror
/// image), so it is skipped when present.
inline double highest_full_bin_hz(const Spectrum& spec) {
  if (spec.freqs_hz.empty()) throw EmptyBand("spectrum has no bins");
  const double top = spec.freqs_hz.back();
  const bool at_nyquist = spec.block_length % 2 == 0 && spec.source_rate_hz > 0.0 &&
                          std::abs(top - spec.nyquist_hz()) <= 1e-9 * spec.nyquist_hz();
  if (at_nyquist && spec.freqs_hz.size() >= 2) return spec.freqs_hz[spec.freqs_hz.size() - 2];
  return top;
}

/// Keeps the bins with f_min <= f <= f_max. Values are copied untouched.
inline Spectrum band_mask(const Spectrum& spec, double f_min, double f_max) {
  if (!(f_min < f_max)) throw EmptyBand("band lower edge must be below upper edge");
  Spectrum out = spec;
  out.freqs_hz.clear();
  out.power.clear();
  out.sigma.clear();
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = spec.freqs_hz[k];
    if (f >= f_min && f <= f_max) {
      out.freqs_hz.push_back(f);
      out.power.push_back(spec.power[k]);
      out.sigma.push_back(spec.sigma[k]);
    }
  }
  if (out.freqs_hz.empty()) {
    throw EmptyBand("no bins in [" + std::to_string(f_min) + ", " + std::to_string(f_max) + "] Hz");
  }
  out.band = {std::max(f_min, spec.band.f_min), std::min(f_max, spec.band.f_max)};
  return out;
}

/// True when both spectra share the same frequency grid point for point.
inline bool same_grid(const Spectrum& a, const Spectrum& b, double rel_tol = 1e-9) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a.freqs_hz[k] - b.freqs_hz[k]) > rel_tol * std::abs(a.freqs_hz[k])) return false;
  }
  return true;
}

/// Writes columns freq_hz, psd, sigma (and model when given) with '#'
/// metadata comments.
inline void export_spectrum(const std::filesystem::path& path, const Spectrum& spec,
                            std::span<const double> model = {}) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (f == nullptr) throw ParseError("cannot write '" + path.string() + "'");
  std::fprintf(f, "# n_blocks: %zu\n", spec.n_blocks);
  std::fprintf(f, "# block_length: %zu\n", spec.block_length);
  std::fprintf(f, "# source_rate_hz: %.17g\n", spec.source_rate_hz);
  std::fprintf(f, "# band: %.17g %.17g\n", spec.band.f_min, spec.band.f_max);
  std::fprintf(f, "# dark: %d\n", spec.dark ? 1 : 0);
  if (!spec.label.empty()) std::fprintf(f, "# label: %s\n", spec.label.c_str());
  const bool with_model = model.size() == spec.size() && !model.empty();
  std::fprintf(f, with_model ? "freq_hz\tpsd\tsigma\tmodel\n" : "freq_hz\tpsd\tsigma\n");
  for (std::size_t k = 0; k < spec.size(); ++k) {
    std::fprintf(f, "%.17g\t%.17g\t%.17g", spec.freqs_hz[k], spec.power[k], spec.sigma[k]);
    if (with_model) std::fprintf(f, "\t%.17g", model[k]);
    std::fputc('\n', f);
  }
  std::fclose(f);
}

/// Reads a spectrum written by export_spectrum.
inline Spectrum load_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  Spectrum s;
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      char key[64] = {0};
      if (std::sscanf(line.c_str(), "# %63[^:]:", key) != 1) continue;
      const std::string k(key);
      const char* value = line.c_str() + line.find(':') + 1;
      if (k == "n_blocks") {
        s.n_blocks = std::strtoull(value, nullptr, 10);
      } else if (k == "block_length") {
        s.block_length = std::strtoull(value, nullptr, 10);
      } else if (k == "source_rate_hz") {
        s.source_rate_hz = std::strtod(value, nullptr);
      } else if (k == "band") {
        std::sscanf(value, "%lf %lf", &s.band.f_min, &s.band.f_max);
      } else if (k == "dark") {
        s.dark = std::strtol(value, nullptr, 10) != 0;
      } else if (k == "label") {
        s.label = std::string(value + (value[0] == ' ' ? 1 : 0));
      }
      continue;
    }
    if (!header_seen && line.rfind("freq_hz", 0) == 0) {
      header_seen = true;
      continue;
    }
    double f = 0.0, p = 0.0, sg = 0.0;
    if (std::sscanf(line.c_str(), "%lf%*[ \t,]%lf%*[ \t,]%lf", &f, &p, &sg) != 3 || !std::isfinite(f) ||
        !std::isfinite(p) || !std::isfinite(sg)) {
      throw ParseError("spectrum row " + std::to_string(row) + " is malformed");
    }
    s.freqs_hz.push_back(f);
    s.power.push_back(p);
    s.sigma.push_back(sg);
  }
  if (s.freqs_hz.empty()) throw ParseError("'" + path.string() + "' holds no spectrum rows");
  if (!(s.source_rate_hz > 0.0)) throw ParseError("'" + path.string() + "' lacks source_rate_hz");
  if (s.band.f_max <= 0.0) s.band = {s.freqs_hz.front(), s.freqs_hz.back()};
  return s;
}

}  // namespace tweezer
