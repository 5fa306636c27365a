#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tweezer/error.hpp"

namespace tweezer {

namespace detail {

// Neumaier compensated summation, fixed index order.
inline double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

}  // namespace detail

/// Uniformly sampled real signal.
///
/// Holds detector voltages, particle positions or noise streams alike. The
/// constructor enforces a positive sample rate and a non-empty, finite sample
/// vector; once built, a series is immutable.
class TimeSeries {
 public:
  TimeSeries(std::vector<double> samples, double sample_rate_hz)
      : samples_(std::move(samples)), rate_(sample_rate_hz) {
    if (!(rate_ > 0.0) || !std::isfinite(rate_)) {
      throw RateError("sample rate must be positive, got " + std::to_string(rate_));
    }
    if (samples_.empty()) throw InvalidSeries("time series is empty");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i])) {
        throw InvalidSeries("non-finite sample at index " + std::to_string(i));
      }
    }
  }

  std::span<const double> samples() const noexcept { return samples_; }
  double operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const noexcept { return samples_.size(); }
  double sample_rate_hz() const noexcept { return rate_; }
  double dt() const noexcept { return 1.0 / rate_; }
  double duration_s() const noexcept { return static_cast<double>(samples_.size()) / rate_; }

  bool operator==(const TimeSeries&) const = default;

 private:
  std::vector<double> samples_;
  double rate_;
};

/// Acquisition descriptor attached to a recording.
struct RecordingMeta {
  std::string device;
  std::optional<double> power_mw;
  std::string notes;
};

/// Named set of synchronized channels (X, S, Xk, ...).
class Recording {
 public:
  Recording() = default;

  explicit Recording(std::map<std::string, TimeSeries> channels, RecordingMeta meta = {})
      : channels_(std::move(channels)), meta_(std::move(meta)) {
    const TimeSeries* first = nullptr;
    for (const auto& [name, series] : channels_) {
      if (name.empty()) throw SchemaError("channel name must be non-empty");
      if (first == nullptr) {
        first = &series;
        continue;
      }
      if (series.size() != first->size()) {
        throw SchemaError("channel '" + name + "' length differs from the others");
      }
      if (series.sample_rate_hz() != first->sample_rate_hz()) {
        throw SchemaError("channel '" + name + "' sample rate differs from the others");
      }
    }
  }

  bool has(const std::string& name) const { return channels_.contains(name); }

  const TimeSeries& channel(const std::string& name) const {
    auto it = channels_.find(name);
    if (it == channels_.end()) throw UnknownChannel("no channel named '" + name + "'");
    return it->second;
  }

  const std::map<std::string, TimeSeries>& channels() const noexcept { return channels_; }
  const RecordingMeta& meta() const noexcept { return meta_; }
  std::size_t size() const noexcept { return channels_.empty() ? 0 : channels_.begin()->second.size(); }
  double sample_rate_hz() const noexcept {
    return channels_.empty() ? 0.0 : channels_.begin()->second.sample_rate_hz();
  }

  std::vector<std::string> channel_names() const {
    std::vector<std::string> names;
    for (const auto& [name, _] : channels_) names.push_back(name);
    return names;
  }

 private:
  std::map<std::string, TimeSeries> channels_;
  RecordingMeta meta_;
};

inline double mean(std::span<const double> values) {
  return detail::compensated_sum(values) / static_cast<double>(values.size());
}

inline double mean(const TimeSeries& series) { return mean(series.samples()); }

/// Population standard deviation (1/N normalization).
inline double stddev(std::span<const double> values) {
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

inline double stddev(const TimeSeries& series) { return stddev(series.samples()); }

/// Series minus its time average.
inline TimeSeries deviation(const TimeSeries& series) {
  const double m = mean(series);
  std::vector<double> out(series.size());
  std::transform(series.samples().begin(), series.samples().end(), out.begin(),
                 [m](double v) { return v - m; });
  // One correction pass removes the residual rounding offset of the first.
  const double residual = detail::compensated_sum(out) / static_cast<double>(out.size());
  if (residual != 0.0) {
    for (double& v : out) v -= residual;
  }
  return TimeSeries(std::move(out), series.sample_rate_hz());
}

struct GuardedRatio {
  TimeSeries series;
  std::size_t guarded_count = 0;
};

namespace detail {

inline void require_aligned(const TimeSeries& a, const TimeSeries& b) {
  if (a.size() != b.size()) throw InvalidSeries("numerator and denominator lengths differ");
  if (a.sample_rate_hz() != b.sample_rate_hz()) {
    throw InvalidSeries("numerator and denominator sample rates differ");
  }
}

}  // namespace detail

inline double default_guard(const TimeSeries& den) {
  double peak = 0.0;
  for (double v : den.samples()) peak = std::max(peak, std::abs(v));
  return 1e-6 * peak;
}

/// Sample-by-sample division num/den.
///
/// Samples with |den| < guard are divided by sign(den)*guard instead and
/// counted. If such samples reach 0.1% of the record the denominator is
/// considered lost (laser off, particle escaped) and DenominatorCollapse is
/// thrown. The guard defaults to 1e-6 of max|den|.
inline GuardedRatio ratio_instantaneous(const TimeSeries& num, const TimeSeries& den,
                                        std::optional<double> guard = std::nullopt) {
  detail::require_aligned(num, den);
  const double g = guard.value_or(default_guard(den));
  if (!(g > 0.0)) throw DenominatorCollapse("guard threshold is not positive (denominator identically zero?)");

  std::vector<double> out(num.size());
  std::size_t guarded = 0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    double d = den[i];
    if (std::abs(d) < g) {
      d = (d < 0.0 ? -g : g);
      ++guarded;
    }
    out[i] = num[i] / d;
  }
  if (static_cast<double>(guarded) >= 1e-3 * static_cast<double>(num.size())) {
    throw DenominatorCollapse(std::to_string(guarded) + " of " + std::to_string(num.size()) +
                              " denominator samples below guard");
  }
  return {TimeSeries(std::move(out), num.sample_rate_hz()), guarded};
}

/// num divided by the scalar time average of den.
inline TimeSeries ratio_mean(const TimeSeries& num, const TimeSeries& den) {
  detail::require_aligned(num, den);
  const double m = mean(den);
  double scale = 0.0;
  for (double v : den.samples()) scale = std::max(scale, std::abs(v));
  if (std::abs(m) <= 64.0 * std::numeric_limits<double>::epsilon() * scale || m == 0.0) {
    throw ZeroMeanDenominator("mean of denominator is zero to machine precision");
  }
  std::vector<double> out(num.size());
  std::transform(num.samples().begin(), num.samples().end(), out.begin(),
                 [m](double v) { return v / m; });
  return TimeSeries(std::move(out), num.sample_rate_hz());
}

}  // namespace tweezer
