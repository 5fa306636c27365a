#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tweezer/error.hpp"
#include "tweezer/spectrum.hpp"

namespace tweezer {

enum class ModelKind { Lorentzian, AL, ALConst, ALDark, TwoALNoise };

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Lorentzian: return "lorentzian";
    case ModelKind::AL: return "al";
    case ModelKind::ALConst: return "al_const";
    case ModelKind::ALDark: return "al_dark";
    case ModelKind::TwoALNoise: return "two_al_noise";
  }
  throw UnknownKind("unhandled model kind");
}

inline ModelKind model_kind_from_string(std::string_view name) {
  for (auto k : {ModelKind::Lorentzian, ModelKind::AL, ModelKind::ALConst, ModelKind::ALDark, ModelKind::TwoALNoise}) {
    if (to_string(k) == name) return k;
  }
  throw UnknownKind("unknown model '" + std::string(name) + "'");
}

/// Free-parameter names, in vector order, for each kind.
inline std::vector<std::string> parameter_names(ModelKind kind) {
  switch (kind) {
    case ModelKind::Lorentzian:
    case ModelKind::AL: return {"D", "fc"};
    case ModelKind::ALConst: return {"D", "fc", "c0"};
    case ModelKind::ALDark: return {"D", "fc", "beta"};
    case ModelKind::TwoALNoise: return {"D_r", "fc_r", "D_z", "fc_z", "c0"};
  }
  throw UnknownKind("unhandled model kind");
}

inline std::size_t parameter_count(ModelKind kind) { return parameter_names(kind).size(); }

/// Declarative spectral model.
///
/// `D` is an effective amplitude in the unit of the spectrum times Hz: for a
/// calibrated position it is the diffusion coefficient, for a detector
/// voltage it carries the unknown gain squared.
struct ModelSpec {
  ModelKind kind = ModelKind::ALConst;
  double sample_rate_hz = 0.0;
  std::shared_ptr<const Spectrum> dark;  ///< reference PSD for ALDark
  bool interpolate_dark = false;
};

/// One-sided Lorentzian D / (pi^2 (fc^2 + f^2)).
inline double lorentzian_eval(double f, double diffusion, double fc) {
  return diffusion / (std::numbers::pi * std::numbers::pi * (fc * fc + f * f));
}

namespace detail {

struct ALTerms {
  double value;
  double d_diffusion;
  double d_fc;
};

// 2 dt v (1 - c^2) / (1 + c^2 - 2c cos w), with the denominator written as
// (1 - c)^2 + 4 c sin^2(w/2) to keep precision when c -> 1 and w -> 0.
inline ALTerms aliased_lorentzian_terms(double f, double diffusion, double fc, double rate) {
  const double dt = 1.0 / rate;
  const double a = 2.0 * std::numbers::pi * fc * dt;
  const double c = std::exp(-a);
  const double one_minus_c = -std::expm1(-a);
  const double one_minus_c2 = -std::expm1(-2.0 * a);
  const double half_w = std::numbers::pi * f * dt;
  const double sh = std::sin(half_w);
  const double den = one_minus_c * one_minus_c + 4.0 * c * sh * sh;
  const double g = one_minus_c2 / den;
  const double unit = 2.0 * dt / (2.0 * std::numbers::pi * fc);  // 2 dt v / D
  const double value = diffusion * unit * g;

  // d den / dc = 2c - 2cos w = -2(1 - c) + 4 sin^2(w/2)
  const double dden_dc = -2.0 * one_minus_c + 4.0 * sh * sh;
  const double dg_dc = (-2.0 * c * den - one_minus_c2 * dden_dc) / (den * den);
  const double dc_dfc = -2.0 * std::numbers::pi * dt * c;
  const double d_fc = -value / fc + diffusion * unit * dg_dc * dc_dfc;
  return {value, unit * g, d_fc};
}

}  // namespace detail

/// PSD of the sampled OU process (aliased Lorentzian), one-sided:
///   2 dt v (1 - c^2) / (1 + c^2 - 2c cos(2 pi f dt)),
///   c = exp(-2 pi fc dt), v = D / (2 pi fc).
inline double aliased_lorentzian_eval(double f, double diffusion, double fc, double sample_rate_hz) {
  return detail::aliased_lorentzian_terms(f, diffusion, fc, sample_rate_hz).value;
}

/// Dark reference values on `freqs`: exact grid points, or linear
/// interpolation in power when the ModelSpec enables it.
inline std::vector<double> dark_on_grid(const ModelSpec& spec, std::span<const double> freqs) {
  if (!spec.dark) throw GridMismatch("al_dark model has no dark reference spectrum");
  const auto& df = spec.dark->freqs_hz;
  const auto& dp = spec.dark->power;
  std::vector<double> out(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double f = freqs[i];
    auto it = std::lower_bound(df.begin(), df.end(), f * (1.0 - 1e-9));
    if (it != df.end() && std::abs(*it - f) <= 1e-9 * std::abs(f)) {
      out[i] = dp[static_cast<std::size_t>(it - df.begin())];
      continue;
    }
    if (!spec.interpolate_dark) {
      throw GridMismatch("dark spectrum has no bin at " + std::to_string(f) + " Hz");
    }
    if (it == df.begin() || it == df.end()) {
      throw GridMismatch("frequency " + std::to_string(f) + " Hz lies outside the dark spectrum");
    }
    const std::size_t hi = static_cast<std::size_t>(it - df.begin());
    const std::size_t lo = hi - 1;
    const double t = (f - df[lo]) / (df[hi] - df[lo]);
    out[i] = dp[lo] + t * (dp[hi] - dp[lo]);
  }
  return out;
}

/// A model bound to a fixed frequency grid. Dark values are resolved once.
class BoundModel {
 public:
  BoundModel(ModelSpec spec, std::vector<double> freqs) : spec_(std::move(spec)), freqs_(std::move(freqs)) {
    if (spec_.kind != ModelKind::Lorentzian && !(spec_.sample_rate_hz > 0.0)) {
      throw RateError("aliased models need a positive sample rate");
    }
    if (spec_.kind == ModelKind::ALDark) {
      dark_ = dark_on_grid(spec_, freqs_);
      ModelSpec sigma_view = spec_;
      auto as_power = std::make_shared<Spectrum>(*spec_.dark);
      as_power->power = as_power->sigma;
      sigma_view.dark = std::move(as_power);
      dark_sigma_ = dark_on_grid(sigma_view, freqs_);
    }
  }

  /// Dark reference and its per-bin standard error on this grid (ALDark only).
  std::span<const double> dark_values() const noexcept { return dark_; }
  std::span<const double> dark_sigma() const noexcept { return dark_sigma_; }

  const ModelSpec& spec() const noexcept { return spec_; }
  std::span<const double> freqs() const noexcept { return freqs_; }
  std::size_t n_params() const { return parameter_count(spec_.kind); }

  std::vector<double> eval(std::span<const double> params) const {
    std::vector<double> out(freqs_.size());
    compute(params, out, nullptr);
    return out;
  }

  /// jac[j][k] = dM(f_k)/dtheta_j
  std::vector<std::vector<double>> gradient(std::span<const double> params) const {
    std::vector<double> out(freqs_.size());
    std::vector<std::vector<double>> jac(n_params(), std::vector<double>(freqs_.size()));
    compute(params, out, &jac);
    return jac;
  }

  void eval_with_gradient(std::span<const double> params, std::vector<double>& out,
                          std::vector<std::vector<double>>& jac) const {
    out.resize(freqs_.size());
    jac.assign(n_params(), std::vector<double>(freqs_.size()));
    compute(params, out, &jac);
  }

 private:
  static double nonneg(double v) { return v > 0.0 ? v : 0.0; }
  double positive_fc(double fc) const {
    const double floor = 1e-12 * (spec_.sample_rate_hz > 0.0 ? spec_.sample_rate_hz : 1.0);
    return fc > floor ? fc : floor;
  }

  void compute(std::span<const double> p, std::vector<double>& out, std::vector<std::vector<double>>* jac) const {
    if (p.size() != n_params()) {
      throw ConfigError("model " + std::string(to_string(spec_.kind)) + " expects " + std::to_string(n_params()) +
                          " parameters, got " + std::to_string(p.size()));
    }
    const double rate = spec_.sample_rate_hz;
    for (std::size_t k = 0; k < freqs_.size(); ++k) {
      const double f = freqs_[k];
      switch (spec_.kind) {
        case ModelKind::Lorentzian: {
          const double d = nonneg(p[0]);
          const double fc = positive_fc(p[1]);
          const double den = std::numbers::pi * std::numbers::pi * (fc * fc + f * f);
          out[k] = d / den;
          if (jac) {
            (*jac)[0][k] = 1.0 / den;
            (*jac)[1][k] = -2.0 * fc * d * std::numbers::pi * std::numbers::pi / (den * den);
          }
          break;
        }
        case ModelKind::AL:
        case ModelKind::ALConst:
        case ModelKind::ALDark: {
          const auto t = detail::aliased_lorentzian_terms(f, nonneg(p[0]), positive_fc(p[1]), rate);
          out[k] = t.value;
          if (jac) {
            (*jac)[0][k] = t.d_diffusion;
            (*jac)[1][k] = t.d_fc;
          }
          if (spec_.kind == ModelKind::ALConst) {
            out[k] += nonneg(p[2]);
            if (jac) (*jac)[2][k] = 1.0;
          } else if (spec_.kind == ModelKind::ALDark) {
            out[k] += nonneg(p[2]) * dark_[k];
            if (jac) (*jac)[2][k] = dark_[k];
          }
          break;
        }
        case ModelKind::TwoALNoise: {
          const auto r = detail::aliased_lorentzian_terms(f, nonneg(p[0]), positive_fc(p[1]), rate);
          const auto z = detail::aliased_lorentzian_terms(f, nonneg(p[2]), positive_fc(p[3]), rate);
          out[k] = r.value + z.value + nonneg(p[4]);
          if (jac) {
            (*jac)[0][k] = r.d_diffusion;
            (*jac)[1][k] = r.d_fc;
            (*jac)[2][k] = z.d_diffusion;
            (*jac)[3][k] = z.d_fc;
            (*jac)[4][k] = 1.0;
          }
          break;
        }
      }
    }
  }

  ModelSpec spec_;
  std::vector<double> freqs_;
  std::vector<double> dark_;
  std::vector<double> dark_sigma_;
};

inline std::vector<double> model_eval(const ModelSpec& spec, std::span<const double> params,
                                      std::span<const double> freqs) {
  return BoundModel(spec, {freqs.begin(), freqs.end()}).eval(params);
}

/// Analytic partial derivatives, indexed [parameter][frequency].
inline std::vector<std::vector<double>> model_gradient(const ModelSpec& spec, std::span<const double> params,
                                                       std::span<const double> freqs) {
  return BoundModel(spec, {freqs.begin(), freqs.end()}).gradient(params);
}

}  // namespace tweezer
