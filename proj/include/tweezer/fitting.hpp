#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tweezer/error.hpp"
#include "tweezer/models.hpp"
#include "tweezer/spectrum.hpp"

namespace tweezer {

enum class WeightMode {
  Data,          ///< sigma_k taken from the spectrum (measured power / sqrt(n))
  ModelRefined,  ///< one extra pass with sigma_k = M(f_k) / sqrt(n)
};

inline std::string_view to_string(WeightMode m) { return m == WeightMode::Data ? "data" : "model_refined"; }

inline WeightMode weight_mode_from_string(std::string_view s) {
  if (s == "data") return WeightMode::Data;
  if (s == "model_refined" || s == "model") return WeightMode::ModelRefined;
  throw ConfigError("unknown weight mode '" + std::string(s) + "'");
}

struct FitOptions {
  int max_iterations = 200;
  double rel_step_tol = 1e-8;
  double rel_chi2_tol = 1e-10;
  WeightMode weight_mode = WeightMode::Data;
  /// Fit amplitudes and corner frequencies through their logarithms.
  bool log_space = false;
  /// Optional per-parameter bounds; empty means [0, +inf) for every parameter.
  std::vector<double> lower;
  std::vector<double> upper;
  /// For ALDark, add beta^2 times the dark spectrum's variance to each
  /// bin's variance (effective-variance weighting of the noisy reference).
  bool propagate_reference_sigma = true;
  /// ModelRefined: reweighting passes at most, and the relative weight
  /// change below which the weights count as settled.
  int max_refinements = 8;
  double refinement_tol = 1e-6;
};

struct FitResult {
  ModelKind kind = ModelKind::ALConst;
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> param_sigma;      ///< scaled by sqrt(max(1, chi2_reduced))
  std::vector<double> param_sigma_raw;  ///< from the unscaled inverse normal matrix
  std::vector<std::vector<double>> covariance;
  double chi2 = 0.0;
  double chi2_reduced = 0.0;
  std::size_t n_points = 0;
  int n_iterations = 0;
  bool converged = false;
  Band band;
  WeightMode weight_mode = WeightMode::Data;

  double param(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return params[i];
    }
    throw ConfigError("fit has no parameter '" + std::string(name) + "'");
  }
  double sigma(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return param_sigma[i];
    }
    throw ConfigError("fit has no parameter '" + std::string(name) + "'");
  }
  /// Radial corner frequency (fc, or fc_r for the two-component model).
  double corner_hz() const { return kind == ModelKind::TwoALNoise ? param("fc_r") : param("fc"); }
  double corner_sigma_hz() const { return kind == ModelKind::TwoALNoise ? sigma("fc_r") : sigma("fc"); }
};

/// Iteration cap reached; carries the last iterate.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, FitResult partial)
      : Error(Category::Numerical, "NoConvergence: " + what), partial_(std::move(partial)) {}
  const FitResult& partial() const noexcept { return partial_; }

 private:
  FitResult partial_;
};

struct InitGuess {
  std::vector<double> params;
  bool degenerate_fallback = false;
};

/// Starting point for wls_fit.
///
/// Linearizes a Lorentzian on the lower half of the bins (1/P against f^2:
/// slope b, intercept a, fc = sqrt(a/b), D = pi^2/b). Aliased models use
/// the abscissa sin^2(pi f dt) instead, against which the reciprocal of an
/// aliased Lorentzian is exactly linear. Noise-floor terms
/// start from the mean excess of the top-decile bins over that Lorentzian.
/// When a or b is not positive (or b is lost in rounding) the spectrum is
/// degenerate and fc falls back to Nyquist/10.
inline InitGuess init_guess(const ModelSpec& spec, const Spectrum& spectrum) {
  const std::size_t n = spectrum.size();
  if (n < 8) throw DegenerateSpectrum("initial guess needs at least 8 bins, got " + std::to_string(n));
  // Bins are ranked by frequency, so the guess does not depend on their order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return spectrum.freqs_hz[i] < spectrum.freqs_hz[j]; });
  const bool aliased = spec.kind != ModelKind::Lorentzian && spec.sample_rate_hz > 0.0;
  const double dt = aliased ? 1.0 / spec.sample_rate_hz : 0.0;
  auto abscissa = [&](double f) {
    if (!aliased) return f * f;
    const double s = std::sin(std::numbers::pi * f * dt);
    return s * s;
  };
  const std::size_t low = n / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t r = 0; r < low; ++r) {
    const std::size_t k = order[r];
    const double x = abscissa(spectrum.freqs_hz[k]);
    const double y = spectrum.power[k] > 0.0 ? 1.0 / spectrum.power[k] : 0.0;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(low);
  const double denom = m * sxx - sx * sx;
  const double b = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  const double a = (sy - b * sx) / m;
  const double pi2 = std::numbers::pi * std::numbers::pi;

  InitGuess guess;
  double fc0 = 0.0;
  double d0 = 0.0;
  // A slope that only reflects rounding (flat spectrum) counts as zero.
  const double x_max = abscissa(spectrum.freqs_hz[order[low - 1]]);
  const bool sloped = b * x_max > 1e-9 * std::abs(a);
  if (a > 0.0 && b > 0.0 && sloped && std::isfinite(a) && std::isfinite(b)) {
    if (aliased) {
      // a/b = (1 - c)^2 / (4c); take the root with 0 < c < 1.
      const double h = 1.0 + 2.0 * a / b;
      const double c = h - std::sqrt(h * h - 1.0);
      fc0 = -std::log(c) / (2.0 * std::numbers::pi * dt);
      const double variance = 4.0 * c / b / (2.0 * dt * (1.0 - c * c));
      d0 = 2.0 * std::numbers::pi * fc0 * variance;
    } else {
      fc0 = std::sqrt(a / b);
      d0 = pi2 / b;
    }
  }
  if (!(fc0 > 0.0 && std::isfinite(fc0) && d0 > 0.0 && std::isfinite(d0))) {
    guess.degenerate_fallback = true;
    fc0 = spectrum.nyquist_hz() / 10.0;
    const std::size_t head = std::max<std::size_t>(1, n / 10);
    double low_level = 0.0;
    for (std::size_t r = 0; r < head; ++r) low_level += spectrum.power[order[r]];
    d0 = pi2 * fc0 * fc0 * low_level / static_cast<double>(head);
  }

  const std::size_t top = n - std::max<std::size_t>(1, n / 10);
  auto floor_excess = [&](std::span<const double> reference) {
    double excess = 0.0;
    double ref = 0.0;
    for (std::size_t r = top; r < n; ++r) {
      const std::size_t k = order[r];
      const double f = spectrum.freqs_hz[k];
      excess += spectrum.power[k] - (aliased ? aliased_lorentzian_eval(f, d0, fc0, spec.sample_rate_hz)
                                             : lorentzian_eval(f, d0, fc0));
      ref += reference.empty() ? 1.0 : reference[k];
    }
    return ref > 0.0 ? std::max(0.0, excess / ref) : 0.0;
  };

  switch (spec.kind) {
    case ModelKind::Lorentzian:
    case ModelKind::AL: guess.params = {d0, fc0}; break;
    case ModelKind::ALConst: guess.params = {d0, fc0, floor_excess({})}; break;
    case ModelKind::ALDark: {
      const auto dark = dark_on_grid(spec, spectrum.freqs_hz);
      guess.params = {d0, fc0, floor_excess(dark)};
      break;
    }
    case ModelKind::TwoALNoise: {
      // Split the low-frequency plateau evenly between the two components.
      const double fz0 = fc0 / 5.0;
      guess.params = {0.5 * d0, fc0, 0.5 * d0 / 25.0, fz0, floor_excess({})};
      break;
    }
  }
  return guess;
}

namespace detail {

inline bool log_capable(ModelKind kind, std::size_t j) {
  switch (kind) {
    case ModelKind::Lorentzian:
    case ModelKind::AL:
    case ModelKind::ALConst:
    case ModelKind::ALDark: return j < 2;
    case ModelKind::TwoALNoise: return j < 4;
  }
  return false;
}

struct Normal {
  Eigen::MatrixXd a;
  Eigen::VectorXd g;
  double chi2 = 0.0;
};

class LeastSquares {
 public:
  LeastSquares(const BoundModel& model, std::span<const double> data, std::vector<double> sigma,
               const FitOptions& options)
      : model_(model), data_(data), var_(sigma.size()), options_(options) {
    for (std::size_t k = 0; k < sigma.size(); ++k) {
      if (!(sigma[k] > 0.0) || !std::isfinite(sigma[k])) {
        throw DegenerateSpectrum("sigma must be positive at every bin (bin " + std::to_string(k) + ")");
      }
      var_[k] = sigma[k] * sigma[k];
    }
    const std::size_t p = model_.n_params();
    lower_ = options.lower.empty() ? std::vector<double>(p, 0.0) : options.lower;
    upper_ = options.upper.empty() ? std::vector<double>(p, std::numeric_limits<double>::infinity()) : options.upper;
    if (lower_.size() != p || upper_.size() != p) throw ConfigError("bounds size does not match parameter count");
    use_log_.assign(p, false);
    if (options.log_space) {
      for (std::size_t j = 0; j < p; ++j) use_log_[j] = log_capable(model_.spec().kind, j);
    }
    if (options.propagate_reference_sigma && model_.spec().kind == ModelKind::ALDark) {
      ref_var_.resize(var_.size());
      const auto ds = model_.dark_sigma();
      for (std::size_t k = 0; k < ds.size(); ++k) ref_var_[k] = ds[k] * ds[k];
    }
  }

  // Total variance of bin k: data error plus the scaled reference error.
  double variance(std::size_t k, std::span<const double> theta) const {
    if (ref_var_.empty()) return var_[k];
    const double beta = theta[kBeta] > 0.0 ? theta[kBeta] : 0.0;
    return var_[k] + beta * beta * ref_var_[k];
  }

  double chi2(std::span<const double> theta) const {
    const auto m = model_.eval(theta);
    double s = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double d = data_[k] - m[k];
      s += d * d / variance(k, theta);
    }
    return s;
  }

  // Gauss-Newton normal equations in the internal coordinates u (theta or
  // log theta). With a propagated reference error the residual
  // r = (P - M) / sqrt(var + beta^2 var_ref) also depends on beta through
  // its denominator; that derivative enters the beta row.
  Normal normal(std::span<const double> theta, bool internal) const {
    std::vector<double> m;
    std::vector<std::vector<double>> jac;
    model_.eval_with_gradient(theta, m, jac);
    const std::size_t p = theta.size();
    Normal ne{Eigen::MatrixXd::Zero(p, p), Eigen::VectorXd::Zero(p), 0.0};
    std::vector<double> row(p);
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double v = variance(k, theta);
      const double w = 1.0 / std::sqrt(v);
      const double r = (data_[k] - m[k]) * w;
      ne.chi2 += r * r;
      for (std::size_t j = 0; j < p; ++j) {
        double d = jac[j][k] * w;
        if (!ref_var_.empty() && j == kBeta && theta[kBeta] > 0.0) d += r * theta[kBeta] * ref_var_[k] / v;
        if (internal && use_log_[j]) d *= theta[j];
        row[j] = d;
      }
      for (std::size_t i = 0; i < p; ++i) {
        ne.g(static_cast<Eigen::Index>(i)) += row[i] * r;
        for (std::size_t j = 0; j <= i; ++j) ne.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += row[i] * row[j];
      }
    }
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        ne.a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = ne.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    return ne;
  }

  std::vector<double> step(std::span<const double> theta, const Eigen::VectorXd& delta) const {
    std::vector<double> next(theta.begin(), theta.end());
    for (std::size_t j = 0; j < next.size(); ++j) {
      const double d = delta(static_cast<Eigen::Index>(j));
      if (use_log_[j] && theta[j] > 0.0) {
        next[j] = theta[j] * std::exp(std::clamp(d, -20.0, 20.0));
      } else {
        next[j] = theta[j] + d;
      }
      next[j] = std::clamp(next[j], lower_[j], upper_[j]);
    }
    return next;
  }

  std::vector<double> project(std::vector<double> theta) const {
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] = std::clamp(theta[j], lower_[j], upper_[j]);
    return theta;
  }

 private:
  const BoundModel& model_;
  std::span<const double> data_;
  static constexpr std::size_t kBeta = 2;  // slot of beta in ALDark
  std::vector<double> var_;
  std::vector<double> ref_var_;
  FitOptions options_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<bool> use_log_;
};

struct IterationOutcome {
  std::vector<double> theta;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped least squares with Marquardt diagonal scaling and bound projection.
inline IterationOutcome damped_least_squares(const LeastSquares& ls, std::vector<double> theta,
                                             const FitOptions& options) {
  theta = ls.project(std::move(theta));
  double lambda = 1e-3;
  IterationOutcome out;
  Normal ne = ls.normal(theta, true);
  double chi2 = ne.chi2;
  const auto p = static_cast<Eigen::Index>(theta.size());

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    out.iterations = iter;
    Eigen::VectorXd diag = ne.a.diagonal();
    const double diag_max = diag.maxCoeff();
    // Only parameters without curvature get a floor; comparing across
    // parameters would tie the damping to their units.
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!(diag(j) > 0.0)) diag(j) = diag_max > 0.0 ? 1e-30 * diag_max : 1.0;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = ne.a;
      damped.diagonal() += lambda * diag;
      Eigen::VectorXd delta = damped.ldlt().solve(ne.g);
      if (!delta.allFinite()) delta = damped.completeOrthogonalDecomposition().solve(ne.g);
      auto trial = ls.step(theta, delta);
      const double trial_chi2 = ls.chi2(trial);

      if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
        double rel_step = 0.0;
        for (std::size_t j = 0; j < trial.size(); ++j) {
          const double scale = std::max(std::abs(theta[j]), std::abs(trial[j]));
          if (scale > 0.0) rel_step = std::max(rel_step, std::abs(trial[j] - theta[j]) / scale);
        }
        const double rel_decrease = chi2 > 0.0 ? (chi2 - trial_chi2) / chi2 : 0.0;
        theta = std::move(trial);
        chi2 = trial_chi2;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (rel_step < options.rel_step_tol || rel_decrease < options.rel_chi2_tol || chi2 == 0.0) {
          out.converged = true;
        }
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // No descent direction left: the current point is a minimum.
          out.converged = true;
          break;
        }
      }
    }
    if (out.converged) break;
    ne = ls.normal(theta, true);
  }
  out.theta = std::move(theta);
  out.chi2 = chi2;
  return out;
}

inline void swap_components(FitResult& r, std::size_t a, std::size_t b) {
  std::swap(r.params[a], r.params[b]);
  std::swap(r.param_sigma[a], r.param_sigma[b]);
  std::swap(r.param_sigma_raw[a], r.param_sigma_raw[b]);
  std::swap(r.covariance[a], r.covariance[b]);
  for (auto& row : r.covariance) std::swap(row[a], row[b]);
}

}  // namespace detail

/// Weighted nonlinear least squares of a spectral model to a spectrum.
///
/// Minimizes sum_k ((P_k - M(f_k; theta)) / sigma_k)^2 by damped least
/// squares with analytic gradients. The covariance is the inverse of the
/// weighted normal matrix at the optimum scaled by max(1, chi2_reduced).
/// With WeightMode::ModelRefined the fit is repeated with every bin
/// weighted by M(f_k)/sqrt(n_blocks) from the previous optimum, until the
/// weights stop changing.
///
/// Throws NoConvergence after options.max_iterations and
/// SingularNormalMatrix when parameters are not separately identifiable.
inline FitResult wls_fit(const Spectrum& spectrum, const ModelSpec& spec, std::vector<double> init,
                         const FitOptions& options = {}) {
  const std::size_t n_params = parameter_count(spec.kind);
  if (init.size() != n_params) throw ConfigError("initial guess has the wrong number of parameters");
  if (spectrum.size() <= n_params) {
    throw DegenerateSpectrum("need more bins (" + std::to_string(spectrum.size()) + ") than parameters");
  }
  const BoundModel model(spec, spectrum.freqs_hz);

  FitResult result;
  result.kind = spec.kind;
  result.names = parameter_names(spec.kind);
  result.n_points = spectrum.size();
  result.band = spectrum.band;
  result.weight_mode = options.weight_mode;

  std::vector<double> sigma = spectrum.sigma;
  detail::LeastSquares first(model, spectrum.power, sigma, options);
  auto outcome = detail::damped_least_squares(first, std::move(init), options);
  int iterations = outcome.iterations;

  // Model weights are recomputed from each refit until they settle: the
  // data-weighted optimum sits low by about 2/n_blocks in amplitude, and
  // weights taken from it alone would inflate chi2 by the same factor.
  std::optional<detail::LeastSquares> refined;
  if (outcome.converged && options.weight_mode == WeightMode::ModelRefined) {
    const double rel = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(spectrum.n_blocks, 1)));
    for (int pass = 0; pass < options.max_refinements && outcome.converged; ++pass) {
      const auto m = model.eval(outcome.theta);
      double change = 0.0;
      for (std::size_t k = 0; k < m.size(); ++k) {
        const double next = m[k] > 0.0 ? m[k] * rel : spectrum.sigma[k];
        change = std::max(change, std::abs(next - sigma[k]) / sigma[k]);
        sigma[k] = next;
      }
      if (pass > 0 && change < options.refinement_tol) break;
      refined.emplace(model, spectrum.power, sigma, options);
      outcome = detail::damped_least_squares(*refined, std::move(outcome.theta), options);
      iterations += outcome.iterations;
    }
  }
  const detail::LeastSquares& ls = refined ? *refined : first;

  result.params = outcome.theta;
  result.chi2 = outcome.chi2;
  result.n_iterations = iterations;
  result.converged = outcome.converged;
  const double dof = static_cast<double>(result.n_points - n_params);
  result.chi2_reduced = result.chi2 / dof;

  // Covariance in the natural parameters.
  const auto ne = ls.normal(result.params, false);
  const auto p = static_cast<Eigen::Index>(n_params);
  Eigen::VectorXd d = ne.a.diagonal();
  bool singular = false;
  for (Eigen::Index j = 0; j < p; ++j) singular = singular || !(d(j) > 0.0);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  double max_corr = 1.0;
  if (!singular) {
    const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd corr = s.asDiagonal() * ne.a * s.asDiagonal();
    max_corr = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) max_corr = std::max(max_corr, std::abs(corr(i, j)));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < 1e-14) {
      singular = true;
    } else {
      cov = s.asDiagonal() * corr.inverse() * s.asDiagonal();
    }
  }
  if (singular) {
    throw SingularNormalMatrix("normal matrix of model " + std::string(to_string(spec.kind)) +
                               " is singular; max |gradient correlation| = " + std::to_string(max_corr));
  }

  const double scale = std::max(1.0, result.chi2_reduced);
  result.covariance.assign(n_params, std::vector<double>(n_params));
  result.param_sigma.resize(n_params);
  result.param_sigma_raw.resize(n_params);
  for (std::size_t i = 0; i < n_params; ++i) {
    for (std::size_t j = 0; j < n_params; ++j) {
      result.covariance[i][j] = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * scale;
    }
    result.param_sigma_raw[i] = std::sqrt(cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    result.param_sigma[i] = result.param_sigma_raw[i] * std::sqrt(scale);
  }

  // The softer (lower-fc) component of a two-AL fit is the axial one.
  if (spec.kind == ModelKind::TwoALNoise && result.params[3] > result.params[1]) {
    detail::swap_components(result, 0, 2);
    detail::swap_components(result, 1, 3);
  }

  if (!result.converged) {
    throw NoConvergence("no convergence after " + std::to_string(options.max_iterations) + " iterations", result);
  }
  return result;
}

/// Convenience: init_guess followed by wls_fit.
inline FitResult fit_model(const Spectrum& spectrum, const ModelSpec& spec, const FitOptions& options = {}) {
  return wls_fit(spectrum, spec, init_guess(spec, spectrum).params, options);
}

struct ModelComparison {
  std::string label_a;
  std::string label_b;
  double chi2_a = 0.0;
  double chi2_b = 0.0;
  double chi2_reduced_a = 0.0;
  double chi2_reduced_b = 0.0;
  double ratio = 0.0;  ///< chi2_a / chi2_b
};

/// Chi-square ratio of two fits to the same spectrum and band.
inline ModelComparison compare_models(const Spectrum& spectrum, const FitResult& a, const FitResult& b) {
  if (!(a.band == b.band) || a.n_points != b.n_points || a.n_points != spectrum.size() ||
      !(a.band == spectrum.band)) {
    throw BandMismatch("fits were not made on the same spectrum band");
  }
  ModelComparison c;
  c.label_a = std::string(to_string(a.kind));
  c.label_b = std::string(to_string(b.kind));
  c.chi2_a = a.chi2;
  c.chi2_b = b.chi2;
  c.chi2_reduced_a = a.chi2_reduced;
  c.chi2_reduced_b = b.chi2_reduced;
  c.ratio = a.chi2 / b.chi2;
  return c;
}

struct OriginPoint {
  double x = 0.0;  ///< abscissa, e.g. trap power
  double y = 0.0;  ///< ordinate, e.g. corner frequency
  double sigma = 0.0;
};

struct OriginLineFit {
  double slope = 0.0;
  double slope_sigma = 0.0;
  double chi2 = 0.0;
  std::size_t n_points = 0;
};

/// Weighted least-squares line y = slope * x through the origin.
inline OriginLineFit linear_origin_fit(std::span<const OriginPoint> points) {
  if (points.empty()) throw DegenerateAbscissa("no points to fit");
  double swxx = 0.0, swxy = 0.0;
  for (const auto& pt : points) {
    if (!(pt.sigma > 0.0)) throw NonPositiveInput("point sigma must be > 0");
    const double w = 1.0 / (pt.sigma * pt.sigma);
    swxx += w * pt.x * pt.x;
    swxy += w * pt.x * pt.y;
  }
  if (!(swxx > 0.0)) throw DegenerateAbscissa("all abscissae are zero");
  OriginLineFit fit;
  fit.slope = swxy / swxx;
  fit.slope_sigma = std::sqrt(1.0 / swxx);
  fit.n_points = points.size();
  for (const auto& pt : points) {
    const double r = (pt.y - fit.slope * pt.x) / pt.sigma;
    fit.chi2 += r * r;
  }
  return fit;
}

}  // namespace tweezer
