#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bo4io/common.hpp"
#include "bo4io/domain.hpp"
#include "bo4io/lowdisc.hpp"
#include "bo4io/parallel.hpp"

namespace bo4io {

inline constexpr double kJitterFloor = 1e-8;
inline constexpr double kJitterMax = 1e-4;

enum class MaternNu { Half, ThreeHalves, FiveHalves };

inline std::string to_string(MaternNu nu) {
  switch (nu) {
    case MaternNu::Half: return "1/2";
    case MaternNu::ThreeHalves: return "3/2";
    case MaternNu::FiveHalves: return "5/2";
  }
  return "?";
}

inline MaternNu parse_matern(const std::string& s) {
  if (s == "1/2" || s == "0.5") return MaternNu::Half;
  if (s == "3/2" || s == "1.5") return MaternNu::ThreeHalves;
  if (s == "5/2" || s == "2.5") return MaternNu::FiveHalves;
  throw ConfigError("unknown Matern smoothness '" + s + "' (expected 1/2, 3/2 or 5/2)");
}

/// Stationary ARD Matern covariance with additive Gaussian noise.
struct KernelConfig {
  MaternNu nu = MaternNu::FiveHalves;
  Vector lengthscales;
  double signal_variance = 1.0;
  double noise_variance = kJitterFloor;

  int dim() const noexcept { return static_cast<int>(lengthscales.size()); }

  void validate() const {
    if (lengthscales.size() == 0) throw InputError("kernel: no lengthscales");
    if ((lengthscales.array() <= 0.0).any() || !lengthscales.allFinite())
      throw InputError("kernel: lengthscales must be positive");
    if (!(signal_variance > 0.0)) throw InputError("kernel: signal_variance must be positive");
    if (!(noise_variance >= 0.0)) throw InputError("kernel: noise_variance must be non-negative");
  }
};

namespace detail {

/// Matern correlation as a function of the scaled distance r.
inline double matern_correlation(double r, MaternNu nu) {
  switch (nu) {
    case MaternNu::Half: return std::exp(-r);
    case MaternNu::ThreeHalves: {
      const double a = std::numbers::sqrt3 * r;
      return (1.0 + a) * std::exp(-a);
    }
    case MaternNu::FiveHalves: {
      const double a = std::sqrt(5.0) * r;
      return (1.0 + a + 5.0 * r * r / 3.0) * std::exp(-a);
    }
  }
  return 0.0;
}

/// d k / d log(l_i) divided by (signal_variance * (delta_i / l_i)^2).
inline double matern_lengthscale_factor(double r, MaternNu nu) {
  switch (nu) {
    case MaternNu::Half: return r > 0.0 ? std::exp(-r) / r : 0.0;
    case MaternNu::ThreeHalves: return 3.0 * std::exp(-std::numbers::sqrt3 * r);
    case MaternNu::FiveHalves: {
      const double a = std::sqrt(5.0) * r;
      return (5.0 / 3.0) * (1.0 + a) * std::exp(-a);
    }
  }
  return 0.0;
}

inline double scaled_distance(const Vector& a, const Vector& b, const Vector& ls) {
  return std::sqrt(((a - b).array() / ls.array()).square().sum());
}

}  // namespace detail

/// Covariance between two parameter vectors (noise excluded).
inline double kernel_eval(const Vector& a, const Vector& b, const KernelConfig& cfg) {
  if (a.size() != cfg.lengthscales.size() || b.size() != cfg.lengthscales.size())
    throw InputError("kernel_eval: dimension mismatch (a=" + std::to_string(a.size()) +
                     ", b=" + std::to_string(b.size()) + ", kernel=" + std::to_string(cfg.dim()) + ")");
  return cfg.signal_variance * detail::matern_correlation(detail::scaled_distance(a, b, cfg.lengthscales), cfg.nu);
}

/// Affine map used to zero-center and unit-scale the loss targets.
struct Normalization {
  double mean = 0.0;
  double scale = 1.0;

  double forward(double y) const noexcept { return (y - mean) / scale; }
  double inverse(double z) const noexcept { return z * scale + mean; }

  static Normalization from_targets(const std::vector<double>& y) {
    Normalization n;
    if (y.empty()) return n;
    double s = 0.0;
    for (double v : y) s += v;
    n.mean = s / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - n.mean) * (v - n.mean);
    const double sd = std::sqrt(ss / static_cast<double>(y.size()));
    n.scale = sd > 1e-12 * std::max(1.0, std::abs(n.mean)) ? sd : 1.0;
    return n;
  }
};

/// Past loss evaluations (theta_i, l(theta_i)).
struct EvaluationDataset {
  std::vector<Vector> inputs;
  std::vector<double> targets;

  std::size_t size() const noexcept { return targets.size(); }
  bool empty() const noexcept { return targets.empty(); }

  void push_back(Vector x, double y) {
    inputs.push_back(std::move(x));
    targets.push_back(y);
  }

  void validate(int dim) const {
    if (inputs.size() != targets.size())
      throw InputError("evaluation dataset: inputs and targets differ in length");
    for (const auto& x : inputs)
      if (x.size() != dim) throw InputError("evaluation dataset: input dimension mismatch");
    for (double y : targets)
      if (!std::isfinite(y)) throw InputError("evaluation dataset: non-finite target");
  }
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
  double stddev() const noexcept { return std::sqrt(variance); }
};

/// Exact GP regression model of the loss. Immutable after construction.
class GPModel {
 public:
  /// Prior-only model: zero mean (in normalized units), no data.
  static GPModel prior(const KernelConfig& kernel, Normalization norm = {}) {
    kernel.validate();
    GPModel m;
    m.kernel_ = kernel;
    m.norm_ = norm;
    m.effective_noise_ = std::max(kernel.noise_variance, kJitterFloor);
    return m;
  }

  /// Conditions on `data` with the given hyperparameters and normalization.
  /// Escalates jitter x10 from the floor up to 1e-4 if the factorization fails.
  GPModel(const KernelConfig& kernel, EvaluationDataset data, Normalization norm)
      : kernel_(kernel), data_(std::move(data)), norm_(norm) {
    kernel_.validate();
    data_.validate(kernel_.dim());
    const auto t = static_cast<Eigen::Index>(data_.size());
    Matrix k(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
      k(i, i) = kernel_.signal_variance;
      for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i) = kernel_eval(data_.inputs[i], data_.inputs[j], kernel_);
    }
    double noise = std::max(kernel_.noise_variance, kJitterFloor);
    for (;;) {
      Matrix kn = k;
      kn.diagonal().array() += noise;
      Eigen::LLT<Matrix> llt(kn);
      if (llt.info() == Eigen::Success && (llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
        factor_ = llt.matrixL();
        break;
      }
      if (noise >= kJitterMax)
        throw NumericalError("GP: kernel matrix not positive definite after jitter escalation to " +
                             std::to_string(noise) + " (t=" + std::to_string(t) + ")");
      noise = std::min(kJitterMax, std::max(noise, kJitterFloor) * 10.0);
    }
    effective_noise_ = noise;
    Vector y(t);
    for (Eigen::Index i = 0; i < t; ++i) y[i] = norm_.forward(data_.targets[static_cast<std::size_t>(i)]);
    normalized_targets_ = y;
    weights_ = factor_.triangularView<Eigen::Lower>().solve(y);
    factor_.triangularView<Eigen::Lower>().transpose().solveInPlace(weights_);
  }

  const KernelConfig& kernel() const noexcept { return kernel_; }
  const EvaluationDataset& data() const noexcept { return data_; }
  const Normalization& normalization() const noexcept { return norm_; }
  const Matrix& factor() const noexcept { return factor_; }
  const Vector& weights() const noexcept { return weights_; }
  const Vector& normalized_targets() const noexcept { return normalized_targets_; }
  /// Noise variance actually added to the diagonal (configured value, floor, or escalated jitter).
  double effective_noise() const noexcept { return effective_noise_; }
  int dim() const noexcept { return kernel_.dim(); }
  std::size_t size() const noexcept { return data_.size(); }

  /// Set when hyperparameter fitting could not improve on its starting point.
  bool fit_warning() const noexcept { return fit_warning_; }
  double log_likelihood() const noexcept { return log_likelihood_; }

  /// Posterior mean and latent-function variance in original loss units.
  Posterior posterior(const Vector& q) const {
    if (q.size() != dim())
      throw InputError("posterior: query has dimension " + std::to_string(q.size()) + ", model has " +
                       std::to_string(dim()));
    Posterior p;
    const auto t = static_cast<Eigen::Index>(data_.size());
    if (t == 0) {
      p.mean = norm_.inverse(0.0);
      p.variance = kernel_.signal_variance * norm_.scale * norm_.scale;
      return p;
    }
    Vector kq(t);
    for (Eigen::Index i = 0; i < t; ++i) kq[i] = kernel_eval(q, data_.inputs[static_cast<std::size_t>(i)], kernel_);
    const double mean_n = kq.dot(weights_);
    factor_.triangularView<Eigen::Lower>().solveInPlace(kq);
    const double var_n = std::max(0.0, kernel_.signal_variance - kq.squaredNorm());
    p.mean = norm_.inverse(mean_n);
    p.variance = var_n * norm_.scale * norm_.scale;
    return p;
  }

 private:
  GPModel() = default;
  friend struct GPFitter;

  KernelConfig kernel_;
  EvaluationDataset data_;
  Normalization norm_;
  Matrix factor_;
  Vector weights_;
  Vector normalized_targets_;
  double effective_noise_ = kJitterFloor;
  bool fit_warning_ = false;
  double log_likelihood_ = std::numeric_limits<double>::quiet_NaN();
};

/// Value and gradient of the log marginal likelihood.
struct LogLikelihood {
  double value = 0.0;
  /// Ordered as (log l_1..log l_d, log signal_variance, log noise_variance).
  Vector gradient;
};

/// Exact Gaussian log marginal likelihood of the model's normalized targets and its gradient
/// with respect to the log-hyperparameters.
inline LogLikelihood log_marginal_likelihood(const GPModel& model) {
  const auto t = static_cast<Eigen::Index>(model.size());
  const int d = model.dim();
  LogLikelihood out;
  out.gradient = Vector::Zero(d + 2);
  if (t == 0) return out;
  const Matrix& l = model.factor();
  const Vector& alpha = model.weights();
  const Vector& y = model.normalized_targets();
  out.value = -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() -
              0.5 * static_cast<double>(t) * std::log(2.0 * std::numbers::pi);

  Matrix kinv = Matrix::Identity(t, t);
  l.triangularView<Eigen::Lower>().solveInPlace(kinv);
  l.triangularView<Eigen::Lower>().transpose().solveInPlace(kinv);
  // Gradient of the LML w.r.t. a log-hyperparameter is 0.5 * sum_ij A_ij dK_ij with A = alpha alpha^T - K^-1.
  const Matrix a = alpha * alpha.transpose() - kinv;

  const auto& cfg = model.kernel();
  const auto& xs = model.data().inputs;
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const Vector s = ((xs[i] - xs[j]).array() / cfg.lengthscales.array()).square().matrix();
      const double r = std::sqrt(s.sum());
      const double corr = detail::matern_correlation(r, cfg.nu);
      const double lf = detail::matern_lengthscale_factor(r, cfg.nu);
      const double w = a(i, j);  // symmetric pair counted twice, times 0.5
      out.gradient.head(d) += (w * cfg.signal_variance * lf) * s;
      out.gradient[d] += w * cfg.signal_variance * corr;
    }
    out.gradient[d] += 0.5 * a(i, i) * cfg.signal_variance;
  }
  out.gradient[d + 1] = 0.5 * model.effective_noise() * a.trace();
  return out;
}

/// Options for maximum-likelihood hyperparameter fitting.
struct FitOptions {
  MaternNu nu = MaternNu::FiveHalves;
  int restarts = 8;
  int max_iterations = 60;
  double min_lengthscale_factor = 1e-3;  // times domain width
  double max_lengthscale_factor = 1e2;
  double min_signal_variance = 0.05;
  double max_signal_variance = 20.0;
  double min_noise = kJitterFloor;
  double max_noise = 1.0;
  int workers = 1;
};

struct GPFitter {
  static GPModel with_flags(GPModel m, bool warning, double ll) {
    m.fit_warning_ = warning;
    m.log_likelihood_ = ll;
    return m;
  }
};

namespace detail {

inline KernelConfig kernel_from_log(const Vector& z, MaternNu nu) {
  const auto d = z.size() - 2;
  KernelConfig k;
  k.nu = nu;
  k.lengthscales = z.head(d).array().exp();
  k.signal_variance = std::exp(z[d]);
  k.noise_variance = std::exp(z[d + 1]);
  return k;
}

struct RestartResult {
  Vector z;
  double value = -std::numeric_limits<double>::infinity();
  bool ok = false;
  bool moved = false;  // at least one line search succeeded
};

}  // namespace detail

/// Maximum-likelihood fit of the kernel hyperparameters to `data`.
///
/// Multi-start projected gradient ascent in log-hyperparameter space with Barzilai-Borwein steps
/// and Armijo backtracking. Restart 0 starts from the default configuration; the others from a
/// seeded low-discrepancy design over the hyperparameter box. The best restart wins; ties go to
/// the lowest restart index. With a single data point the defaults are used without fitting.
inline GPModel fit(const EvaluationDataset& data, const ParameterDomain& domain, std::uint64_t seed,
                   const FitOptions& opt = {}) {
  const int d = domain.dim();
  data.validate(d);
  if (data.empty()) throw InputError("fit: empty dataset");
  const Normalization norm = Normalization::from_targets(data.targets);
  const Vector width = domain.width();

  KernelConfig def;
  def.nu = opt.nu;
  def.lengthscales = 0.2 * width;
  def.signal_variance = 1.0;
  def.noise_variance = opt.min_noise;
  if (data.size() == 1) {
    GPModel m(def, data, norm);
    const double ll = log_marginal_likelihood(m).value;
    return GPFitter::with_flags(std::move(m), false, ll);
  }

  Vector lo(d + 2), hi(d + 2);
  lo.head(d) = (opt.min_lengthscale_factor * width).array().log();
  hi.head(d) = (opt.max_lengthscale_factor * width).array().log();
  lo[d] = std::log(opt.min_signal_variance);
  hi[d] = std::log(opt.max_signal_variance);
  lo[d + 1] = std::log(opt.min_noise);
  hi[d + 1] = std::log(opt.max_noise);
  auto clip = [&](const Vector& z) { return Vector(z.cwiseMax(lo).cwiseMin(hi)); };

  auto evaluate = [&](const Vector& z) -> std::optional<LogLikelihood> {
    try {
      GPModel m(detail::kernel_from_log(z, opt.nu), data, norm);
      LogLikelihood ll = log_marginal_likelihood(m);
      if (!std::isfinite(ll.value) || !ll.gradient.allFinite()) return std::nullopt;
      return ll;
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  };

  const int restarts = std::max(1, opt.restarts);
  std::vector<Vector> starts;
  starts.reserve(static_cast<std::size_t>(restarts));
  Vector z0(d + 2);
  z0.head(d) = def.lengthscales.array().log();
  z0[d] = 0.0;
  z0[d + 1] = std::log(1e-4);
  starts.push_back(clip(z0));
  LowDiscrepancySequence seq(d + 2, stream_seed(seed, tag_of("gp-fit"), 0));
  for (int r = 1; r < restarts; ++r) {
    Vector u = seq.point(static_cast<std::uint64_t>(r - 1));
    starts.push_back(lo + u.cwiseProduct(hi - lo));
  }

  std::vector<detail::RestartResult> results(starts.size());
  parallel_for(starts.size(), opt.workers, [&](std::size_t r) {
    Vector z = starts[r];
    auto cur = evaluate(z);
    if (!cur) return;
    detail::RestartResult best{z, cur->value, true};
    double step = 0.1;
    Vector prev_z, prev_g;
    for (int it = 0; it < opt.max_iterations; ++it) {
      const Vector& g = cur->gradient;
      if (prev_z.size() > 0) {
        const Vector dz = z - prev_z;
        const Vector dg = g - prev_g;
        const double denom = -dz.dot(dg);
        if (denom > 1e-16) step = std::clamp(dz.squaredNorm() / denom, 1e-6, 1e3);
      }
      bool accepted = false;
      Vector z_new;
      std::optional<LogLikelihood> next;
      for (int bt = 0; bt < 40; ++bt) {
        z_new = clip(z + step * g);
        if ((z_new - z).norm() < 1e-10) break;
        next = evaluate(z_new);
        if (next && next->value >= cur->value + 1e-4 * g.dot(z_new - z)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      const double gain = next->value - cur->value;
      prev_z = z;
      prev_g = g;
      z = z_new;
      cur = next;
      if (cur->value > best.value) best = {z, cur->value, true, true};
      if (gain < 1e-9 * (1.0 + std::abs(cur->value)) || (z - prev_z).norm() < 1e-7) break;
    }
    results[r] = best;
  });

  int winner = -1;
  for (std::size_t r = 0; r < results.size(); ++r)
    if (results[r].ok && (winner < 0 || results[r].value > results[static_cast<std::size_t>(winner)].value))
      winner = static_cast<int>(r);
  if (winner < 0) {
    // Every restart failed to factorize: fall back to the defaults with maximal jitter.
    KernelConfig fallback = def;
    fallback.noise_variance = kJitterMax;
    return GPFitter::with_flags(GPModel(fallback, data, norm), true, std::numeric_limits<double>::quiet_NaN());
  }
  const bool any_moved = std::any_of(results.begin(), results.end(), [](const auto& r) { return r.moved; });
  const auto& w = results[static_cast<std::size_t>(winner)];
  return GPFitter::with_flags(GPModel(detail::kernel_from_log(w.z, opt.nu), data, norm), !any_moved, w.value);
}

}  // namespace bo4io
