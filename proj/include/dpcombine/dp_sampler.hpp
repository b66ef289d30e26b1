#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "dpcombine/csv.hpp"
#include "dpcombine/errors.hpp"
#include "dpcombine/rng.hpp"

namespace dpcombine {

enum class BaseDistributionKind { Exponential, TruncatedGaussian, Beta };

inline const char* to_string(BaseDistributionKind kind) {
  switch (kind) {
    case BaseDistributionKind::Exponential: return "exp";
    case BaseDistributionKind::TruncatedGaussian: return "normal";
    case BaseDistributionKind::Beta: return "beta";
  }
  return "?";
}

/// Base distribution H of the Dirichlet process. Samples are restricted to
/// the support window [lo, hi] so a drawn learning rate can never be zero or
/// absurdly large.
///
/// The exponential parameter is a *mean* (EXP(0.001) centers atoms near the
/// reference learning rate 0.001), and the Gaussian's second parameter is a
/// *standard deviation*.
struct BaseDistributionSpec {
  BaseDistributionKind kind = BaseDistributionKind::Exponential;
  double mean = 1e-3;     // Exponential / TruncatedGaussian location
  double stddev = 1e-2;   // TruncatedGaussian only
  double shape_a = 1.0;   // Beta only
  double shape_b = 1e3;   // Beta only
  double lo = 1e-8;
  double hi = 1.0;

  static BaseDistributionSpec exponential(double mean) {
    BaseDistributionSpec s;
    s.kind = BaseDistributionKind::Exponential;
    s.mean = mean;
    return s;
  }

  static BaseDistributionSpec truncated_gaussian(double mean, double stddev) {
    BaseDistributionSpec s;
    s.kind = BaseDistributionKind::TruncatedGaussian;
    s.mean = mean;
    s.stddev = stddev;
    return s;
  }

  static BaseDistributionSpec beta(double a, double b) {
    BaseDistributionSpec s;
    s.kind = BaseDistributionKind::Beta;
    s.shape_a = a;
    s.shape_b = b;
    return s;
  }

  void validate() const {
    if (!(lo > 0.0) || !(hi > lo)) throw InvalidDistribution("require 0 < lo < hi");
    switch (kind) {
      case BaseDistributionKind::Exponential:
        if (!(mean > 0.0)) throw InvalidDistribution("exponential mean must be positive");
        break;
      case BaseDistributionKind::TruncatedGaussian:
        if (!(stddev > 0.0)) throw InvalidDistribution("gaussian stddev must be positive");
        if (!(mean > lo && mean < hi))
          throw InvalidDistribution("gaussian mean must lie inside (lo, hi)");
        break;
      case BaseDistributionKind::Beta:
        if (!(shape_a > 0.0) || !(shape_b > 0.0))
          throw InvalidDistribution("beta shapes must be positive");
        if (!(hi <= 1.0)) throw InvalidDistribution("beta support ends at 1");
        break;
    }
  }
};

namespace detail {

/// Regularized incomplete beta I_x(a, b) via the standard Lentz continued
/// fraction. Only the general-shape beta quantile needs it; the shapes the
/// experiments use (a = 1) take the closed form instead.
inline double beta_cont_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

inline double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * beta_cont_fraction(a, b, x) / a;
  }
  return 1.0 - bt * beta_cont_fraction(b, a, 1.0 - x) / b;
}

inline double beta_quantile(double a, double b, double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  if (a == 1.0) return -std::expm1(std::log1p(-u) / b);  // 1 - (1-u)^(1/b)
  if (b == 1.0) return std::pow(u, 1.0 / a);
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (regularized_incomplete_beta(a, b, mid) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Single-attempt inverse-CDF transform of one uniform variate. Defined for
/// the Exponential and Beta kinds; the truncated Gaussian has no closed-form
/// quantile and is sampled by rejection instead.
inline double inverse_cdf(const BaseDistributionSpec& spec, double u) {
  switch (spec.kind) {
    case BaseDistributionKind::Exponential:
      return -spec.mean * std::log1p(-u);
    case BaseDistributionKind::Beta:
      return detail::beta_quantile(spec.shape_a, spec.shape_b, u);
    case BaseDistributionKind::TruncatedGaussian:
      throw InvalidDistribution("truncated gaussian has no closed-form inverse CDF");
  }
  throw InvalidDistribution("unknown kind");
}

inline constexpr std::size_t kMaxRejectionAttempts = 1'000'000;

/// One variate from the base distribution restricted to [lo, hi].
///
/// Each attempt draws by the distribution's own transform (inverse CDF for
/// Exponential/Beta, Box-Muller for the Gaussian); out-of-window candidates
/// are rejected and redrawn, so accepted samples follow the exactly
/// truncated law.
inline double sample_base(const BaseDistributionSpec& spec, RandomStream& rng) {
  spec.validate();
  for (std::size_t attempt = 0; attempt < kMaxRejectionAttempts; ++attempt) {
    double x;
    if (spec.kind == BaseDistributionKind::TruncatedGaussian) {
      const double u1 = rng.uniform_open0();
      const double u2 = rng.uniform01();
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      x = spec.mean + spec.stddev * z;
    } else {
      x = inverse_cdf(spec, rng.uniform01());
    }
    if (x >= spec.lo && x <= spec.hi) return x;
  }
  throw NonConvergence("rejection sampling exhausted " + std::to_string(kMaxRejectionAttempts) +
                       " attempts; truncation window [" + fmt_double(spec.lo) + ", " +
                       fmt_double(spec.hi) + "] is infeasible");
}

/// Configuration of one truncated Dirichlet-process draw.
struct DPConfig {
  double alpha = 1000.0;          // DP scale parameter
  BaseDistributionSpec base;      // H
  std::size_t truncation_level = 1;  // p: atoms kept = base models produced
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha > 0.0)) throw InvalidDistribution("alpha must be positive");
    if (truncation_level < 1) throw InvalidDistribution("truncation level must be >= 1");
    base.validate();
  }
};

/// One truncated stick-breaking realization: fractions beta_i, the
/// renormalized weights pi_i, and the atoms (learning rates) they index.
struct StickBreakingDraw {
  std::vector<double> betas;    // Beta(1, alpha) fractions, each in (0,1)
  std::vector<double> weights;  // normalized to sum 1
  std::vector<double> atoms;    // base-distribution samples in [lo, hi]

  std::size_t size() const { return betas.size(); }
};

/// Pre-normalization stick weights: w_i = beta_i * prod_{j<i} (1 - beta_j).
inline std::vector<double> stick_weights_prenorm(const std::vector<double>& betas) {
  std::vector<double> w(betas.size());
  double remaining = 1.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    w[i] = betas[i] * remaining;
    remaining *= 1.0 - betas[i];
  }
  return w;
}

inline std::vector<double> normalize_weights(std::vector<double> w) {
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0)) throw InvalidWeights("weights sum to zero");
  for (double& v : w) v /= total;
  return w;
}

/// Truncated stick-breaking: p fractions beta_i ~ Beta(1, alpha), the
/// residual stick past level p discarded and the first p weights
/// renormalized, plus p atoms drawn i.i.d. from the base distribution.
inline StickBreakingDraw stick_breaking(const DPConfig& config, RandomStream& rng) {
  config.validate();
  const std::size_t p = config.truncation_level;
  StickBreakingDraw draw;
  draw.betas.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    double beta = 0.0;
    do {
      beta = detail::beta_quantile(1.0, config.alpha, rng.uniform01());
    } while (!(beta > 0.0 && beta < 1.0));
    draw.betas.push_back(beta);
  }
  draw.weights = normalize_weights(stick_weights_prenorm(draw.betas));
  draw.atoms.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    draw.atoms.push_back(sample_base(config.base, rng));
  }
  return draw;
}

/// Atom vector of one stick-breaking draw, sorted descending (stable, so
/// exact ties keep their relative order). This is the learning-rate list the
/// scheduled training consumes.
inline std::vector<double> draw_learning_rates(const DPConfig& config, RandomStream& rng) {
  std::vector<double> rates = stick_breaking(config, rng).atoms;
  std::stable_sort(rates.begin(), rates.end(), std::greater<double>());
  return rates;
}

/// Normalized weights of an independent stick-breaking draw, in stick order.
/// Learning rates and combination weights deliberately come from separate
/// draws (callers derive separate streams from the master seed).
inline std::vector<double> draw_combination_weights(const DPConfig& config, RandomStream& rng) {
  return stick_breaking(config, rng).weights;
}

/// CSV export: one row per stick, "index,beta,weight,atom".
inline std::string draw_to_csv(const StickBreakingDraw& draw) {
  std::string out = "index,beta,weight,atom\n";
  for (std::size_t i = 0; i < draw.size(); ++i) {
    out += std::to_string(i) + ',' + fmt_double(draw.betas[i]) + ',' +
           fmt_double(draw.weights[i]) + ',' + fmt_double(draw.atoms[i]) + '\n';
  }
  return out;
}

}  // namespace dpcombine
