// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

namespace climbsense {

/// Floor applied to signal values before any logarithm (signal units).
inline constexpr double kSignalFloor = 1e-6;

/// Gamma distribution with shape k and scale theta.
struct GammaParams {
  double k = 1.0;
  double theta = 1.0;

  /// Throws InvalidParams unless both parameters are positive and finite.
  void validate() const;

  double mean() const { return k * theta; }

  /// Exponential distribution with rate lambda: Gamma(1, 1/lambda).
  static GammaParams exponential(double rate);
  /// Chi-square with three degrees of freedom: Gamma(1.5, 2).
  static GammaParams chi_square3();
};

/// Emission models of one signal channel under the immobile (h0) and mobile
/// (h1) hypotheses.
struct HypothesisModel {
  GammaParams h0;
  GammaParams h1;

  void validate() const {
    h0.validate();
    h1.validate();
  }
};

/// Log density at max(x, kSignalFloor).
double log_pdf(double x, const GammaParams& p);

/// log(mean) - mean(log) of floored samples; the sufficient statistic for
/// the shape estimate.
double log_mean_gap(std::span<const double> samples);

/// Closed-form shape from the log-mean gap s using the second-order digamma
/// approximation: k = (3 - s + sqrt((s - 3)^2 + 24 s)) / (12 s).
double shape_from_log_gap(double s);

inline constexpr std::size_t kMinFitSamples = 30;

/// Approximate maximum-likelihood fit. Throws TooFewSamples below 30 samples
/// and DegenerateSample when the log-mean gap is <= 1e-12 (constant data).
GammaParams fit_mle(std::span<const double> samples);

/// Moore's rule, ceil(2 n^0.4), used when no bin count is given.
std::size_t default_gof_bins(std::size_t n);

struct GofResult {
  double statistic = 0.0;
  std::size_t bins = 0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

/// Pearson chi-square goodness of fit on equal-probability bins of p. The bin
/// count is reduced until every bin expects at least 5 samples; degrees of
/// freedom are bins - 3 (two fitted parameters). Throws TooFewSamples when
/// fewer than four bins remain.
GofResult chi_square_gof(std::span<const double> samples, const GammaParams& p, std::size_t bins);

}  // namespace climbsense
