// SPDX-License-Identifier: Apache-2.0

#include "climbsense/gamma_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "climbsense/error.hpp"

namespace climbsense {

void GammaParams::validate() const {
  if (!(k > 0.0) || !(theta > 0.0) || !std::isfinite(k) || !std::isfinite(theta)) {
    std::ostringstream msg;
    msg << "gamma parameters must be positive and finite (k=" << k << ", theta=" << theta << ")";
    throw Error(ErrorCode::InvalidParams, msg.str());
  }
}

GammaParams GammaParams::exponential(double rate) { return {1.0, 1.0 / rate}; }

GammaParams GammaParams::chi_square3() { return {1.5, 2.0}; }

double log_pdf(double x, const GammaParams& p) {
  p.validate();
  const double v = std::max(x, kSignalFloor);
  return (p.k - 1.0) * std::log(v) - v / p.theta - std::lgamma(p.k) - p.k * std::log(p.theta);
}

double log_mean_gap(std::span<const double> samples) {
  double sum = 0.0;
  double sum_log = 0.0;
  for (double x : samples) {
    const double v = std::max(x, kSignalFloor);
    sum += v;
    sum_log += std::log(v);
  }
  const double n = static_cast<double>(samples.size());
  return std::log(sum / n) - sum_log / n;
}

double shape_from_log_gap(double s) {
  return (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
}

GammaParams fit_mle(std::span<const double> samples) {
  if (samples.size() < kMinFitSamples) {
    std::ostringstream msg;
    msg << "need at least " << kMinFitSamples << " samples, got " << samples.size();
    throw Error(ErrorCode::TooFewSamples, msg.str());
  }
  const double s = log_mean_gap(samples);
  if (!(s > 1e-12)) {
    throw Error(ErrorCode::DegenerateSample, "samples are constant (log-mean gap <= 1e-12)");
  }
  double mean = 0.0;
  for (double x : samples) mean += std::max(x, kSignalFloor);
  mean /= static_cast<double>(samples.size());
  const double k = shape_from_log_gap(s);
  return {k, mean / k};
}

std::size_t default_gof_bins(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(2.0 * std::pow(static_cast<double>(n), 0.4)));
}

GofResult chi_square_gof(std::span<const double> samples, const GammaParams& p, std::size_t bins) {
  p.validate();
  const std::size_t n = samples.size();
  bins = std::min(bins, n / 5);
  if (bins < 4) {
    std::ostringstream msg;
    msg << "chi-square test needs at least 4 bins with 5 expected counts, n=" << n;
    throw Error(ErrorCode::TooFewSamples, msg.str());
  }

  // Interior edges at the i/bins quantiles.
  std::vector<double> edges(bins - 1);
  for (std::size_t i = 1; i < bins; ++i) {
    const double prob = static_cast<double>(i) / static_cast<double>(bins);
    edges[i - 1] = boost::math::gamma_p_inv(p.k, prob) * p.theta;
  }
  std::vector<std::size_t> counts(bins, 0);
  for (double x : samples) {
    const double v = std::max(x, kSignalFloor);
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    ++counts[static_cast<std::size_t>(it - edges.begin())];
  }

  const double expected = static_cast<double>(n) / static_cast<double>(bins);
  double stat = 0.0;
  for (std::size_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  GofResult r;
  r.statistic = stat;
  r.bins = bins;
  r.dof = bins - 3;
  r.p_value = boost::math::gamma_q(0.5 * static_cast<double>(r.dof), 0.5 * stat);
  return r;
}

}  // namespace climbsense
