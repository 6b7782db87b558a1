// SPDX-License-Identifier: Apache-2.0

#include "climbsense/cusum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "climbsense/error.hpp"

namespace climbsense {

void DetectionConfig::validate() const {
  if (!(lambda0 > 0.0) || !(lambda1 > 0.0) || !std::isfinite(lambda0) || !std::isfinite(lambda1)) {
    throw Error(ErrorCode::InvalidParams, "thresholds must be positive and finite");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidParams, "alpha must lie in [0, 1]");
  }
}

double log_likelihood_ratio(double x, const HypothesisModel& m) {
  return log_pdf(x, m.h1) - log_pdf(x, m.h0);
}

std::vector<double> log_likelihood_ratios(const SignalSeries& signal, const HypothesisModel& m) {
  m.validate();
  // Hoisted constants of the two log densities.
  const double c1 = -std::lgamma(m.h1.k) - m.h1.k * std::log(m.h1.theta);
  const double c0 = -std::lgamma(m.h0.k) - m.h0.k * std::log(m.h0.theta);
  std::vector<double> out;
  out.reserve(signal.size());
  for (double x : signal.values) {
    const double v = std::max(x, kSignalFloor);
    const double lv = std::log(v);
    out.push_back(((m.h1.k - 1.0) * lv - v / m.h1.theta + c1) -
                  ((m.h0.k - 1.0) * lv - v / m.h0.theta + c0));
  }
  return out;
}

std::vector<double> fuse_increments(std::span<const double> acc, std::span<const double> ang,
                                    double alpha) {
  if (acc.size() != ang.size()) {
    std::ostringstream msg;
    msg << "channel lengths differ (" << acc.size() << " vs " << ang.size() << ")";
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  std::vector<double> out(acc.size());
  if (alpha == 0.0) {
    std::copy(ang.begin(), ang.end(), out.begin());
  } else if (alpha == 1.0) {
    std::copy(acc.begin(), acc.end(), out.begin());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * acc[i] + (1.0 - alpha) * ang[i];
  }
  return out;
}

CusumDetector::CusumDetector(double lambda0, double lambda1, State initial)
    : lambda0_(lambda0), lambda1_(lambda1), state_(initial) {}

void CusumDetector::reset_origin(std::size_t index) {
  sum_ = 0.0;
  min_ = 0.0;
  max_ = 0.0;
  argmin_ = index;
  argmax_ = index;
}

std::optional<ChangePoint> CusumDetector::step(double increment) {
  const std::size_t t = next_++;
  if (t == 0) {
    reset_origin(0);
    return std::nullopt;
  }
  sum_ += increment;
  if (state_ == State::H0 && sum_ > min_ + lambda1_) {
    const ChangePoint cp{t, argmin_, State::H1};
    state_ = State::H1;
    reset_origin(t);
    return cp;
  }
  if (state_ == State::H1 && sum_ < max_ - lambda0_) {
    const ChangePoint cp{t, argmax_, State::H0};
    state_ = State::H0;
    reset_origin(t);
    return cp;
  }
  // Latest extremum wins ties.
  if (sum_ <= min_) {
    min_ = sum_;
    argmin_ = t;
  }
  if (sum_ >= max_) {
    max_ = sum_;
    argmax_ = t;
  }
  return std::nullopt;
}

BinaryStateSeries detect_increments(std::span<const double> increments, double lambda0,
                                    double lambda1, State initial, double t0, double dt) {
  BinaryStateSeries out;
  out.t0 = t0;
  out.dt = dt;
  out.states.resize(increments.size());
  CusumDetector det(lambda0, lambda1, initial);
  for (std::size_t i = 0; i < increments.size(); ++i) {
    if (auto cp = det.step(increments[i])) out.change_points.push_back(*cp);
    out.states[i] = det.state();
  }
  return out;
}

BinaryStateSeries detect(const SignalSeries& acc, const SignalSeries& ang, const SensorModel& model,
                         State initial) {
  model.config.validate();
  if (acc.size() != ang.size()) {
    std::ostringstream msg;
    msg << "acceleration and angular-velocity series differ in length (" << acc.size() << " vs "
        << ang.size() << ")";
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  const auto l_acc = log_likelihood_ratios(acc, model.acc);
  const auto l_ang = log_likelihood_ratios(ang, model.ang);
  const auto inc = fuse_increments(l_acc, l_ang, model.config.alpha);
  return detect_increments(inc, model.config.lambda0, model.config.lambda1, initial, acc.t0, acc.dt);
}

BinaryStateSeries relabel_segments(const BinaryStateSeries& raw) {
  BinaryStateSeries out;
  out.t0 = raw.t0;
  out.dt = raw.dt;
  out.states = raw.states;
  for (const ChangePoint& cp : raw.change_points) {
    const std::size_t end = std::min(cp.index, out.states.size());
    for (std::size_t i = cp.onset; i < end; ++i) out.states[i] = cp.state;
  }
  for (std::size_t i = 1; i < out.states.size(); ++i) {
    if (out.states[i] != out.states[i - 1]) out.change_points.push_back({i, i, out.states[i]});
  }
  return out;
}

std::size_t detect_onset_labels(std::span<const double> increments, double lambda0, double lambda1,
                                State initial, std::span<State> out) {
  if (out.size() != increments.size()) {
    throw Error(ErrorCode::LengthMismatch, "label buffer length differs from increments");
  }
  CusumDetector det(lambda0, lambda1, initial);
  std::size_t label_from = 0;
  std::size_t changes = 0;
  for (std::size_t i = 0; i < increments.size(); ++i) {
    if (auto cp = det.step(increments[i])) {
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(label_from),
                out.begin() + static_cast<std::ptrdiff_t>(cp->onset), other(cp->state));
      label_from = cp->onset;
      ++changes;
    }
  }
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(label_from), out.end(), det.state());
  return changes;
}

}  // namespace climbsense
