// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "climbsense/gamma_model.hpp"
#include "climbsense/types.hpp"

namespace climbsense {

/// Thresholds and channel weight of one sensor's detector.
struct DetectionConfig {
  double lambda0 = 10.0;  // H1 -> H0 threshold
  double lambda1 = 10.0;  // H0 -> H1 threshold
  double alpha = 0.5;     // weight of the acceleration channel

  void validate() const;
};

struct SensorModel {
  HypothesisModel acc;
  HypothesisModel ang;
  DetectionConfig config;
};

struct ChangePoint {
  std::size_t index = 0;  // sample at which the change was detected
  std::size_t onset = 0;  // running-extremum sample: estimated change time
  State state = State::H1;  // state entered

  bool operator==(const ChangePoint&) const = default;
};

struct BinaryStateSeries {
  double t0 = 0.0;
  double dt = 0.01;
  std::vector<State> states;
  std::vector<ChangePoint> change_points;

  std::size_t size() const { return states.size(); }
};

/// log p(x | h1) - log p(x | h0).
double log_likelihood_ratio(double x, const HypothesisModel& m);

/// Log-likelihood ratio of every sample of a channel.
std::vector<double> log_likelihood_ratios(const SignalSeries& signal, const HypothesisModel& m);

/// alpha * acc + (1 - alpha) * ang, element-wise. A zero weight drops its
/// channel exactly.
std::vector<double> fuse_increments(std::span<const double> acc, std::span<const double> ang,
                                    double alpha);

/// Two-threshold CUSUM over a stream of increments.
///
/// The first sample and every detection sample are time origins: the
/// statistic is 0 there and each later sample adds its increment. In H0 a
/// change is declared at the first t with S_t > min(S_s, origin <= s < t) +
/// lambda1; in H1 at the first t with S_t < max(S_s, origin <= s < t) -
/// lambda0. Equality does not trigger.
class CusumDetector {
public:
  CusumDetector(double lambda0, double lambda1, State initial = State::H0);

  /// Feeds the increment of the next sample.
  std::optional<ChangePoint> step(double increment);

  State state() const { return state_; }
  double statistic() const { return sum_; }
  double running_min() const { return min_; }
  double running_max() const { return max_; }
  std::size_t samples_seen() const { return next_; }

private:
  void reset_origin(std::size_t index);

  double lambda0_;
  double lambda1_;
  State state_;
  std::size_t next_ = 0;
  double sum_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
  std::size_t argmin_ = 0;
  std::size_t argmax_ = 0;
};

/// Runs the detector over precomputed increments. Samples from each origin up
/// to the detection keep the state in force; the detection sample carries the
/// new state.
BinaryStateSeries detect_increments(std::span<const double> increments, double lambda0,
                                    double lambda1, State initial = State::H0, double t0 = 0.0,
                                    double dt = 1.0);

/// Detection on fused acceleration / angular-velocity log-likelihood ratios.
/// Throws LengthMismatch when the channels differ in length.
BinaryStateSeries detect(const SignalSeries& acc, const SignalSeries& ang, const SensorModel& model,
                         State initial = State::H0);

/// Moves each change back to its onset sample so that every segment between
/// change points carries one label from the estimated change time onward.
BinaryStateSeries relabel_segments(const BinaryStateSeries& raw);

/// detect_increments followed by relabel_segments, writing only the labels
/// into out (same length as increments). Returns the number of changes.
std::size_t detect_onset_labels(std::span<const double> increments, double lambda0, double lambda1,
                                State initial, std::span<State> out);

}  // namespace climbsense
