// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "climbsense/climb.hpp"
#include "climbsense/orientation.hpp"
#include "climbsense/types.hpp"

namespace climbsense {

/// Centered moving average over round(window / dt) samples (at least one).
/// The ends are extended by point reflection, so linear trends are preserved.
SignalSeries moving_average(const SignalSeries& s, double window);

struct PlanarAcceleration {
  SignalSeries lateral;   // signed, m/s^2
  SignalSeries vertical;  // signed, m/s^2
};

/// Smooths each coordinate with moving_average, then takes second-order
/// central differences (one-sided second differences at the two ends).
/// Throws TooFewSamples below five samples.
PlanarAcceleration trajectory_to_acceleration(const TrajectorySeries& traj,
                                              double smooth_window = 0.3);

/// Linear-interpolation resampling onto a grid with step dt covering the
/// same span.
SignalSeries resample(const SignalSeries& s, double dt);

struct DelayEstimate {
  double delay = 0.0;        // b lags a by this many seconds
  double correlation = 0.0;  // mean Pearson correlation at the peak
  long lag_samples = 0;
};

struct CorrelationPoint {
  double delay = 0.0;
  double correlation = 0.0;
};

/// Pearson correlation of a(t) against b(t + delay) for every integer-sample
/// delay with |delay| <= max_lag. Both series must share dt. Throws
/// InsufficientOverlap when some candidate delay overlaps less than 10 s.
std::vector<CorrelationPoint> correlation_profile(const SignalSeries& a, const SignalSeries& b,
                                                  double max_lag);

/// Delay maximizing the correlation; ties go to the smaller |delay|.
DelayEstimate estimate_delay(const SignalSeries& a, const SignalSeries& b, double max_lag);

/// Joint estimate over several channel pairs (e.g. lateral and vertical):
/// the per-delay correlations are summed, the reported peak is their mean.
DelayEstimate estimate_delay(std::span<const std::pair<SignalSeries, SignalSeries>> channels,
                             double max_lag);

/// Adds delay to every interval endpoint. With a span, intervals are clipped
/// to it and intervals falling entirely outside are dropped.
AnnotationTrack shift_annotations(const AnnotationTrack& track, double delay,
                                  std::optional<std::pair<double, double>> span = std::nullopt);

struct PelvisSyncConfig {
  double max_lag = 20.0;       // s
  double smooth_window = 0.3;  // s, applied to both sides
  /// Lower than the detection default: a sustained linear acceleration leaks
  /// into the attitude at high gain and advances the phase of the estimate.
  double beta = 0.01;
};

struct PelvisSync {
  DelayEstimate estimate;
  /// Smoothed sensor channels as correlated (lateral sign already applied)
  /// and the video channels resampled onto the sensor period.
  SignalSeries sensor_lateral, sensor_vertical;
  SignalSeries video_lateral, video_vertical;
};

/// Delay of the video trajectory relative to the pelvis recording. The sensor
/// lateral axis is the dominant horizontal direction of Earth-frame
/// acceleration; both of its signs are tried and the better peak kept.
PelvisSync synchronize_pelvis(const ImuRecording& pelvis, const TrajectorySeries& trajectory,
                              const PelvisSyncConfig& config = {});

}  // namespace climbsense
