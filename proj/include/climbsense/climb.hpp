// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "climbsense/orientation.hpp"
#include "climbsense/types.hpp"

namespace climbsense {

struct Interval {
  double start = 0.0;
  double end = 0.0;
  State label = State::H0;

  bool operator==(const Interval&) const = default;
};

/// Manual per-limb annotation: ordered, non-overlapping intervals.
struct AnnotationTrack {
  SensorSite site = SensorSite::Pelvis;
  std::vector<Interval> intervals;

  /// Throws InvalidInput on unordered, overlapping or empty intervals.
  void validate() const;
  double duration() const;
};

/// Per-sample truth; nullopt where no interval covers the sample.
using Raster = std::vector<std::optional<State>>;

/// Sample i (time t0 + i dt) takes the label of the interval containing it;
/// a sample on a shared boundary takes the earlier interval's label.
Raster rasterize(const AnnotationTrack& track, double t0, double dt, std::size_t n);

/// Inverse of rasterize: one interval per run of equal labels, each sample
/// owning [t - dt/2, t + dt/2]. Unlabeled samples are left uncovered.
AnnotationTrack raster_to_track(const Raster& raster, SensorSite site, double t0, double dt);

/// One annotated climb: per-site signals on the sensor clock and per-site
/// annotations. Raw recordings and the video trajectory are optional.
struct LabeledClimb {
  std::string id;
  std::map<SensorSite, SensorSignals> signals;
  std::map<SensorSite, AnnotationTrack> annotations;
  std::map<SensorSite, ImuRecording> recordings;
  std::optional<TrajectorySeries> pelvis_trajectory;

  /// Rasterized annotation of a site on its signal grid.
  Raster truth(SensorSite site) const;
  const SensorSignals& signals_of(SensorSite site) const;
};

}  // namespace climbsense
