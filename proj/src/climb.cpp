// SPDX-License-Identifier: Apache-2.0

#include "climbsense/climb.hpp"

#include <cmath>
#include <sstream>

#include "climbsense/error.hpp"

namespace climbsense {

void AnnotationTrack::validate() const {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const Interval& iv = intervals[i];
    if (!std::isfinite(iv.start) || !std::isfinite(iv.end) || !(iv.end > iv.start)) {
      std::ostringstream msg;
      msg << "annotation " << site_code(site) << ": interval " << i << " is empty or not finite";
      throw Error(ErrorCode::InvalidInput, msg.str());
    }
    if (i > 0 && iv.start < intervals[i - 1].end) {
      std::ostringstream msg;
      msg << "annotation " << site_code(site) << ": interval " << i
          << " overlaps or precedes the previous one";
      throw Error(ErrorCode::InvalidInput, msg.str());
    }
  }
}

double AnnotationTrack::duration() const {
  double d = 0.0;
  for (const Interval& iv : intervals) d += iv.end - iv.start;
  return d;
}

Raster rasterize(const AnnotationTrack& track, double t0, double dt, std::size_t n) {
  Raster out(n);
  std::size_t k = 0;
  const auto& iv = track.intervals;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + dt * static_cast<double>(i);
    while (k < iv.size() && iv[k].end < t) ++k;
    if (k < iv.size() && iv[k].start <= t) out[i] = iv[k].label;
  }
  return out;
}

AnnotationTrack raster_to_track(const Raster& raster, SensorSite site, double t0, double dt) {
  AnnotationTrack track;
  track.site = site;
  std::size_t i = 0;
  while (i < raster.size()) {
    if (!raster[i]) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < raster.size() && raster[j] == raster[i]) ++j;
    track.intervals.push_back({t0 + dt * (static_cast<double>(i) - 0.5),
                               t0 + dt * (static_cast<double>(j) - 0.5), *raster[i]});
    i = j;
  }
  return track;
}

const SensorSignals& LabeledClimb::signals_of(SensorSite site) const {
  const auto it = signals.find(site);
  if (it == signals.end()) {
    throw Error(ErrorCode::InvalidInput,
                "climb " + id + " has no signals for site " + std::string(site_code(site)));
  }
  return it->second;
}

Raster LabeledClimb::truth(SensorSite site) const {
  const SensorSignals& s = signals_of(site);
  const auto it = annotations.find(site);
  if (it == annotations.end()) {
    throw Error(ErrorCode::InvalidInput,
                "climb " + id + " has no annotation for site " + std::string(site_code(site)));
  }
  return rasterize(it->second, s.acc.t0, s.acc.dt, s.acc.size());
}

}  // namespace climbsense
