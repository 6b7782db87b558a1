// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace climbsense {

/// Per-sample motion hypothesis of one sensor: H0 immobile, H1 mobile.
enum class State : std::uint8_t { H0 = 0, H1 = 1 };

inline State other(State s) { return s == State::H0 ? State::H1 : State::H0; }
std::string_view to_string(State s);
std::optional<State> parse_state(std::string_view text);

enum class SensorSite : std::uint8_t { LeftHand, RightHand, LeftFoot, RightFoot, Pelvis };

inline constexpr std::array<SensorSite, 5> kAllSites = {
    SensorSite::LeftHand, SensorSite::RightHand, SensorSite::LeftFoot, SensorSite::RightFoot,
    SensorSite::Pelvis};

/// Limb order used by timelines and reports: rh, lh, rf, lf.
inline constexpr std::array<SensorSite, 4> kLimbs = {
    SensorSite::RightHand, SensorSite::LeftHand, SensorSite::RightFoot, SensorSite::LeftFoot};

/// Short file/column token: lh, rh, lf, rf, pelvis.
std::string_view site_code(SensorSite site);
std::optional<SensorSite> parse_site(std::string_view code);
inline bool is_limb(SensorSite site) { return site != SensorSite::Pelvis; }

/// Uniformly sampled signal starting at t0 with step dt. Values are
/// nonnegative whenever the series holds a norm.
struct SignalSeries {
  double t0 = 0.0;
  double dt = 0.01;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
};

/// Wall-plane position track (metres) of the pelvis, extracted from video.
struct TrajectorySeries {
  double t0 = 0.0;
  double dt = 0.04;
  std::vector<std::array<double, 2>> positions;  // (lateral, vertical)

  std::size_t size() const { return positions.size(); }
};

}  // namespace climbsense
