// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "climbsense/cusum.hpp"
#include "climbsense/types.hpp"

namespace climbsense {

enum class FullBodyState : std::uint8_t { Immobility, PosturalRegulation, HoldInteraction, Traction };
enum class LimbSubState : std::uint8_t { Immobility, Use, Change, Exploration };

std::string_view to_string(FullBodyState s);
std::string_view to_string(LimbSubState s);
std::optional<FullBodyState> parse_full_body(std::string_view text);
std::optional<LimbSubState> parse_sub_state(std::string_view text);

/// Limbs moving x pelvis moving truth table.
FullBodyState full_body_state(std::span<const State, 4> limbs, State pelvis);

/// Maximal run of H1 samples, [begin, end).
struct Episode {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Episode&) const = default;
};

std::vector<Episode> motion_episodes(std::span<const State> states);

/// Turns H1 runs shorter than min_samples into H0.
std::vector<State> suppress_short_episodes(std::span<const State> states, std::size_t min_samples);

/// Sub-states of one limb. Episodes touching any Traction sample are Use;
/// for each Traction onset, the non-traction episode ending latest strictly
/// before it is Change; remaining episodes are Exploration; H0 samples are
/// Immobility. Throws LengthMismatch on unequal lengths.
std::vector<LimbSubState> limb_substates(std::span<const State> limb,
                                         std::span<const FullBodyState> full_body);

struct ClassifierConfig {
  std::size_t min_episode_samples = 10;  // 0.1 s at 100 Hz
};

struct ActivityTimeline {
  double t0 = 0.0;
  double dt = 0.01;
  std::vector<FullBodyState> full_body;
  std::map<SensorSite, std::vector<LimbSubState>> limb_substates;  // limbs only

  std::size_t size() const { return full_body.size(); }
};

/// Nearest-sample lookup of a detection series onto another grid.
std::vector<State> align_states(const BinaryStateSeries& series, double t0, double dt, std::size_t n);

/// Full-body and limb sub-state timeline from the five detections, on the
/// pelvis grid. Short episodes are suppressed on every series first.
ActivityTimeline classify(const std::map<SensorSite, BinaryStateSeries>& detections,
                          const ClassifierConfig& config = {});

struct LimbCounts {
  std::size_t exploratory = 0;  // Exploration + Change episodes
  std::size_t performatory = 0;  // Use episodes
  /// exploratory / performatory; +inf when only exploratory movements, NaN
  /// when there are none at all.
  double ratio() const;
};

struct ExplorationReport {
  std::map<SensorSite, LimbCounts> limbs;
};

ExplorationReport exploration_report(const ActivityTimeline& timeline);

}  // namespace climbsense
