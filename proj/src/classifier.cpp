// SPDX-License-Identifier: Apache-2.0

#include "climbsense/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "climbsense/error.hpp"

namespace climbsense {

std::string_view to_string(FullBodyState s) {
  switch (s) {
    case FullBodyState::Immobility: return "immobility";
    case FullBodyState::PosturalRegulation: return "postural_regulation";
    case FullBodyState::HoldInteraction: return "hold_interaction";
    case FullBodyState::Traction: return "traction";
  }
  return "?";
}

std::string_view to_string(LimbSubState s) {
  switch (s) {
    case LimbSubState::Immobility: return "immobility";
    case LimbSubState::Use: return "use";
    case LimbSubState::Change: return "change";
    case LimbSubState::Exploration: return "exploration";
  }
  return "?";
}

std::optional<FullBodyState> parse_full_body(std::string_view text) {
  for (auto s : {FullBodyState::Immobility, FullBodyState::PosturalRegulation,
                 FullBodyState::HoldInteraction, FullBodyState::Traction}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<LimbSubState> parse_sub_state(std::string_view text) {
  for (auto s : {LimbSubState::Immobility, LimbSubState::Use, LimbSubState::Change,
                 LimbSubState::Exploration}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

FullBodyState full_body_state(std::span<const State, 4> limbs, State pelvis) {
  const bool any_limb = std::any_of(limbs.begin(), limbs.end(), [](State s) { return s == State::H1; });
  const bool pelvis_moving = pelvis == State::H1;
  if (!any_limb) return pelvis_moving ? FullBodyState::PosturalRegulation : FullBodyState::Immobility;
  return pelvis_moving ? FullBodyState::Traction : FullBodyState::HoldInteraction;
}

std::vector<Episode> motion_episodes(std::span<const State> states) {
  std::vector<Episode> out;
  std::size_t i = 0;
  while (i < states.size()) {
    if (states[i] != State::H1) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < states.size() && states[j] == State::H1) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

std::vector<State> suppress_short_episodes(std::span<const State> states, std::size_t min_samples) {
  std::vector<State> out(states.begin(), states.end());
  for (const Episode& e : motion_episodes(states)) {
    if (e.end - e.begin < min_samples) {
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(e.begin),
                out.begin() + static_cast<std::ptrdiff_t>(e.end), State::H0);
    }
  }
  return out;
}

std::vector<LimbSubState> limb_substates(std::span<const State> limb,
                                         std::span<const FullBodyState> full_body) {
  if (limb.size() != full_body.size()) {
    std::ostringstream msg;
    msg << "limb series has " << limb.size() << " samples, full-body series " << full_body.size();
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  const std::size_t n = limb.size();
  std::vector<LimbSubState> out(n, LimbSubState::Immobility);

  // Traction samples seen so far, for O(1) overlap queries.
  std::vector<std::size_t> traction_prefix(n + 1, 0);
  std::vector<std::size_t> onsets;
  for (std::size_t i = 0; i < n; ++i) {
    const bool traction = full_body[i] == FullBodyState::Traction;
    traction_prefix[i + 1] = traction_prefix[i] + (traction ? 1 : 0);
    if (traction && (i == 0 || full_body[i - 1] != FullBodyState::Traction)) onsets.push_back(i);
  }

  const auto episodes = motion_episodes(limb);
  std::vector<LimbSubState> label(episodes.size(), LimbSubState::Exploration);
  std::vector<std::size_t> free_episodes;  // non-traction, ordered by end
  for (std::size_t k = 0; k < episodes.size(); ++k) {
    const Episode& e = episodes[k];
    if (traction_prefix[e.end] > traction_prefix[e.begin]) {
      label[k] = LimbSubState::Use;
    } else {
      free_episodes.push_back(k);
    }
  }
  // Episodes are disjoint and ordered, so the latest-ending free episode
  // before an onset is the last one whose end <= onset.
  std::size_t f = 0;
  for (std::size_t onset : onsets) {
    while (f < free_episodes.size() && episodes[free_episodes[f]].end <= onset) ++f;
    if (f > 0) label[free_episodes[f - 1]] = LimbSubState::Change;
  }

  for (std::size_t k = 0; k < episodes.size(); ++k) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(episodes[k].begin),
              out.begin() + static_cast<std::ptrdiff_t>(episodes[k].end), label[k]);
  }
  return out;
}

std::vector<State> align_states(const BinaryStateSeries& series, double t0, double dt, std::size_t n) {
  std::vector<State> out(n, State::H0);
  if (series.states.empty()) return out;
  const auto last = static_cast<double>(series.states.size() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + dt * static_cast<double>(i);
    const double pos = std::clamp(std::round((t - series.t0) / series.dt), 0.0, last);
    out[i] = series.states[static_cast<std::size_t>(pos)];
  }
  return out;
}

ActivityTimeline classify(const std::map<SensorSite, BinaryStateSeries>& detections,
                          const ClassifierConfig& config) {
  for (SensorSite site : kAllSites) {
    if (!detections.contains(site)) {
      throw Error(ErrorCode::InvalidInput,
                  "missing detection for site " + std::string(site_code(site)));
    }
  }
  const BinaryStateSeries& pelvis = detections.at(SensorSite::Pelvis);
  const std::size_t n = pelvis.size();

  ActivityTimeline tl;
  tl.t0 = pelvis.t0;
  tl.dt = pelvis.dt;
  std::map<SensorSite, std::vector<State>> aligned;
  for (SensorSite site : kAllSites) {
    const BinaryStateSeries& d = detections.at(site);
    std::vector<State> states;
    if (site == SensorSite::Pelvis) {
      states = d.states;
    } else if (d.size() != n && std::abs(d.dt - pelvis.dt) <= 1e-12 &&
               std::abs(d.t0 - pelvis.t0) <= 1e-12) {
      std::ostringstream msg;
      msg << "detection for " << site_code(site) << " has " << d.size() << " samples, pelvis " << n;
      throw Error(ErrorCode::LengthMismatch, msg.str());
    } else {
      states = align_states(d, tl.t0, tl.dt, n);
    }
    aligned[site] = suppress_short_episodes(states, config.min_episode_samples);
  }

  tl.full_body.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::array<State, 4> limbs = {
        aligned[kLimbs[0]][i], aligned[kLimbs[1]][i], aligned[kLimbs[2]][i], aligned[kLimbs[3]][i]};
    tl.full_body[i] = full_body_state(limbs, aligned[SensorSite::Pelvis][i]);
  }
  for (SensorSite limb : kLimbs) tl.limb_substates[limb] = limb_substates(aligned[limb], tl.full_body);
  return tl;
}

double LimbCounts::ratio() const {
  if (performatory == 0) {
    return exploratory == 0 ? std::numeric_limits<double>::quiet_NaN()
                            : std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(exploratory) / static_cast<double>(performatory);
}

ExplorationReport exploration_report(const ActivityTimeline& timeline) {
  ExplorationReport report;
  for (const auto& [site, subs] : timeline.limb_substates) {
    LimbCounts counts;
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (i > 0 && subs[i] == subs[i - 1]) continue;
      switch (subs[i]) {
        case LimbSubState::Exploration:
        case LimbSubState::Change: ++counts.exploratory; break;
        case LimbSubState::Use: ++counts.performatory; break;
        case LimbSubState::Immobility: break;
      }
    }
    report.limbs[site] = counts;
  }
  return report;
}

}  // namespace climbsense
