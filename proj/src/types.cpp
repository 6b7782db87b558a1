// SPDX-License-Identifier: Apache-2.0

#include "climbsense/types.hpp"

namespace climbsense {

std::string_view to_string(State s) { return s == State::H0 ? "H0" : "H1"; }

std::optional<State> parse_state(std::string_view text) {
  if (text == "H0" || text == "0") return State::H0;
  if (text == "H1" || text == "1") return State::H1;
  return std::nullopt;
}

std::string_view site_code(SensorSite site) {
  switch (site) {
    case SensorSite::LeftHand: return "lh";
    case SensorSite::RightHand: return "rh";
    case SensorSite::LeftFoot: return "lf";
    case SensorSite::RightFoot: return "rf";
    case SensorSite::Pelvis: return "pelvis";
  }
  return "?";
}

std::optional<SensorSite> parse_site(std::string_view code) {
  for (SensorSite s : kAllSites) {
    if (site_code(s) == code) return s;
  }
  return std::nullopt;
}

}  // namespace climbsense
