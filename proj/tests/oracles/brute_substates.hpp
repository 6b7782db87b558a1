// SPDX-License-Identifier: Apache-2.0

// Sub-state labeler written straight from the definitions: every episode is
// compared against every traction onset by scanning raw samples.

#pragma once

#include <vector>

#include "climbsense/classifier.hpp"

namespace climbsense {

inline std::vector<LimbSubState> brute_substates(const std::vector<State>& limb,
                                                 const std::vector<FullBodyState>& fb) {
  const std::size_t n = limb.size();
  struct Ep {
    std::size_t first, last;
    LimbSubState label;
  };
  std::vector<Ep> eps;
  for (std::size_t i = 0; i < n; ++i) {
    if (limb[i] != State::H1 || (i > 0 && limb[i - 1] == State::H1)) continue;
    std::size_t j = i;
    while (j + 1 < n && limb[j + 1] == State::H1) ++j;
    bool touches = false;
    for (std::size_t k = i; k <= j; ++k) touches = touches || fb[k] == FullBodyState::Traction;
    eps.push_back({i, j, touches ? LimbSubState::Use : LimbSubState::Exploration});
  }
  for (std::size_t o = 0; o < n; ++o) {
    const bool onset = fb[o] == FullBodyState::Traction && (o == 0 || fb[o - 1] != FullBodyState::Traction);
    if (!onset) continue;
    Ep* pick = nullptr;
    for (Ep& e : eps) {
      if (e.label == LimbSubState::Use || e.last >= o) continue;
      if (pick == nullptr || e.last > pick->last) pick = &e;
    }
    if (pick != nullptr) pick->label = LimbSubState::Change;
  }
  std::vector<LimbSubState> out(n, LimbSubState::Immobility);
  for (const Ep& e : eps) {
    for (std::size_t k = e.first; k <= e.last; ++k) out[k] = e.label;
  }
  return out;
}

}  // namespace climbsense
