// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "brute_substates.hpp"
#include "climbsense/classifier.hpp"
#include "climbsense/error.hpp"
#include "climbsense/simulator.hpp"

using namespace climbsense;

namespace {

using FB = FullBodyState;
using LS = LimbSubState;
constexpr State L = State::H0;
constexpr State M = State::H1;

std::vector<State> runs(std::size_t n, std::size_t max_run, std::mt19937_64& rng) {
  std::vector<State> out;
  std::uniform_int_distribution<std::size_t> len(1, max_run);
  State s = rng() % 2 ? M : L;
  while (out.size() < n) {
    out.insert(out.end(), std::min(len(rng), n - out.size()), s);
    s = other(s);
  }
  return out;
}

std::vector<FB> fb_runs(std::size_t n, std::mt19937_64& rng) {
  std::vector<FB> out;
  std::uniform_int_distribution<std::size_t> len(1, 80);
  while (out.size() < n) out.insert(out.end(), std::min(len(rng), n - out.size()), static_cast<FB>(rng() % 4));
  return out;
}

BinaryStateSeries series(std::vector<State> s) { return {0.0, 0.01, std::move(s), {}}; }

}  // namespace

TEST_CASE("full-body truth table") {
  std::map<FB, int> count;
  for (int mask = 0; mask < 32; ++mask) {
    std::array<State, 4> limbs{};
    for (int l = 0; l < 4; ++l) limbs[l] = (mask >> l) & 1 ? M : L;
    const State pelvis = (mask >> 4) & 1 ? M : L;
    const bool any = (mask & 15) != 0;
    const FB expected = any ? (pelvis == M ? FB::Traction : FB::HoldInteraction)
                            : (pelvis == M ? FB::PosturalRegulation : FB::Immobility);
    const FB got = full_body_state(limbs, pelvis);
    CHECK(got == expected);
    ++count[got];
  }
  CHECK(count[FB::Immobility] == 1);
  CHECK(count[FB::PosturalRegulation] == 1);
  CHECK(count[FB::HoldInteraction] == 15);
  CHECK(count[FB::Traction] == 15);
}

TEST_CASE("motion episodes and short-episode suppression") {
  const std::vector<State> s{L, M, M, L, M, L, L, M, M, M};
  const auto eps = motion_episodes(s);
  REQUIRE(eps.size() == 3);
  CHECK(eps[0] == Episode{1, 3});
  CHECK(eps[2] == Episode{7, 10});
  const auto f = suppress_short_episodes(s, 3);
  CHECK(f == std::vector<State>{L, L, L, L, L, L, L, M, M, M});
  CHECK(suppress_short_episodes(s, 0) == s);
}

TEST_CASE("three-episode example") {
  // E1 and E2 before a traction block, E3 inside it.
  std::vector<State> limb(40, L);
  std::vector<FB> fb(40, FB::HoldInteraction);
  for (int i = 2; i < 6; ++i) limb[i] = M;
  for (int i = 10; i < 14; ++i) limb[i] = M;
  for (int i = 20; i < 30; ++i) fb[i] = FB::Traction;
  for (int i = 22; i < 26; ++i) limb[i] = M;
  const auto sub = limb_substates(limb, fb);
  CHECK(sub[3] == LS::Exploration);
  CHECK(sub[11] == LS::Change);
  CHECK(sub[23] == LS::Use);
  CHECK(sub[0] == LS::Immobility);
  CHECK(sub == brute_substates(limb, fb));

  ActivityTimeline tl{0.0, 0.01, fb, {}};
  for (SensorSite limb_site : kLimbs) tl.limb_substates[limb_site] = std::vector<LS>(40, LS::Immobility);
  tl.limb_substates[SensorSite::LeftHand] = sub;
  const ExplorationReport rep = exploration_report(tl);
  CHECK(rep.limbs.at(SensorSite::LeftHand).exploratory == 2);
  CHECK(rep.limbs.at(SensorSite::LeftHand).performatory == 1);
  CHECK(rep.limbs.at(SensorSite::LeftHand).ratio() == 2.0);
  CHECK(std::isnan(rep.limbs.at(SensorSite::RightHand).ratio()));
  CHECK(std::isinf(LimbCounts{3, 0}.ratio()));
}

TEST_CASE("episode spanning the traction boundary is use") {
  std::vector<State> limb(20, L);
  std::vector<FB> fb(20, FB::HoldInteraction);
  for (int i = 5; i < 12; ++i) limb[i] = M;
  for (int i = 10; i < 20; ++i) fb[i] = FB::Traction;
  const auto sub = limb_substates(limb, fb);
  CHECK(sub[5] == LS::Use);
  CHECK(sub[11] == LS::Use);
}

TEST_CASE("traction onset without a prior episode emits no change") {
  std::vector<State> limb(20, L);
  std::vector<FB> fb(20, FB::HoldInteraction);
  for (int i = 0; i < 10; ++i) fb[i] = FB::Traction;
  for (int i = 14; i < 18; ++i) limb[i] = M;
  const auto sub = limb_substates(limb, fb);
  CHECK(sub[15] == LS::Exploration);
}

TEST_CASE("sub-states match the brute-force labeler") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto limb = runs(1000, 40, rng);
    const auto fb = fb_runs(1000, rng);
    const auto sub = limb_substates(limb, fb);
    REQUIRE(sub == brute_substates(limb, fb));
    for (std::size_t i = 0; i < limb.size(); ++i) REQUIRE((limb[i] == L) == (sub[i] == LS::Immobility));
  }
  CHECK_THROWS_AS(limb_substates(std::vector<State>(3, L), std::vector<FB>(4, FB::Immobility)), Error);
}

TEST_CASE("at most one change per traction onset") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const auto limb = runs(1000, 30, rng);
    const auto fb = fb_runs(1000, rng);
    const auto sub = limb_substates(limb, fb);
    std::size_t onsets = 0, changes = 0;
    for (std::size_t i = 0; i < fb.size(); ++i) {
      onsets += fb[i] == FB::Traction && (i == 0 || fb[i - 1] != FB::Traction);
      changes += sub[i] == LS::Change && (i == 0 || sub[i - 1] != LS::Change);
    }
    CHECK(changes <= onsets);
  }
}

TEST_CASE("classify") {
  std::map<SensorSite, BinaryStateSeries> d;
  for (SensorSite s : kAllSites) d[s] = series(std::vector<State>(100, L));
  SUBCASE("all immobile") {
    const ActivityTimeline tl = classify(d);
    for (FB s : tl.full_body) CHECK(s == FB::Immobility);
    CHECK(tl.limb_substates.size() == 4);
    CHECK_FALSE(tl.limb_substates.contains(SensorSite::Pelvis));
  }
  SUBCASE("short episodes are filtered") {
    for (int i = 10; i < 15; ++i) d[SensorSite::Pelvis].states[i] = M;
    for (int i = 50; i < 70; ++i) d[SensorSite::Pelvis].states[i] = M;
    const ActivityTimeline tl = classify(d);
    CHECK(tl.full_body[12] == FB::Immobility);
    CHECK(tl.full_body[60] == FB::PosturalRegulation);
    const ActivityTimeline raw = classify(d, {0});
    CHECK(raw.full_body[12] == FB::PosturalRegulation);
  }
  SUBCASE("length mismatch") {
    d[SensorSite::LeftFoot].states.pop_back();
    CHECK_THROWS_AS(classify(d), Error);
  }
  SUBCASE("missing site") {
    d.erase(SensorSite::RightHand);
    CHECK_THROWS_AS(classify(d), Error);
  }
  SUBCASE("other grids are aligned by nearest sample") {
    BinaryStateSeries coarse{0.0, 0.02, std::vector<State>(50, L), {}};
    for (int i = 10; i < 40; ++i) coarse.states[i] = M;
    d[SensorSite::LeftHand] = coarse;
    const ActivityTimeline tl = classify(d);
    CHECK(tl.size() == 100);
    CHECK(tl.full_body[18] == FB::Immobility);
    CHECK(tl.full_body[22] == FB::HoldInteraction);
    CHECK(tl.full_body[76] == FB::HoldInteraction);
    CHECK(tl.full_body[80] == FB::Immobility);
  }
}

TEST_CASE("scripted climb through the classifier") {
  const StatePlan plan = random_plan(120.0, 5);
  SimulationOptions opt;
  opt.seed = 5;
  const LabeledClimb climb = simulate(plan, default_simulation_models(), opt, "c");
  std::map<SensorSite, BinaryStateSeries> d;
  const std::size_t n = climb.signals_of(SensorSite::Pelvis).acc.size();
  for (SensorSite s : kAllSites) {
    const Raster truth = climb.truth(s);
    std::vector<State> st;
    for (const auto& v : truth) st.push_back(v.value_or(L));
    d[s] = series(st);
  }
  const ActivityTimeline tl = classify(d);
  std::vector<FB> expected;
  for (const ScriptStep& step : plan.script) {
    const auto k = static_cast<std::size_t>(std::llround(step.duration * 100.0));
    expected.insert(expected.end(), k, step.state);
  }
  expected.resize(n, expected.back());
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) agree += tl.full_body[i] == expected[i];
  CHECK(static_cast<double>(agree) / static_cast<double>(n) >= 0.95);
  for (const auto& [site, subs] : tl.limb_substates) CHECK(subs.size() == n);
}
