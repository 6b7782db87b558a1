// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "climbsense/error.hpp"
#include "climbsense/simulator.hpp"
#include "climbsense/sync.hpp"

using namespace climbsense;

namespace {

SignalSeries noise(std::size_t n, double dt, std::uint64_t seed, double t0 = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  SignalSeries s{t0, dt, std::vector<double>(n)};
  for (double& v : s.values) v = g(rng);
  return moving_average(s, 0.3);
}

// b(t) = a(t - d): the same content recorded on a clock running d late.
SignalSeries delayed(const SignalSeries& a, long lag) {
  SignalSeries b = a;
  b.values.assign(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long j = static_cast<long>(i) - lag;
    if (j >= 0 && j < static_cast<long>(a.size())) b.values[i] = a.values[static_cast<std::size_t>(j)];
  }
  return b;
}

}  // namespace

TEST_CASE("moving average") {
  const SignalSeries s{0.0, 0.1, {1.0, 2.0, 3.0, 4.0, 5.0}};
  const SignalSeries m = moving_average(s, 0.3);
  // A linear ramp passes through unchanged, ends included.
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(m.values[i] == doctest::Approx(s.values[i]));
  const SignalSeries bump{0.0, 0.1, {0.0, 0.0, 3.0, 0.0, 0.0}};
  const SignalSeries b = moving_average(bump, 0.3);
  CHECK(b.values[1] == doctest::Approx(1.0));
  CHECK(b.values[2] == doctest::Approx(1.0));
  CHECK(b.values[0] == doctest::Approx(0.0));
}

TEST_CASE("trajectory differentiation") {
  SUBCASE("constant position") {
    TrajectorySeries t{0.0, 0.04, std::vector<std::array<double, 2>>(50, {1.0, 2.0})};
    const auto a = trajectory_to_acceleration(t, 0.3);
    for (double v : a.lateral.values) CHECK(std::abs(v) < 1e-9);
    for (double v : a.vertical.values) CHECK(std::abs(v) < 1e-9);
  }
  SUBCASE("quadratic is exact") {
    TrajectorySeries t{0.0, 0.04, {}};
    for (int i = 0; i < 200; ++i) {
      const double s = 0.04 * i;
      t.positions.push_back({0.0, 0.5 * 2.5 * s * s});
    }
    // Use a window narrower than one sample so no smoothing bends the ends.
    const auto a = trajectory_to_acceleration(t, 0.01);
    for (double v : a.vertical.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-6));
  }
  SUBCASE("sinusoid amplitude") {
    const double period = 1.0, dt = period / 25.0, amp = 0.2;
    const double w = 2.0 * std::numbers::pi / period;
    TrajectorySeries t{0.0, dt, {}};
    for (int i = 0; i < 500; ++i) t.positions.push_back({amp * std::sin(w * dt * i), 0.0});
    const auto a = trajectory_to_acceleration(t, 0.01);
    double peak = 0.0;
    for (std::size_t i = 10; i + 10 < a.lateral.size(); ++i) peak = std::max(peak, std::abs(a.lateral.values[i]));
    CHECK(std::abs(peak / (w * w * amp) - 1.0) < 0.02);
  }
  SUBCASE("too short") {
    TrajectorySeries t{0.0, 0.04, std::vector<std::array<double, 2>>(4, {0.0, 0.0})};
    CHECK_THROWS_AS(trajectory_to_acceleration(t, 0.3), Error);
  }
}

TEST_CASE("delay estimation") {
  const SignalSeries a = noise(6000, 0.01, 1);
  SUBCASE("identity") {
    const DelayEstimate e = estimate_delay(a, a, 20.0);
    CHECK(e.delay == 0.0);
    CHECK(e.correlation == doctest::Approx(1.0));
  }
  SUBCASE("constructed shift of 147 samples") {
    const DelayEstimate e = estimate_delay(a, delayed(a, 147), 20.0);
    CHECK(e.lag_samples == 147);
    CHECK(e.delay == doctest::Approx(1.47).epsilon(1e-12));
    CHECK(e.correlation > 0.99);
  }
  SUBCASE("antisymmetry") {
    const SignalSeries b = delayed(a, -230);
    CHECK(estimate_delay(a, b, 20.0).delay == doctest::Approx(-estimate_delay(b, a, 20.0).delay));
  }
  SUBCASE("clock offsets add to the lag") {
    SignalSeries b = a;
    b.t0 = 3.0;
    CHECK(estimate_delay(a, b, 20.0).delay == doctest::Approx(3.0));
  }
  SUBCASE("correlation stays in range") {
    const SignalSeries b = noise(6000, 0.01, 2);
    for (const auto& p : correlation_profile(a, b, 5.0)) {
      CHECK(p.correlation >= -1.0);
      CHECK(p.correlation <= 1.0);
    }
  }
  SUBCASE("insufficient overlap") {
    const SignalSeries s = noise(1500, 0.01, 3);
    try {
      estimate_delay(s, s, 10.0);
      FAIL("expected InsufficientOverlap");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientOverlap);
    }
  }
  SUBCASE("summed channels") {
    const SignalSeries c = noise(6000, 0.01, 4);
    const std::vector<std::pair<SignalSeries, SignalSeries>> pairs{{a, delayed(a, 80)}, {c, delayed(c, 80)}};
    const DelayEstimate e = estimate_delay(pairs, 20.0);
    CHECK(e.lag_samples == 80);
    CHECK(e.correlation > 0.99);
  }
}

TEST_CASE("resample") {
  const SignalSeries s{0.0, 0.04, {0.0, 1.0, 2.0, 3.0}};
  const SignalSeries r = resample(s, 0.01);
  CHECK(r.size() == 13);
  CHECK(r.values[2] == doctest::Approx(0.5));
  CHECK(r.values[12] == doctest::Approx(3.0));
}

TEST_CASE("annotation shifting") {
  const AnnotationTrack t{SensorSite::Pelvis, {{0.0, 10.0, State::H0}, {10.0, 20.0, State::H1}, {20.0, 30.0, State::H0}}};
  CHECK(shift_annotations(t, 0.0).intervals == t.intervals);
  const AnnotationTrack back = shift_annotations(shift_annotations(t, 1.47), -1.47);
  for (std::size_t i = 0; i < t.intervals.size(); ++i) {
    CHECK(back.intervals[i].start == doctest::Approx(t.intervals[i].start));
    CHECK(back.intervals[i].end == doctest::Approx(t.intervals[i].end));
  }
  const AnnotationTrack clipped = shift_annotations(t, 5.0, std::pair{0.0, 25.0});
  // The last interval lands entirely past the span and is dropped.
  REQUIRE(clipped.intervals.size() == 2);
  CHECK(clipped.intervals.front().start == 5.0);
  CHECK(clipped.intervals.back().end == 25.0);
  const AnnotationTrack dropped = shift_annotations(t, -25.0, std::pair{0.0, 30.0});
  REQUIRE(dropped.intervals.size() == 1);
  CHECK(dropped.intervals[0].end == 5.0);
}

TEST_CASE("shifted annotations align simulated bursts") {
  SimulationOptions opt;
  opt.seed = 3;
  opt.trajectory = true;
  const LabeledClimb climb = simulate(random_plan(60.0, 3), default_simulation_models(), opt, "s");
  const LabeledClimb late = inject_delay(climb, 1.47);
  const auto& acc = climb.signals_of(SensorSite::Pelvis).acc;
  const AnnotationTrack fixed = shift_annotations(late.annotations.at(SensorSite::Pelvis), -1.47);
  const Raster truth = rasterize(climb.annotations.at(SensorSite::Pelvis), 0.0, acc.dt, acc.size());
  const Raster back = rasterize(fixed, 0.0, acc.dt, acc.size());
  // Onsets agree within two samples.
  std::vector<std::size_t> on_a, on_b;
  for (std::size_t i = 1; i < truth.size(); ++i) {
    if (truth[i] != truth[i - 1]) on_a.push_back(i);
    if (back[i] != back[i - 1]) on_b.push_back(i);
  }
  REQUIRE(on_a.size() == on_b.size());
  for (std::size_t i = 0; i < on_a.size(); ++i) {
    CHECK(std::abs(static_cast<long>(on_a[i]) - static_cast<long>(on_b[i])) <= 2);
  }
}

TEST_CASE("pelvis synchronization uses the trajectory clock") {
  SimulationOptions opt;
  opt.seed = 12;
  opt.triaxial = true;
  opt.trajectory = true;
  const LabeledClimb climb = simulate(random_plan(40.0, 12), default_simulation_models(), opt, "s");
  const ImuRecording& pelvis = climb.recordings.at(SensorSite::Pelvis);
  const PelvisSync same = synchronize_pelvis(pelvis, *climb.pelvis_trajectory);
  CHECK(same.estimate.lag_samples == 0);
  CHECK(same.estimate.correlation > 0.9);
  CHECK(same.video_lateral.dt == doctest::Approx(pelvis.samples[1].t - pelvis.samples[0].t));

  const LabeledClimb late = inject_delay(climb, 1.47);
  const PelvisSync shifted = synchronize_pelvis(pelvis, *late.pelvis_trajectory);
  CHECK(shifted.estimate.delay == doctest::Approx(1.47).epsilon(1e-9));

  // A wall axis pointing the other way is found by the sign search.
  TrajectorySeries flipped = *climb.pelvis_trajectory;
  for (auto& p : flipped.positions) p[0] = -p[0];
  const PelvisSync f = synchronize_pelvis(pelvis, flipped);
  CHECK(f.estimate.lag_samples == 0);
  CHECK(f.estimate.correlation == doctest::Approx(same.estimate.correlation).epsilon(1e-9));
}
