// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "climbsense/error.hpp"
#include "climbsense/learning.hpp"
#include "climbsense/simulator.hpp"

using namespace climbsense;

namespace {

LabeledClimb sim_climb(double duration, std::uint64_t seed, const std::string& id,
                       const std::map<SensorSite, ChannelModels>& models = default_simulation_models()) {
  SimulationOptions opt;
  opt.seed = seed;
  return simulate(random_plan(duration, seed), models, opt, id);
}

LearningGrids small_grids() {
  LearningGrids g;
  g.thresholds = ThresholdGrid::log_spaced(1.0, 1000.0, 7);
  g.alphas = {0.0, 0.5, 1.0};
  return g;
}

// Independent scoring path: detect, relabel, rasterize, count.
Confusion direct_counts(std::span<const LabeledClimb> climbs, SensorSite site, const ChannelModels& m,
                        const DetectionConfig& cfg) {
  Confusion total;
  for (const LabeledClimb& c : climbs) {
    const SensorSignals& s = c.signals_of(site);
    const auto pred = relabel_segments(detect(s.acc, s.ang, {m.acc, m.ang, cfg}));
    const Raster truth = rasterize(c.annotations.at(site), s.acc.t0, s.acc.dt, s.acc.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (!truth[i]) continue;
      const bool p = pred.states[i] == State::H1, t = *truth[i] == State::H1;
      if (p && t) ++total.tp;
      if (p && !t) ++total.fp;
      if (!p && !t) ++total.tn;
      if (!p && t) ++total.fn;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("performance coefficient") {
  std::vector<State> truth_states;
  for (int i = 0; i < 100; ++i) truth_states.push_back(i % 3 ? State::H0 : State::H1);
  Raster truth(truth_states.begin(), truth_states.end());
  CHECK(performance_coefficient(confusion(truth_states, truth)) == 1.0);
  CHECK(performance_coefficient(confusion(std::vector<State>(100, State::H1), truth)) == 0.0);
  CHECK(performance_coefficient(confusion(std::vector<State>(100, State::H0), truth)) == 0.0);

  Raster all_h0(100, State::H0);
  CHECK_THROWS_AS(performance_coefficient(confusion(truth_states, all_h0)), Error);

  Raster partial = truth;
  partial[0].reset();
  const Confusion c = confusion(truth_states, partial);
  CHECK(c.tp + c.fp + c.tn + c.fn == 99);

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> u(0, 1000);
  for (int i = 0; i < 100; ++i) {
    Confusion r{u(rng), u(rng), u(rng), u(rng)};
    if (r.positives() == 0 || r.negatives() == 0) continue;
    const double P = static_cast<double>(r.positives()), N = static_cast<double>(r.negatives());
    CHECK(r.tp / P - r.fp / N == doctest::Approx(r.tn / N - r.fn / P).epsilon(1e-12));
    CHECK(performance_coefficient(r) == doctest::Approx(r.tp / P - r.fp / N));
  }
}

TEST_CASE("performance coefficient from a series and a track") {
  const AnnotationTrack track{SensorSite::LeftHand, {{0.0, 0.5, State::H0}, {0.5, 1.0, State::H1}}};
  BinaryStateSeries pred{0.0, 0.01, std::vector<State>(100, State::H0), {}};
  for (std::size_t i = 50; i < 100; ++i) pred.states[i] = State::H1;
  CHECK(performance_coefficient(pred, track) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("rasterization") {
  const AnnotationTrack track{SensorSite::LeftHand, {{0.0, 0.5, State::H0}, {0.5, 1.0, State::H1}}};
  const Raster r = rasterize(track, 0.0, 0.1, 11);
  CHECK(*r[5] == State::H0);  // shared boundary takes the earlier label
  CHECK(*r[6] == State::H1);
  CHECK(*r[10] == State::H1);
  const Raster out = rasterize(track, 0.0, 0.1, 13);
  CHECK_FALSE(out[12].has_value());

  const AnnotationTrack back = raster_to_track(r, SensorSite::LeftHand, 0.0, 0.1);
  CHECK(rasterize(back, 0.0, 0.1, 11) == r);
  CHECK(std::abs(back.duration() - track.duration()) <= 0.1 + 1e-12);
}

TEST_CASE("fit_models") {
  const auto models = default_simulation_models();
  const LabeledClimb a = sim_climb(240.0, 1, "a");
  const LabeledClimb b = sim_climb(240.0, 2, "b");

  SUBCASE("recovers the generator within 10%") {
    const std::vector<LabeledClimb> climbs{a, b};
    for (SensorSite site : kAllSites) {
      const ChannelModels m = fit_models(climbs, site);
      const ChannelModels& g = models.at(site);
      for (auto [fit, gen] : {std::pair{m.acc.h0, g.acc.h0}, {m.acc.h1, g.acc.h1}, {m.ang.h0, g.ang.h0},
                              {m.ang.h1, g.ang.h1}}) {
        CHECK(std::abs(fit.k / gen.k - 1.0) < 0.1);
        CHECK(std::abs(fit.theta / gen.theta - 1.0) < 0.1);
      }
    }
  }
  SUBCASE("pooling equals fitting the concatenation") {
    const std::vector<LabeledClimb> climbs{a, b};
    const ChannelModels m = fit_models(climbs, SensorSite::Pelvis);
    std::vector<double> h1;
    for (const LabeledClimb* c : {&a, &b}) {
      const Raster t = c->truth(SensorSite::Pelvis);
      const auto& v = c->signals_of(SensorSite::Pelvis).acc.values;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (t[i] == State::H1) h1.push_back(v[i]);
      }
    }
    const GammaParams direct = fit_mle(h1);
    CHECK(m.acc.h1.k == direct.k);
    CHECK(m.acc.h1.theta == direct.theta);
  }
  SUBCASE("missing state") {
    LabeledClimb c = a;
    for (auto& [site, track] : c.annotations) {
      track.intervals = {{0.0, track.intervals.back().end, State::H0}};
    }
    try {
      fit_models(std::span(&c, 1), SensorSite::LeftHand);
      FAIL("expected MissingState");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingState);
    }
  }
}

TEST_CASE("threshold grids") {
  const ThresholdGrid g = ThresholdGrid::standard();
  REQUIRE(g.lambda0.size() == 20);
  CHECK(g.lambda0.front() == doctest::Approx(0.1));
  CHECK(g.lambda0.back() == doctest::Approx(1000.0));
  for (std::size_t i = 1; i < 20; ++i) {
    CHECK(g.lambda1[i] / g.lambda1[i - 1] == doctest::Approx(std::pow(1e4, 1.0 / 19.0)));
  }
  const auto alphas = standard_alpha_grid();
  REQUIRE(alphas.size() == 11);
  CHECK(alphas[3] == doctest::Approx(0.3));
  CHECK(alphas.back() == 1.0);
}

TEST_CASE("threshold optimization") {
  const std::vector<LabeledClimb> climbs{sim_climb(90.0, 5, "a"), sim_climb(90.0, 6, "b")};
  const SensorSite site = SensorSite::RightFoot;
  const ChannelModels m = fit_models(climbs, site);
  const ThresholdGrid grid = ThresholdGrid::log_spaced(0.5, 500.0, 5);

  SUBCASE("best cell equals the brute-force maximum") {
    double best = -2.0;
    for (double l0 : grid.lambda0) {
      for (double l1 : grid.lambda1) {
        best = std::max(best, performance_coefficient(direct_counts(climbs, site, m, {l0, l1, 0.4})));
      }
    }
    const ThresholdChoice c = optimize_thresholds(climbs, site, m, 0.4, grid);
    CHECK(c.score == doctest::Approx(best).epsilon(1e-12));
    CHECK(std::find(grid.lambda0.begin(), grid.lambda0.end(), c.lambda0) != grid.lambda0.end());
    CHECK(std::find(grid.lambda1.begin(), grid.lambda1.end(), c.lambda1) != grid.lambda1.end());
    const auto cells = evaluate_grid(climbs, site, m, 0.4, grid);
    REQUIRE(cells.size() == 25);
    for (const GridCell& cell : cells) {
      const Confusion d = direct_counts(climbs, site, m, {cell.lambda0, cell.lambda1, 0.4});
      CHECK(cell.counts.tp == d.tp);
      CHECK(cell.counts.fp == d.fp);
      CHECK(cell.counts.tn == d.tn);
      CHECK(cell.counts.fn == d.fn);
    }
  }
  SUBCASE("single-point grid") {
    const ThresholdGrid one{{7.0}, {11.0}};
    const ThresholdChoice c = optimize_thresholds(climbs, site, m, 0.5, one);
    CHECK(c.lambda0 == 7.0);
    CHECK(c.lambda1 == 11.0);
    CHECK(c.score == doctest::Approx(performance_coefficient(direct_counts(climbs, site, m, {7.0, 11.0, 0.5}))));
  }
  SUBCASE("ties prefer the larger thresholds") {
    const ThresholdGrid silent{{1e7, 2e7}, {1e7, 2e7}};
    const ThresholdChoice c = optimize_thresholds(climbs, site, m, 0.5, silent);
    CHECK(c.score == 0.0);
    CHECK(c.lambda1 == 2e7);
    CHECK(c.lambda0 == 2e7);
  }
  SUBCASE("generator equals model family") {
    CHECK(optimize_thresholds(climbs, site, m, 0.5, ThresholdGrid::standard()).score >= 0.9);
  }
  SUBCASE("alpha search") {
    const std::vector<double> zero{0.0};
    const AlphaChoice a0 = optimize_alpha(climbs, site, m, zero, grid);
    const ThresholdChoice t0 = optimize_thresholds(climbs, site, m, 0.0, grid);
    CHECK(a0.alpha == 0.0);
    CHECK(a0.score == t0.score);
    CHECK(a0.lambda0 == t0.lambda0);
    CHECK(a0.lambda1 == t0.lambda1);

    const auto alphas = standard_alpha_grid();
    const AlphaChoice best = optimize_alpha(climbs, site, m, alphas, grid);
    CHECK(best.per_alpha.size() == alphas.size());
    CHECK(best.score >= t0.score);
    CHECK(best.score >= optimize_thresholds(climbs, site, m, 1.0, grid).score);
  }
}

TEST_CASE("uninformative acceleration pushes alpha down") {
  auto models = default_simulation_models();
  for (auto& [site, m] : models) m.acc.h1 = m.acc.h0;
  const std::vector<LabeledClimb> climbs{sim_climb(90.0, 7, "a", models), sim_climb(90.0, 8, "b", models)};
  for (SensorSite site : {SensorSite::LeftHand, SensorSite::Pelvis}) {
    const ChannelModels m = fit_models(climbs, site);
    const AlphaChoice c = optimize_alpha(climbs, site, m, standard_alpha_grid(), ThresholdGrid::log_spaced(1.0, 1000.0, 10));
    CHECK(c.alpha <= 0.2);
  }
}

TEST_CASE("learn produces every sensor") {
  const std::vector<LabeledClimb> climbs{sim_climb(60.0, 9, "a"), sim_climb(60.0, 10, "b")};
  const LearnedModel model = learn(climbs, small_grids());
  CHECK(model.sensors.size() == 5);
  CHECK(model.climb_ids == std::vector<std::string>{"a", "b"});
  for (const auto& [site, m] : model.sensors) {
    CHECK(model.training_scores.at(site) > 0.9);
    m.config.validate();
  }
  const LearnedModel again = learn(climbs, small_grids());
  for (const auto& [site, m] : model.sensors) {
    CHECK(again.sensors.at(site).config.lambda0 == m.config.lambda0);
    CHECK(again.sensors.at(site).acc.h1.k == m.acc.h1.k);
  }
}

TEST_CASE("cross validation") {
  SUBCASE("needs two climbs") {
    const std::vector<LabeledClimb> one{sim_climb(60.0, 11, "a")};
    CHECK_THROWS_AS(cross_validate(one, small_grids()), Error);
  }
  SUBCASE("identical copies score their optimum") {
    const LabeledClimb c = sim_climb(60.0, 12, "a");
    LabeledClimb d = c;
    d.id = "b";
    const std::vector<LabeledClimb> climbs{c, d};
    const EvaluationReport rep = cross_validate(climbs, small_grids());
    for (const auto& [site, modes] : rep.entries) {
      for (const auto& [mode, r] : modes) CHECK(r.score == doctest::Approx(r.optimal_score).epsilon(1e-12));
    }
  }
  SUBCASE("simulated climbs from one generator") {
    const std::vector<LabeledClimb> climbs{sim_climb(90.0, 13, "a"), sim_climb(90.0, 14, "b"),
                                           sim_climb(90.0, 15, "c")};
    const EvaluationReport rep = cross_validate(climbs, small_grids());
    REQUIRE(rep.entries.size() == 5);
    for (const auto& [site, modes] : rep.entries) {
      REQUIRE(modes.size() == 3);
      CHECK(modes.at(AlphaMode::Acceleration).folds[0].trained.alpha == 1.0);
      CHECK(modes.at(AlphaMode::AngularVelocity).folds[0].trained.alpha == 0.0);
      for (const auto& [mode, r] : modes) {
        CHECK(r.folds.size() == 3);
        CHECK(std::abs(r.optimal_score - r.score) <= 0.1);
        for (const FoldResult& f : r.folds) CHECK(f.optimal_score >= f.score - 0.02);
      }
    }
  }
}
