// SPDX-License-Identifier: Apache-2.0

#include "climbsense/learning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "climbsense/error.hpp"

namespace climbsense {

ChannelModels fit_models(std::span<const LabeledClimb> climbs, SensorSite site) {
  std::array<std::vector<double>, 2> acc;
  std::array<std::vector<double>, 2> ang;
  for (const LabeledClimb& climb : climbs) {
    const SensorSignals& s = climb.signals_of(site);
    if (s.acc.size() != s.ang.size()) {
      throw Error(ErrorCode::LengthMismatch, "climb " + climb.id + ": channel lengths differ");
    }
    const Raster truth = climb.truth(site);
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (!truth[i]) continue;
      const auto idx = static_cast<std::size_t>(*truth[i]);
      acc[idx].push_back(s.acc.values[i]);
      ang[idx].push_back(s.ang.values[i]);
    }
  }
  for (State st : {State::H0, State::H1}) {
    const std::size_t n = acc[static_cast<std::size_t>(st)].size();
    if (n < kMinFitSamples) {
      std::ostringstream msg;
      msg << "site " << site_code(site) << ": state " << to_string(st) << " has " << n
          << " labeled samples, need " << kMinFitSamples;
      throw Error(ErrorCode::MissingState, msg.str());
    }
  }
  return {{fit_mle(acc[0]), fit_mle(acc[1])}, {fit_mle(ang[0]), fit_mle(ang[1])}};
}

Confusion confusion(std::span<const State> pred, const Raster& truth) {
  if (pred.size() != truth.size()) {
    std::ostringstream msg;
    msg << "prediction has " << pred.size() << " samples, truth has " << truth.size();
    throw Error(ErrorCode::LengthMismatch, msg.str());
  }
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!truth[i]) continue;
    const bool p = pred[i] == State::H1;
    if (*truth[i] == State::H1) {
      p ? ++c.tp : ++c.fn;
    } else {
      p ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double performance_coefficient(const Confusion& c) {
  if (c.positives() == 0 || c.negatives() == 0) {
    std::ostringstream msg;
    msg << "truth has P=" << c.positives() << ", N=" << c.negatives();
    throw Error(ErrorCode::DegenerateTruth, msg.str());
  }
  return static_cast<double>(c.tp) / static_cast<double>(c.positives()) -
         static_cast<double>(c.fp) / static_cast<double>(c.negatives());
}

double performance_coefficient(const BinaryStateSeries& pred, const AnnotationTrack& truth) {
  return performance_coefficient(
      confusion(pred.states, rasterize(truth, pred.t0, pred.dt, pred.size())));
}

ThresholdGrid ThresholdGrid::log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
    throw Error(ErrorCode::InvalidParams, "threshold grid needs 0 < lo <= hi and count > 0");
  }
  std::vector<double> v(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = count == 1 ? lo
                      : std::exp(a + (b - a) * static_cast<double>(i) /
                                         static_cast<double>(count - 1));
  }
  v.front() = lo;
  v.back() = count == 1 ? lo : hi;
  return {v, v};
}

ThresholdGrid ThresholdGrid::standard() { return log_spaced(0.1, 1000.0, 20); }

std::vector<double> standard_alpha_grid() {
  std::vector<double> a;
  for (int i = 0; i <= 10; ++i) a.push_back(static_cast<double>(i) / 10.0);
  return a;
}

std::string_view to_string(AlphaMode mode) {
  switch (mode) {
    case AlphaMode::Acceleration: return "accel";
    case AlphaMode::AngularVelocity: return "angvel";
    case AlphaMode::Optimal: return "optimal";
  }
  return "?";
}

namespace {

struct PreparedClimb {
  std::vector<double> l_acc;
  std::vector<double> l_ang;
  Raster truth;
};

std::vector<PreparedClimb> prepare(std::span<const LabeledClimb> climbs, SensorSite site,
                                   const ChannelModels& models) {
  std::vector<PreparedClimb> out;
  out.reserve(climbs.size());
  for (const LabeledClimb& climb : climbs) {
    const SensorSignals& s = climb.signals_of(site);
    if (s.acc.size() != s.ang.size()) {
      throw Error(ErrorCode::LengthMismatch, "climb " + climb.id + ": channel lengths differ");
    }
    out.push_back({log_likelihood_ratios(s.acc, models.acc), log_likelihood_ratios(s.ang, models.ang),
                   climb.truth(site)});
  }
  return out;
}

std::vector<GridCell> evaluate_prepared(std::span<const PreparedClimb> climbs, double alpha,
                                        const ThresholdGrid& grid) {
  if (grid.lambda0.empty() || grid.lambda1.empty()) {
    throw Error(ErrorCode::InvalidParams, "threshold grid is empty");
  }
  std::vector<std::vector<double>> increments;
  increments.reserve(climbs.size());
  std::size_t longest = 0;
  for (const PreparedClimb& c : climbs) {
    increments.push_back(fuse_increments(c.l_acc, c.l_ang, alpha));
    longest = std::max(longest, c.truth.size());
  }
  std::vector<State> labels(longest);

  std::vector<GridCell> cells;
  cells.reserve(grid.lambda0.size() * grid.lambda1.size());
  for (double l0 : grid.lambda0) {
    for (double l1 : grid.lambda1) {
      GridCell cell{l0, l1, {}, 0.0};
      for (std::size_t k = 0; k < climbs.size(); ++k) {
        std::span<State> out(labels.data(), increments[k].size());
        detect_onset_labels(increments[k], l0, l1, State::H0, out);
        cell.counts += confusion(out, climbs[k].truth);
      }
      cell.score = performance_coefficient(cell.counts);
      cells.push_back(cell);
    }
  }
  return cells;
}

ThresholdChoice best_cell(std::span<const GridCell> cells) {
  const GridCell* best = &cells.front();
  for (const GridCell& c : cells) {
    if (c.score > best->score ||
        (c.score == best->score &&
         (c.lambda1 > best->lambda1 || (c.lambda1 == best->lambda1 && c.lambda0 > best->lambda0)))) {
      best = &c;
    }
  }
  return {best->lambda0, best->lambda1, best->score};
}

AlphaChoice optimize_prepared(std::span<const PreparedClimb> climbs,
                              std::span<const double> alpha_grid, const ThresholdGrid& grid) {
  if (alpha_grid.empty()) throw Error(ErrorCode::InvalidParams, "alpha grid is empty");
  AlphaChoice choice;
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    const ThresholdChoice t = best_cell(evaluate_prepared(climbs, alpha_grid[i], grid));
    choice.per_alpha.push_back(t);
    if (i == 0 || t.score > choice.score) {
      choice.alpha = alpha_grid[i];
      choice.lambda0 = t.lambda0;
      choice.lambda1 = t.lambda1;
      choice.score = t.score;
    }
  }
  return choice;
}

double score_prepared(const PreparedClimb& climb, const DetectionConfig& config) {
  const auto inc = fuse_increments(climb.l_acc, climb.l_ang, config.alpha);
  std::vector<State> labels(inc.size());
  detect_onset_labels(inc, config.lambda0, config.lambda1, State::H0, labels);
  return performance_coefficient(confusion(labels, climb.truth));
}

/// Per-mode detector configurations from one alpha search.
std::map<AlphaMode, DetectionConfig> mode_configs(std::span<const PreparedClimb> climbs,
                                                  const LearningGrids& grids,
                                                  std::map<AlphaMode, double>* scores) {
  const AlphaChoice best = optimize_prepared(climbs, grids.alphas, grids.thresholds);
  std::map<AlphaMode, DetectionConfig> out;
  auto fixed = [&](double alpha, AlphaMode mode) {
    ThresholdChoice t;
    const auto it = std::find(grids.alphas.begin(), grids.alphas.end(), alpha);
    if (it != grids.alphas.end()) {
      t = best.per_alpha[static_cast<std::size_t>(it - grids.alphas.begin())];
    } else {
      t = best_cell(evaluate_prepared(climbs, alpha, grids.thresholds));
    }
    out[mode] = {t.lambda0, t.lambda1, alpha};
    if (scores) (*scores)[mode] = t.score;
  };
  fixed(1.0, AlphaMode::Acceleration);
  fixed(0.0, AlphaMode::AngularVelocity);
  out[AlphaMode::Optimal] = {best.lambda0, best.lambda1, best.alpha};
  if (scores) (*scores)[AlphaMode::Optimal] = best.score;
  return out;
}

}  // namespace

std::vector<GridCell> evaluate_grid(std::span<const LabeledClimb> climbs, SensorSite site,
                                    const ChannelModels& models, double alpha,
                                    const ThresholdGrid& grid) {
  const auto prepared = prepare(climbs, site, models);
  return evaluate_prepared(prepared, alpha, grid);
}

ThresholdChoice optimize_thresholds(std::span<const LabeledClimb> climbs, SensorSite site,
                                    const ChannelModels& models, double alpha,
                                    const ThresholdGrid& grid) {
  return best_cell(evaluate_grid(climbs, site, models, alpha, grid));
}

AlphaChoice optimize_alpha(std::span<const LabeledClimb> climbs, SensorSite site,
                           const ChannelModels& models, std::span<const double> alpha_grid,
                           const ThresholdGrid& grid) {
  const auto prepared = prepare(climbs, site, models);
  return optimize_prepared(prepared, alpha_grid, grid);
}

SensorModel learn_sensor(std::span<const LabeledClimb> climbs, SensorSite site,
                         const LearningGrids& grids, double* training_score) {
  const ChannelModels models = fit_models(climbs, site);
  const auto prepared = prepare(climbs, site, models);
  const AlphaChoice best = optimize_prepared(prepared, grids.alphas, grids.thresholds);
  if (training_score) *training_score = best.score;
  return {models.acc, models.ang, {best.lambda0, best.lambda1, best.alpha}};
}

LearnedModel learn(std::span<const LabeledClimb> climbs, const LearningGrids& grids) {
  if (climbs.empty()) throw Error(ErrorCode::InvalidInput, "no climbs to learn from");
  LearnedModel out;
  out.grids = grids;
  for (const LabeledClimb& c : climbs) out.climb_ids.push_back(c.id);
  for (SensorSite site : kAllSites) {
    double score = 0.0;
    out.sensors[site] = learn_sensor(climbs, site, grids, &score);
    out.training_scores[site] = score;
  }
  return out;
}

EvaluationReport cross_validate(std::span<const LabeledClimb> climbs, const LearningGrids& grids) {
  if (climbs.size() < 2) {
    throw Error(ErrorCode::InvalidInput, "cross-validation needs at least two climbs");
  }
  EvaluationReport report;
  for (SensorSite site : kAllSites) {
    auto& entry = report.entries[site];
    for (std::size_t k = 0; k < climbs.size(); ++k) {
      std::vector<LabeledClimb> train;
      for (std::size_t j = 0; j < climbs.size(); ++j) {
        if (j != k) train.push_back(climbs[j]);
      }
      const std::span<const LabeledClimb> held(&climbs[k], 1);

      const ChannelModels trained_models = fit_models(train, site);
      const auto trained_configs = mode_configs(prepare(train, site, trained_models), grids, nullptr);
      const auto held_with_trained = prepare(held, site, trained_models);

      const ChannelModels own_models = fit_models(held, site);
      std::map<AlphaMode, double> own_scores;
      const auto own_configs = mode_configs(prepare(held, site, own_models), grids, &own_scores);

      for (AlphaMode mode : kAlphaModes) {
        FoldResult fold;
        fold.held_out = climbs[k].id;
        fold.trained = trained_configs.at(mode);
        fold.optimal = own_configs.at(mode);
        fold.score = score_prepared(held_with_trained.front(), fold.trained);
        fold.optimal_score = own_scores.at(mode);
        entry[mode].folds.push_back(fold);
      }
    }
    for (auto& [mode, result] : entry) {
      double s = 0.0;
      double o = 0.0;
      for (const FoldResult& f : result.folds) {
        s += f.score;
        o += f.optimal_score;
      }
      result.score = s / static_cast<double>(result.folds.size());
      result.optimal_score = o / static_cast<double>(result.folds.size());
    }
  }
  return report;
}

}  // namespace climbsense
