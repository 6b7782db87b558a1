// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "climbsense/climb.hpp"
#include "climbsense/cusum.hpp"

namespace climbsense {

struct ChannelModels {
  HypothesisModel acc;
  HypothesisModel ang;
};

/// Fits H0 and H1 Gamma models of both channels of one site on the pooled
/// annotated samples of all climbs. Throws MissingState when a state has
/// fewer than 30 labeled samples.
ChannelModels fit_models(std::span<const LabeledClimb> climbs, SensorSite site);

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return tn + fp; }
  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
};

/// Counts over samples with a known truth label.
Confusion confusion(std::span<const State> pred, const Raster& truth);

/// TP/P - FP/N. Throws DegenerateTruth when P or N is zero.
double performance_coefficient(const Confusion& c);
double performance_coefficient(const BinaryStateSeries& pred, const AnnotationTrack& truth);

struct ThresholdGrid {
  std::vector<double> lambda0;
  std::vector<double> lambda1;

  /// count values per axis, log-spaced over [lo, hi].
  static ThresholdGrid log_spaced(double lo, double hi, std::size_t count);
  /// 20 log-spaced values per axis over [0.1, 1000].
  static ThresholdGrid standard();
};

/// {0, 0.1, ..., 1.0}
std::vector<double> standard_alpha_grid();

struct LearningGrids {
  ThresholdGrid thresholds = ThresholdGrid::standard();
  std::vector<double> alphas = standard_alpha_grid();
};

struct GridCell {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  Confusion counts;
  double score = 0.0;
};

struct ThresholdChoice {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double score = 0.0;
};

struct AlphaChoice {
  double alpha = 0.0;
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double score = 0.0;
  std::vector<ThresholdChoice> per_alpha;  // aligned with the alpha grid
};

/// Detection + scoring of every (lambda0, lambda1) cell, lambda0-major. Each
/// climb is detected separately (from H0) and the confusion counts pooled.
std::vector<GridCell> evaluate_grid(std::span<const LabeledClimb> climbs, SensorSite site,
                                    const ChannelModels& models, double alpha,
                                    const ThresholdGrid& grid);

/// Best cell; ties go to the larger lambda1, then the larger lambda0.
ThresholdChoice optimize_thresholds(std::span<const LabeledClimb> climbs, SensorSite site,
                                    const ChannelModels& models, double alpha,
                                    const ThresholdGrid& grid);

/// Best alpha over the grid, each with its optimal thresholds. Ties keep the
/// earlier grid entry.
AlphaChoice optimize_alpha(std::span<const LabeledClimb> climbs, SensorSite site,
                           const ChannelModels& models, std::span<const double> alpha_grid,
                           const ThresholdGrid& grid);

/// fit_models + optimize_alpha for one site.
SensorModel learn_sensor(std::span<const LabeledClimb> climbs, SensorSite site,
                         const LearningGrids& grids, double* training_score = nullptr);

/// Learned detector set for all five sites plus provenance.
struct LearnedModel {
  std::map<SensorSite, SensorModel> sensors;
  std::map<SensorSite, double> training_scores;
  std::vector<std::string> climb_ids;
  LearningGrids grids;
};

LearnedModel learn(std::span<const LabeledClimb> climbs, const LearningGrids& grids = {});

/// Alpha modes reported by cross-validation.
enum class AlphaMode { Acceleration, AngularVelocity, Optimal };
inline constexpr std::array<AlphaMode, 3> kAlphaModes = {
    AlphaMode::Acceleration, AlphaMode::AngularVelocity, AlphaMode::Optimal};
std::string_view to_string(AlphaMode mode);

struct FoldResult {
  std::string held_out;
  double score = 0.0;          // trained on the other climbs
  double optimal_score = 0.0;  // trained on the held-out climb itself
  DetectionConfig trained;
  DetectionConfig optimal;
};

struct ModeResult {
  double score = 0.0;          // mean over folds
  double optimal_score = 0.0;  // mean over folds
  std::vector<FoldResult> folds;
};

struct EvaluationReport {
  std::map<SensorSite, std::map<AlphaMode, ModeResult>> entries;
};

/// Leave-one-climb-out evaluation over every site and alpha mode. Needs at
/// least two climbs.
EvaluationReport cross_validate(std::span<const LabeledClimb> climbs, const LearningGrids& grids = {});

}  // namespace climbsense
