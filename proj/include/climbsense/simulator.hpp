// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "climbsense/classifier.hpp"
#include "climbsense/climb.hpp"
#include "climbsense/learning.hpp"

namespace climbsense {

/// Seeded random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the C++ standard; all variates are derived here
/// rather than through the implementation-defined std distributions, so
/// draws are identical across platforms.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, a, b), keyed through splitmix64.
  static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

  std::uint64_t next() { return engine_(); }
  double uniform();  // (0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();   // N(0, 1), Marsaglia polar method
  /// Marsaglia-Tsang squeeze for k >= 1; k < 1 boosted via Gamma(k + 1) U^(1/k).
  double gamma(double k, double theta);
  std::array<double, 3> unit_vector();

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct PlanSegment {
  double duration = 0.0;
  State state = State::H0;
};

/// One step of a full-body script; limbs_moving follows kLimbs (rh, lh, rf, lf).
struct ScriptStep {
  double duration = 0.0;
  FullBodyState state = FullBodyState::Immobility;
  std::array<bool, 4> limbs_moving{};
};

struct StatePlan {
  std::map<SensorSite, std::vector<PlanSegment>> sites;
  std::vector<ScriptStep> script;  // empty when the plan was given per site

  /// Throws InvalidPlan on empty plans, missing sites or non-positive durations.
  void validate() const;
  double duration(SensorSite site) const;
};

/// Per-site plans consistent with the script's full-body states. Throws
/// InvalidPlan when a step's limb set contradicts its state.
StatePlan plan_from_script(std::span<const ScriptStep> script);

/// Random script of the given length: 1 to 4 s steps over all four full-body
/// states.
StatePlan random_plan(double duration, std::uint64_t seed);

/// Generator models used by the toolkit's synthetic climbs.
std::map<SensorSite, ChannelModels> default_simulation_models();

struct SimulationOptions {
  double sample_rate = 100.0;
  std::uint64_t seed = 1;
  bool triaxial = false;    // also emit raw accel/gyro/mag recordings
  bool trajectory = false;  // also emit the pelvis wall-plane trajectory
};

/// Synthetic labeled climb. Annotations mirror the plan; each sample's norms
/// are drawn from the Gamma of the state its annotation assigns. Triaxial
/// output rotates the sensor by the drawn angular velocity and places the
/// drawn linear acceleration in a random Earth-frame direction. The pelvis
/// direction stays in the x-z wall plane and drifts slowly between samples.
LabeledClimb simulate(const StatePlan& plan, const std::map<SensorSite, ChannelModels>& models,
                      const SimulationOptions& options, const std::string& id = "sim");

/// Shifts annotations (and the video trajectory, which shares their clock)
/// by delay; recordings keep their clock.
LabeledClimb inject_delay(LabeledClimb climb, double delay);

}  // namespace climbsense
