// SPDX-License-Identifier: Apache-2.0

#include "climbsense/simulator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "climbsense/error.hpp"
#include "climbsense/sync.hpp"

namespace climbsense {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng Rng::substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b));
}

double Rng::uniform() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double Rng::gamma(double k, double theta) {
  if (k < 1.0) {
    const double g = gamma(k + 1.0, 1.0);
    return g * std::pow(uniform(), 1.0 / k) * theta;
  }
  const double d = k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * theta;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * theta;
  }
}

std::array<double, 3> Rng::unit_vector() {
  for (;;) {
    const double x = normal(), y = normal(), z = normal();
    const double n = std::sqrt(x * x + y * y + z * z);
    if (n > 1e-12) return {x / n, y / n, z / n};
  }
}

void StatePlan::validate() const {
  for (SensorSite site : kAllSites) {
    const auto it = sites.find(site);
    if (it == sites.end() || it->second.empty()) {
      throw Error(ErrorCode::InvalidPlan, "plan has no segments for " + std::string(site_code(site)));
    }
    for (const PlanSegment& seg : it->second) {
      if (!(seg.duration > 0.0) || !std::isfinite(seg.duration)) {
        throw Error(ErrorCode::InvalidPlan,
                    "non-positive segment duration for " + std::string(site_code(site)));
      }
    }
  }
}

double StatePlan::duration(SensorSite site) const {
  double d = 0.0;
  for (const PlanSegment& seg : sites.at(site)) d += seg.duration;
  return d;
}

StatePlan plan_from_script(std::span<const ScriptStep> script) {
  if (script.empty()) throw Error(ErrorCode::InvalidPlan, "empty script");
  StatePlan plan;
  plan.script.assign(script.begin(), script.end());
  auto append = [&](SensorSite site, double duration, State state) {
    auto& segs = plan.sites[site];
    if (!segs.empty() && segs.back().state == state) {
      segs.back().duration += duration;
    } else {
      segs.push_back({duration, state});
    }
  };
  for (std::size_t i = 0; i < script.size(); ++i) {
    const ScriptStep& step = script[i];
    if (!(step.duration > 0.0) || !std::isfinite(step.duration)) {
      throw Error(ErrorCode::InvalidPlan, "script step " + std::to_string(i) + " has no duration");
    }
    const bool any = step.limbs_moving[0] || step.limbs_moving[1] || step.limbs_moving[2] ||
                     step.limbs_moving[3];
    const bool limbs_expected = step.state == FullBodyState::HoldInteraction ||
                                step.state == FullBodyState::Traction;
    if (any != limbs_expected) {
      throw Error(ErrorCode::InvalidPlan, "script step " + std::to_string(i) + " (" +
                                              std::string(to_string(step.state)) +
                                              ") contradicts its moving limbs");
    }
    const bool pelvis = step.state == FullBodyState::PosturalRegulation ||
                        step.state == FullBodyState::Traction;
    append(SensorSite::Pelvis, step.duration, pelvis ? State::H1 : State::H0);
    for (std::size_t l = 0; l < 4; ++l) {
      append(kLimbs[l], step.duration, step.limbs_moving[l] ? State::H1 : State::H0);
    }
  }
  return plan;
}

StatePlan random_plan(double duration, std::uint64_t seed) {
  if (!(duration > 0.0)) throw Error(ErrorCode::InvalidPlan, "plan duration must be positive");
  Rng rng = Rng::substream(seed, 0x706c616e);
  std::vector<ScriptStep> script;
  double total = 0.0;
  while (total < duration) {
    ScriptStep step;
    step.duration = std::min(rng.uniform(1.0, 4.0), duration - total);
    const double u = rng.uniform();
    step.state = u < 0.15   ? FullBodyState::Immobility
                 : u < 0.3  ? FullBodyState::PosturalRegulation
                 : u < 0.7  ? FullBodyState::HoldInteraction
                            : FullBodyState::Traction;
    if (step.state == FullBodyState::HoldInteraction || step.state == FullBodyState::Traction) {
      step.limbs_moving[rng.next() % 4] = true;
      if (rng.uniform() < 0.3) step.limbs_moving[rng.next() % 4] = true;
    }
    total += step.duration;
    script.push_back(step);
  }
  return plan_from_script(script);
}

std::map<SensorSite, ChannelModels> default_simulation_models() {
  std::map<SensorSite, ChannelModels> m;
  const ChannelModels hand{{{1.2, 0.08}, {2.0, 1.6}}, {{1.5, 0.02}, {2.2, 0.7}}};
  const ChannelModels foot{{{1.1, 0.07}, {1.8, 1.8}}, {{1.4, 0.02}, {2.0, 0.8}}};
  const ChannelModels pelvis{{{1.3, 0.06}, {1.8, 0.9}}, {{1.6, 0.015}, {2.0, 0.35}}};
  m[SensorSite::LeftHand] = hand;
  m[SensorSite::RightHand] = hand;
  m[SensorSite::LeftFoot] = foot;
  m[SensorSite::RightFoot] = foot;
  m[SensorSite::Pelvis] = pelvis;
  return m;
}

LabeledClimb simulate(const StatePlan& plan, const std::map<SensorSite, ChannelModels>& models,
                      const SimulationOptions& options, const std::string& id) {
  plan.validate();
  if (!(options.sample_rate > 0.0)) throw Error(ErrorCode::InvalidPlan, "sample rate must be positive");
  const double dt = 1.0 / options.sample_rate;
  const Vec3 earth_field{std::cos(std::numbers::pi / 3.0), 0.0, -std::sin(std::numbers::pi / 3.0)};

  LabeledClimb climb;
  climb.id = id;
  for (SensorSite site : kAllSites) {
    const auto mit = models.find(site);
    if (mit == models.end()) {
      throw Error(ErrorCode::InvalidPlan, "no generator model for " + std::string(site_code(site)));
    }
    mit->second.acc.validate();
    mit->second.ang.validate();

    AnnotationTrack track;
    track.site = site;
    double t = 0.0;
    for (const PlanSegment& seg : plan.sites.at(site)) {
      track.intervals.push_back({t, t + seg.duration, seg.state});
      t += seg.duration;
    }
    const auto n = static_cast<std::size_t>(std::llround(t * options.sample_rate));
    const Raster truth = rasterize(track, 0.0, dt, n);
    climb.annotations[site] = track;

    const auto code = static_cast<std::uint64_t>(site);
    Rng acc_rng = Rng::substream(options.seed, code, 1);
    Rng ang_rng = Rng::substream(options.seed, code, 2);
    Rng dir_rng = Rng::substream(options.seed, code, 3);

    SensorSignals sig{{0.0, dt, {}}, {0.0, dt, {}}};
    sig.acc.values.reserve(n);
    sig.ang.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool mobile = truth[i].value_or(State::H0) == State::H1;
      const ChannelModels& cm = mit->second;
      const GammaParams& pa = mobile ? cm.acc.h1 : cm.acc.h0;
      const GammaParams& pw = mobile ? cm.ang.h1 : cm.ang.h0;
      sig.acc.values.push_back(acc_rng.gamma(pa.k, pa.theta));
      sig.ang.values.push_back(ang_rng.gamma(pw.k, pw.theta));
    }

    if (options.triaxial || (options.trajectory && site == SensorSite::Pelvis)) {
      ImuRecording rec;
      rec.site = site;
      rec.sample_rate = options.sample_rate;
      rec.samples.reserve(n);
      const auto q4 = dir_rng.unit_vector();
      Quaternion q = Quaternion{dir_rng.normal(), q4[0], q4[1], q4[2]}.normalized();
      TrajectorySeries traj{0.0, dt, {}};
      std::array<double, 2> pos{0.0, 0.0};
      std::array<double, 2> vel{0.0, 0.0};
      double phi = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto wu = dir_rng.unit_vector();
        const Vec3 gyro = Vec3{wu[0], wu[1], wu[2]} * sig.ang.values[i];
        if (i > 0) q = (q * Quaternion::from_rotation_vector(gyro * dt)).normalized();
        Vec3 a_earth;
        if (site == SensorSite::Pelvis) {
          // Direction wanders slowly (decorrelates over about half a second); the norm stays iid.
          phi = i == 0 ? dir_rng.uniform(0.0, 2.0 * std::numbers::pi) : phi + 0.15 * dir_rng.normal();
          a_earth = Vec3{std::cos(phi), 0.0, std::sin(phi)} * sig.acc.values[i];
        } else {
          const auto au = dir_rng.unit_vector();
          a_earth = Vec3{au[0], au[1], au[2]} * sig.acc.values[i];
        }
        const Vec3 accel = q.inverse_rotate(a_earth + Vec3{0.0, 0.0, kGravity});
        const Vec3 mag = q.inverse_rotate(earth_field);
        rec.samples.push_back({dt * static_cast<double>(i), accel, gyro, mag});

        // Second differences of the positions reproduce a_earth exactly.
        if (i > 0) {
          pos[0] += vel[0] * dt;
          pos[1] += vel[1] * dt;
        }
        vel[0] += a_earth.x * dt;
        vel[1] += a_earth.z * dt;
        traj.positions.push_back(pos);
      }
      if (options.triaxial) climb.recordings[site] = std::move(rec);
      if (options.trajectory && site == SensorSite::Pelvis) climb.pelvis_trajectory = std::move(traj);
    }
    climb.signals[site] = std::move(sig);
  }
  return climb;
}

LabeledClimb inject_delay(LabeledClimb climb, double delay) {
  for (auto& [site, track] : climb.annotations) track = shift_annotations(track, delay);
  if (climb.pelvis_trajectory) climb.pelvis_trajectory->t0 += delay;
  return climb;
}

}  // namespace climbsense
