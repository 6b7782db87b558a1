// SPDX-License-Identifier: Apache-2.0

#include "climbsense/sync.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "climbsense/error.hpp"

namespace climbsense {

namespace {

constexpr double kMinOverlapSeconds = 10.0;

}  // namespace

SignalSeries moving_average(const SignalSeries& s, double window) {
  const auto width = std::max<long>(1, std::lround(window / s.dt));
  const long half_lo = (width - 1) / 2;
  const long half_hi = width - 1 - half_lo;
  const long n = static_cast<long>(s.size());
  SignalSeries out{s.t0, s.dt, std::vector<double>(s.size())};
  if (n == 0) return out;
  // Point reflection about each endpoint: x[-j] = 2 x[0] - x[j]. Linear trends
  // pass through unchanged, so the ends carry no velocity bias.
  const auto& v = s.values;
  auto ext = [&](long j) {
    if (j < 0) return 2.0 * v.front() - v[static_cast<std::size_t>(std::min(-j, n - 1))];
    if (j >= n) return 2.0 * v.back() - v[static_cast<std::size_t>(std::max(2 * (n - 1) - j, 0L))];
    return v[static_cast<std::size_t>(j)];
  };
  double sum = 0.0;
  for (long j = -half_lo; j <= half_hi; ++j) sum += ext(j);
  for (long i = 0; i < n; ++i) {
    out.values[static_cast<std::size_t>(i)] = sum / static_cast<double>(width);
    sum += ext(i + half_hi + 1) - ext(i - half_lo);
  }
  return out;
}

namespace {

SignalSeries second_difference(const SignalSeries& p) {
  const std::size_t n = p.size();
  const double h2 = p.dt * p.dt;
  const auto& v = p.values;
  SignalSeries out{p.t0, p.dt, std::vector<double>(n)};
  for (std::size_t i = 1; i + 1 < n; ++i) out.values[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
  // One-sided, second order: (2 f0 - 5 f1 + 4 f2 - f3) / h^2
  out.values[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2;
  out.values[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2;
  return out;
}

}  // namespace

PlanarAcceleration trajectory_to_acceleration(const TrajectorySeries& traj, double smooth_window) {
  if (traj.size() < 5) {
    std::ostringstream msg;
    msg << "trajectory needs at least 5 samples, got " << traj.size();
    throw Error(ErrorCode::TooFewSamples, msg.str());
  }
  if (!(traj.dt > 0.0)) throw Error(ErrorCode::InvalidInput, "trajectory dt must be positive");
  SignalSeries x{traj.t0, traj.dt, {}};
  SignalSeries y{traj.t0, traj.dt, {}};
  for (const auto& p : traj.positions) {
    x.values.push_back(p[0]);
    y.values.push_back(p[1]);
  }
  return {second_difference(moving_average(x, smooth_window)),
          second_difference(moving_average(y, smooth_window))};
}

SignalSeries resample(const SignalSeries& s, double dt) {
  if (s.size() < 2 || std::abs(dt - s.dt) <= 1e-12 * s.dt) return s;
  SignalSeries out{s.t0, dt, {}};
  const double span = s.dt * static_cast<double>(s.size() - 1);
  for (std::size_t k = 0;; ++k) {
    const double t = dt * static_cast<double>(k);
    if (t > span + 1e-9 * dt) break;
    const double pos = t / s.dt;
    const auto i = std::min(static_cast<std::size_t>(pos), s.size() - 2);
    const double f = pos - static_cast<double>(i);
    out.values.push_back(s.values[i] + (s.values[i + 1] - s.values[i]) * f);
  }
  return out;
}

namespace {

struct LagRange {
  long first = 0;
  long last = -1;
  double offset = 0.0;  // b.t0 - a.t0
};

LagRange lag_range(const SignalSeries& a, const SignalSeries& b, double max_lag) {
  if (std::abs(a.dt - b.dt) > 1e-9 * a.dt) {
    throw Error(ErrorCode::InvalidInput, "cross-correlated series must share the sample period");
  }
  LagRange r;
  r.offset = b.t0 - a.t0;
  // delay = offset + lag * dt
  r.first = static_cast<long>(std::ceil((-max_lag - r.offset) / a.dt - 1e-9));
  r.last = static_cast<long>(std::floor((max_lag - r.offset) / a.dt + 1e-9));
  if (r.first > r.last) throw Error(ErrorCode::InsufficientOverlap, "no candidate delay in range");

  const long na = static_cast<long>(a.size());
  const long nb = static_cast<long>(b.size());
  const auto min_overlap = static_cast<long>(std::ceil(kMinOverlapSeconds / a.dt - 1e-9));
  for (long lag : {r.first, r.last}) {
    const long lo = std::max(0L, -lag);
    const long hi = std::min(na, nb - lag);
    if (hi - lo < min_overlap) {
      std::ostringstream msg;
      msg << "delay " << r.offset + static_cast<double>(lag) * a.dt << " s overlaps "
          << std::max(0L, hi - lo) * a.dt << " s, need " << kMinOverlapSeconds << " s";
      throw Error(ErrorCode::InsufficientOverlap, msg.str());
    }
  }
  return r;
}

double pearson_at(const std::vector<double>& a, const std::vector<double>& b, long lag) {
  const long lo = std::max(0L, -lag);
  const long hi = std::min(static_cast<long>(a.size()), static_cast<long>(b.size()) - lag);
  const double n = static_cast<double>(hi - lo);
  double sa = 0.0, sb = 0.0;
  for (long i = lo; i < hi; ++i) {
    sa += a[static_cast<std::size_t>(i)];
    sb += b[static_cast<std::size_t>(i + lag)];
  }
  const double ma = sa / n;
  const double mb = sb / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (long i = lo; i < hi; ++i) {
    const double da = a[static_cast<std::size_t>(i)] - ma;
    const double db = b[static_cast<std::size_t>(i + lag)] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

DelayEstimate pick_peak(const std::vector<CorrelationPoint>& profile, const std::vector<long>& lags) {
  DelayEstimate best;
  best.correlation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const auto& p = profile[i];
    if (p.correlation > best.correlation ||
        (p.correlation == best.correlation && std::abs(p.delay) < std::abs(best.delay))) {
      best = {p.delay, p.correlation, lags[i]};
    }
  }
  return best;
}

}  // namespace

std::vector<CorrelationPoint> correlation_profile(const SignalSeries& a, const SignalSeries& b,
                                                  double max_lag) {
  const LagRange r = lag_range(a, b, max_lag);
  std::vector<CorrelationPoint> out;
  for (long lag = r.first; lag <= r.last; ++lag) {
    out.push_back({r.offset + static_cast<double>(lag) * a.dt, pearson_at(a.values, b.values, lag)});
  }
  return out;
}

DelayEstimate estimate_delay(const SignalSeries& a, const SignalSeries& b, double max_lag) {
  const std::pair<SignalSeries, SignalSeries> one{a, b};
  return estimate_delay(std::span(&one, 1), max_lag);
}

DelayEstimate estimate_delay(std::span<const std::pair<SignalSeries, SignalSeries>> channels,
                             double max_lag) {
  if (channels.empty()) throw Error(ErrorCode::InvalidInput, "no channels to correlate");
  const auto& [a0, b0] = channels.front();
  const LagRange r = lag_range(a0, b0, max_lag);
  for (const auto& [a, b] : channels) {
    if (std::abs(a.t0 - a0.t0) > 1e-9 || std::abs(b.t0 - b0.t0) > 1e-9 ||
        std::abs(a.dt - a0.dt) > 1e-12) {
      throw Error(ErrorCode::InvalidInput, "channel pairs must share their time grids");
    }
    lag_range(a, b, max_lag);
  }
  std::vector<CorrelationPoint> profile;
  std::vector<long> lags;
  const double k = static_cast<double>(channels.size());
  for (long lag = r.first; lag <= r.last; ++lag) {
    double sum = 0.0;
    for (const auto& [a, b] : channels) sum += pearson_at(a.values, b.values, lag);
    profile.push_back({r.offset + static_cast<double>(lag) * a0.dt, sum / k});
    lags.push_back(lag);
  }
  return pick_peak(profile, lags);
}

AnnotationTrack shift_annotations(const AnnotationTrack& track, double delay,
                                  std::optional<std::pair<double, double>> span) {
  AnnotationTrack out;
  out.site = track.site;
  for (Interval iv : track.intervals) {
    iv.start += delay;
    iv.end += delay;
    if (span) {
      iv.start = std::max(iv.start, span->first);
      iv.end = std::min(iv.end, span->second);
      if (!(iv.end > iv.start)) continue;
    }
    out.intervals.push_back(iv);
  }
  return out;
}

PelvisSync synchronize_pelvis(const ImuRecording& pelvis, const TrajectorySeries& trajectory,
                              const PelvisSyncConfig& config) {
  if (pelvis.samples.empty()) throw Error(ErrorCode::EmptyRecording, "pelvis recording is empty");
  OrientationConfig oc;
  oc.beta = config.beta;
  const auto acc = earth_acceleration(pelvis, oc);

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const Vec3& v : acc) {
    sxx += v.x * v.x;
    sxy += v.x * v.y;
    syy += v.y * v.y;
  }
  const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  const double ux = std::cos(angle), uy = std::sin(angle);
  const double dt = 1.0 / pelvis.sample_rate;
  const double t0 = pelvis.samples.front().t;
  SignalSeries lateral{t0, dt, {}}, vertical{t0, dt, {}};
  lateral.values.reserve(acc.size());
  vertical.values.reserve(acc.size());
  for (const Vec3& v : acc) {
    lateral.values.push_back(ux * v.x + uy * v.y);
    vertical.values.push_back(v.z);
  }

  PelvisSync out;
  out.sensor_lateral = moving_average(lateral, config.smooth_window);
  out.sensor_vertical = moving_average(vertical, config.smooth_window);
  const PlanarAcceleration video = trajectory_to_acceleration(trajectory, config.smooth_window);
  out.video_lateral = resample(video.lateral, dt);
  out.video_vertical = resample(video.vertical, dt);

  bool first = true;
  for (double sign : {1.0, -1.0}) {
    SignalSeries l = out.sensor_lateral;
    for (double& x : l.values) x *= sign;
    const std::vector<std::pair<SignalSeries, SignalSeries>> pairs = {{l, out.video_lateral},
                                                                      {out.sensor_vertical, out.video_vertical}};
    const DelayEstimate e = estimate_delay(pairs, config.max_lag);
    if (first || e.correlation > out.estimate.correlation) {
      out.estimate = e;
      if (!first) out.sensor_lateral = std::move(l);
    }
    first = false;
  }
  return out;
}

}  // namespace climbsense
