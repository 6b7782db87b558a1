// SPDX-License-Identifier: Apache-2.0

#include "climbsense/orientation.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include "climbsense/error.hpp"

namespace climbsense {

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) return identity();
  const double s = std::sin(0.5 * angle) / n;
  return {std::cos(0.5 * angle), axis.x * s, axis.y * s, axis.z * s};
}

Quaternion Quaternion::from_rotation_vector(const Vec3& v) {
  return from_axis_angle(v, v.norm());
}

Quaternion Quaternion::operator*(const Quaternion& o) const {
  return {w * o.w - x * o.x - y * o.y - z * o.z,
          w * o.x + x * o.w + y * o.z - z * o.y,
          w * o.y - x * o.z + y * o.w + z * o.x,
          w * o.z + x * o.y - y * o.x + z * o.w};
}

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (n == 0.0) return identity();
  return {w / n, x / n, y / n, z / n};
}

Vec3 Quaternion::rotate(const Vec3& v) const {
  // v + 2 u x (u x v + w v), u = vector part
  const Vec3 u{x, y, z};
  const Vec3 t = u.cross(v) * 2.0;
  return v + t * w + u.cross(t);
}

Vec3 Quaternion::inverse_rotate(const Vec3& v) const { return conjugate().rotate(v); }

double angular_distance(const Quaternion& a, const Quaternion& b) {
  // atan2 form keeps resolution near zero, where acos of the dot product does not.
  const Quaternion r = a.conjugate() * b;
  return 2.0 * std::atan2(std::sqrt(r.x * r.x + r.y * r.y + r.z * r.z), std::abs(r.w));
}

namespace {

Vec3 unit(const Vec3& v) {
  const double n = v.norm();
  return n > 0.0 ? v * (1.0 / n) : Vec3{};
}

Quaternion from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
  // Rotation matrix with rows r0, r1, r2 to quaternion (Shepperd).
  const double m00 = r0.x, m01 = r0.y, m02 = r0.z;
  const double m10 = r1.x, m11 = r1.y, m12 = r1.z;
  const double m20 = r2.x, m21 = r2.y, m22 = r2.z;
  const double trace = m00 + m11 + m22;
  Quaternion q;
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(trace + 1.0);
    q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
  } else if (m00 > m11 && m00 > m22) {
    const double s = 2.0 * std::sqrt(1.0 + m00 - m11 - m22);
    q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
  } else if (m11 > m22) {
    const double s = 2.0 * std::sqrt(1.0 + m11 - m00 - m22);
    q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m22 - m00 - m11);
    q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
  }
  return q.normalized();
}

}  // namespace

std::array<double, 4> filter_gradient(const Quaternion& q, const Vec3& accel, const Vec3& mag) {
  const double q0 = q.w, q1 = q.x, q2 = q.y, q3 = q.z;
  const Vec3 a = unit(accel);

  // Gravity term: R^T (0,0,1) - a
  const double fg0 = 2.0 * (q1 * q3 - q0 * q2) - a.x;
  const double fg1 = 2.0 * (q0 * q1 + q2 * q3) - a.y;
  const double fg2 = 1.0 - 2.0 * (q1 * q1 + q2 * q2) - a.z;
  std::array<double, 4> g{
      -2.0 * q2 * fg0 + 2.0 * q1 * fg1,
      2.0 * q3 * fg0 + 2.0 * q0 * fg1 - 4.0 * q1 * fg2,
      -2.0 * q0 * fg0 + 2.0 * q3 * fg1 - 4.0 * q2 * fg2,
      2.0 * q1 * fg0 + 2.0 * q2 * fg1,
  };
  if (mag.is_zero()) return g;

  // Magnetic term: R^T (bx, 0, bz) - m, with b the measured field in the Earth
  // frame collapsed onto the x-z plane.
  const Vec3 m = unit(mag);
  const Vec3 h = q.rotate(m);
  const double bx = std::sqrt(h.x * h.x + h.y * h.y);
  const double bz = h.z;
  const double fb0 = 2.0 * bx * (0.5 - q2 * q2 - q3 * q3) + 2.0 * bz * (q1 * q3 - q0 * q2) - m.x;
  const double fb1 = 2.0 * bx * (q1 * q2 - q0 * q3) + 2.0 * bz * (q0 * q1 + q2 * q3) - m.y;
  const double fb2 = 2.0 * bx * (q0 * q2 + q1 * q3) + 2.0 * bz * (0.5 - q1 * q1 - q2 * q2) - m.z;
  g[0] += -2.0 * bz * q2 * fb0 + (-2.0 * bx * q3 + 2.0 * bz * q1) * fb1 + 2.0 * bx * q2 * fb2;
  g[1] += 2.0 * bz * q3 * fb0 + (2.0 * bx * q2 + 2.0 * bz * q0) * fb1 +
          (2.0 * bx * q3 - 4.0 * bz * q1) * fb2;
  g[2] += (-4.0 * bx * q2 - 2.0 * bz * q0) * fb0 + (2.0 * bx * q1 + 2.0 * bz * q3) * fb1 +
          (2.0 * bx * q0 - 4.0 * bz * q2) * fb2;
  g[3] += (-4.0 * bx * q3 + 2.0 * bz * q1) * fb0 + (-2.0 * bx * q0 + 2.0 * bz * q2) * fb1 +
          2.0 * bx * q1 * fb2;
  return g;
}

Quaternion filter_update(const Quaternion& q, const ImuSample& sample, double dt, double beta) {
  const Quaternion omega{0.0, sample.gyro.x, sample.gyro.y, sample.gyro.z};
  const Quaternion rate = q * omega;
  double dq[4] = {0.5 * rate.w, 0.5 * rate.x, 0.5 * rate.y, 0.5 * rate.z};

  if (!sample.accel.is_zero() && beta > 0.0) {
    const auto g = filter_gradient(q, sample.accel, sample.mag);
    const double gn = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]);
    if (gn > 0.0) {
      for (int i = 0; i < 4; ++i) dq[i] -= beta * g[i] / gn;
    }
  }
  return Quaternion{q.w + dq[0] * dt, q.x + dq[1] * dt, q.y + dq[2] * dt, q.z + dq[3] * dt}
      .normalized();
}

Quaternion initial_attitude(const ImuSample& sample) {
  if (sample.accel.is_zero()) return Quaternion::identity();
  const Vec3 up = unit(sample.accel);

  if (!sample.mag.is_zero()) {
    const Vec3 west = up.cross(unit(sample.mag));
    if (west.norm() > 1e-6) {
      const Vec3 w = unit(west);
      const Vec3 north = w.cross(up);
      return from_rows(north, w, up);
    }
  }
  // Shortest rotation taking the measured up direction onto +z.
  const Vec3 ez{0.0, 0.0, 1.0};
  const double c = std::clamp(up.dot(ez), -1.0, 1.0);
  const Vec3 axis = up.cross(ez);
  if (axis.norm() < 1e-12) {
    return c > 0.0 ? Quaternion::identity()
                   : Quaternion::from_axis_angle({1.0, 0.0, 0.0}, std::numbers::pi);
  }
  return Quaternion::from_axis_angle(axis, std::acos(c));
}

std::vector<Quaternion> estimate_orientation(const ImuRecording& recording,
                                             const OrientationConfig& config) {
  const auto& s = recording.samples;
  if (s.empty()) throw Error(ErrorCode::EmptyRecording, "recording has no samples");
  const std::size_t n = s.size();

  std::vector<Quaternion> q(n);
  q[0] = initial_attitude(s[0]);
  for (std::size_t i = 1; i < n; ++i) {
    q[i] = filter_update(q[i - 1], s[i], s[i].t - s[i - 1].t, config.beta);
  }

  std::size_t w = n - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (s[i].t - s[0].t >= config.convergence_window) {
      w = i;
      break;
    }
  }
  // Back-fill the window from the converged estimate, running time backward.
  Quaternion back = q[w];
  for (std::size_t i = w; i-- > 0;) {
    ImuSample reversed = s[i];
    reversed.gyro = -s[i + 1].gyro;
    back = filter_update(back, reversed, s[i + 1].t - s[i].t, config.beta);
    q[i] = back;
  }
  return q;
}

std::vector<Vec3> earth_acceleration(const ImuRecording& recording, const OrientationConfig& config) {
  const auto q = estimate_orientation(recording, config);
  std::vector<Vec3> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = q[i].rotate(recording.samples[i].accel) - Vec3{0.0, 0.0, kGravity};
  }
  return out;
}

namespace {

SignalSeries empty_series_for(const ImuRecording& recording) {
  SignalSeries out;
  out.t0 = recording.samples.front().t;
  out.dt = 1.0 / recording.sample_rate;
  out.values.reserve(recording.samples.size());
  return out;
}

}  // namespace

SignalSeries linear_acceleration(const ImuRecording& recording, const OrientationConfig& config) {
  const auto a = earth_acceleration(recording, config);
  SignalSeries out = empty_series_for(recording);
  for (const Vec3& v : a) out.values.push_back(v.norm());
  return out;
}

SignalSeries angular_velocity_norm(const ImuRecording& recording) {
  if (recording.samples.empty()) {
    throw Error(ErrorCode::EmptyRecording, "recording has no samples");
  }
  SignalSeries out = empty_series_for(recording);
  for (const auto& sample : recording.samples) out.values.push_back(sample.gyro.norm());
  return out;
}

SensorSignals preprocess(const ImuRecording& recording, const OrientationConfig& config) {
  return {linear_acceleration(recording, config), angular_velocity_norm(recording)};
}

namespace {

Vec3 lerp(const Vec3& a, const Vec3& b, double f) { return a + (b - a) * f; }

}  // namespace

ImuRecording normalize_recording(ImuRecording recording, IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  rep = IngestReport{};
  auto& s = recording.samples;
  if (s.empty()) return recording;

  std::vector<double> mags;
  mags.reserve(s.size());
  for (const auto& sample : s) mags.push_back(sample.gyro.norm());
  const std::size_t p99 = std::min(s.size() - 1, (s.size() * 99) / 100);
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(p99), mags.end());
  if (mags[p99] > 50.0) {
    const double k = std::numbers::pi / 180.0;
    for (auto& sample : s) sample.gyro = sample.gyro * k;
    rep.gyro_converted_from_degrees = true;
    rep.warnings.push_back("gyroscope values interpreted as deg/s and converted to rad/s");
  }
  rep.has_magnetometer =
      std::any_of(s.begin(), s.end(), [](const ImuSample& x) { return !x.mag.is_zero(); });

  if (s.size() < 2) return recording;

  std::vector<double> steps(s.size() - 1);
  for (std::size_t i = 1; i < s.size(); ++i) {
    steps[i - 1] = s[i].t - s[i - 1].t;
    if (!(steps[i - 1] > 0.0)) {
      std::ostringstream msg;
      msg << "timestamps not strictly increasing at sample " << i << " (t=" << s[i].t << ")";
      throw Error(ErrorCode::InvalidInput, msg.str());
    }
  }
  std::vector<double> sorted = steps;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                   sorted.end());
  const double period = sorted[sorted.size() / 2];
  recording.sample_rate = 1.0 / period;

  double jitter = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    jitter = std::max(jitter, std::abs(steps[i] - period));
    if (steps[i] > 2.0 * period) {
      std::ostringstream msg;
      msg << "gap of " << steps[i] << " s after t=" << s[i].t;
      rep.warnings.push_back(msg.str());
    }
  }
  if (std::any_of(s.begin(), s.end(), [](const ImuSample& x) { return x.gyro.norm() > 28.0; })) {
    rep.warnings.push_back("angular velocity exceeds the 28 rad/s sensor range");
  }
  if (jitter <= 0.1 * period) return recording;

  rep.resampled = true;
  std::vector<ImuSample> out;
  const double t0 = s.front().t;
  const double t_end = s.back().t;
  std::size_t j = 0;
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + period * static_cast<double>(k);
    if (t > t_end + 1e-9 * period) break;
    while (j + 2 < s.size() && s[j + 1].t < t) ++j;
    const ImuSample& a = s[j];
    const ImuSample& b = s[j + 1];
    const double f = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
    out.push_back({t, lerp(a.accel, b.accel, f), lerp(a.gyro, b.gyro, f), lerp(a.mag, b.mag, f)});
  }
  s = std::move(out);
  return recording;
}

}  // namespace climbsense
