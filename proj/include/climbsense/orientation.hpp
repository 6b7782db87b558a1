// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "climbsense/types.hpp"

namespace climbsense {

inline constexpr double kGravity = 9.81;  // m/s^2

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  bool is_zero() const { return x == 0.0 && y == 0.0 && z == 0.0; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Unit quaternion (w, x, y, z) rotating sensor-frame vectors into the Earth
/// frame (x magnetic north, y west, z up): v_earth = q v_sensor q*.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion identity() { return {}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle);
  /// exp of the pure quaternion (0, v/2): rotation by |v| about v.
  static Quaternion from_rotation_vector(const Vec3& v);

  Quaternion operator*(const Quaternion& o) const;
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quaternion normalized() const;
  Vec3 rotate(const Vec3& v) const;          // sensor -> earth
  Vec3 inverse_rotate(const Vec3& v) const;  // earth -> sensor
};

/// Rotation angle (rad) between two orientations, insensitive to the q/-q sign.
double angular_distance(const Quaternion& a, const Quaternion& b);

struct ImuSample {
  double t = 0.0;  // s
  Vec3 accel;      // m/s^2, sensor frame
  Vec3 gyro;       // rad/s, sensor frame
  Vec3 mag;        // direction only; zero when no magnetometer
};

struct ImuRecording {
  SensorSite site = SensorSite::Pelvis;
  double sample_rate = 100.0;  // Hz
  std::vector<ImuSample> samples;
};

struct OrientationConfig {
  double beta = 0.1;                // gradient-step gain
  double convergence_window = 3.0;  // s
};

/// One step of the gradient-descent MARG orientation filter. Uses the
/// accelerometer and magnetometer when both are non-zero, the accelerometer
/// alone when the magnetometer is zero, and pure gyro integration when the
/// accelerometer is zero. The result is renormalized.
Quaternion filter_update(const Quaternion& q, const ImuSample& sample, double dt, double beta);

/// Objective gradient used by filter_update (before normalization); exposed
/// for testing against finite differences.
std::array<double, 4> filter_gradient(const Quaternion& q, const Vec3& accel, const Vec3& mag);

/// Orientation consistent with a single static measurement: gravity from the
/// accelerometer, heading from the magnetometer when present. Identity when
/// the accelerometer is zero.
Quaternion initial_attitude(const ImuSample& sample);

/// Per-sample orientation estimates. Samples inside the convergence window
/// carry the estimate propagated backward from the converged state at the end
/// of the window.
std::vector<Quaternion> estimate_orientation(const ImuRecording& recording,
                                             const OrientationConfig& config = {});

/// Gravity-free acceleration in the Earth frame, one vector per sample.
std::vector<Vec3> earth_acceleration(const ImuRecording& recording,
                                     const OrientationConfig& config = {});

/// Norm of R a_s - (0, 0, g) per sample.
SignalSeries linear_acceleration(const ImuRecording& recording, const OrientationConfig& config = {});

/// Norm of the gyroscope vector per sample (rad/s).
SignalSeries angular_velocity_norm(const ImuRecording& recording);

/// The two detector inputs of one sensor.
struct SensorSignals {
  SignalSeries acc;
  SignalSeries ang;
};

SensorSignals preprocess(const ImuRecording& recording, const OrientationConfig& config = {});

/// Ingestion normalization of a raw recording.
struct IngestReport {
  bool gyro_converted_from_degrees = false;
  bool resampled = false;
  bool has_magnetometer = true;
  std::vector<std::string> warnings;  // gaps and other notes, in time order
};

/// Detects degree-per-second gyro input (99th percentile magnitude > 50),
/// estimates the sample rate from the median step, flags gaps longer than two
/// nominal periods, and resamples onto a uniform grid by linear interpolation
/// when timestamp jitter exceeds 10% of the period.
ImuRecording normalize_recording(ImuRecording recording, IngestReport* report = nullptr);

}  // namespace climbsense
