// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "climbsense/classifier.hpp"
#include "climbsense/climb.hpp"
#include "climbsense/learning.hpp"
#include "climbsense/orientation.hpp"

namespace climbsense::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "climbsense 1.0.0";

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

// Recording CSV: header t,ax,ay,az,gx,gy,gz[,mx,my,mz]; one sensor per file
// named <climb>_<site>.csv.
ImuRecording read_recording_csv(const fs::path& path, SensorSite site);
void write_recording_csv(const fs::path& path, const ImuRecording& recording);
std::optional<SensorSite> site_from_filename(const fs::path& path);

// Annotation JSON: [{"site": "lh", "intervals": [{"start", "end", "label"}]}]
std::vector<AnnotationTrack> read_annotations_json(const fs::path& path);
void write_annotations_json(const fs::path& path, const std::vector<AnnotationTrack>& tracks);
Json annotations_to_json(const std::vector<AnnotationTrack>& tracks);
std::vector<AnnotationTrack> annotations_from_json(const Json& j, const std::string& context);

// Trajectory CSV: t,x,y (seconds, metres), uniform sampling.
TrajectorySeries read_trajectory_csv(const fs::path& path);
void write_trajectory_csv(const fs::path& path, const TrajectorySeries& traj);

// Model JSON.
Json model_to_json(const LearnedModel& model);
LearnedModel model_from_json(const Json& j, const std::string& context);
LearnedModel read_model_json(const fs::path& path);

// Detection CSV: "t,state" rows, then a "# change_points" block of
// "index,onset,state" rows.
void write_detection_csv(const fs::path& path, const BinaryStateSeries& series);
BinaryStateSeries read_detection_csv(const fs::path& path);

// Timeline CSV: t,full_body,rh,lh,rf,lf
void write_timeline_csv(const fs::path& path, const ActivityTimeline& timeline);
ActivityTimeline read_timeline_csv(const fs::path& path);

Json report_to_json(const ExplorationReport& report);

Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& j);
void write_text(const fs::path& path, const std::string& text);

/// Climb directory: <id>_<site>.csv recordings, annotations.json, optional
/// trajectory.csv (pelvis, video clock) and manifest.json. A "delay" stored
/// in the manifest is removed from the annotations on load when
/// apply_delay is set.
struct ClimbLoadOptions {
  OrientationConfig orientation;
  bool apply_delay = true;
  bool require_annotations = true;
};

LabeledClimb load_climb(const fs::path& dir, const ClimbLoadOptions& options = {},
                        std::vector<std::string>* warnings = nullptr);

/// Loads every climb subdirectory, sorted by name.
std::vector<LabeledClimb> load_climbs(const fs::path& root, const ClimbLoadOptions& options = {},
                                      std::vector<std::string>* warnings = nullptr);

/// Writes recordings (raw when present), annotations and trajectory.
void write_climb(const fs::path& dir, const LabeledClimb& climb);

std::optional<double> read_manifest_delay(const fs::path& climb_dir);
void store_manifest_delay(const fs::path& climb_dir, double delay, double correlation);

}  // namespace climbsense::io
