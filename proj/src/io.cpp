// SPDX-License-Identifier: Apache-2.0

#include "climbsense/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "climbsense/error.hpp"
#include "climbsense/sync.hpp"

namespace climbsense::io {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

namespace {

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view text, const fs::path& path, std::size_t line) {
  double v = 0.0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidInput, where(path, line) + ": not a finite number '" +
                                             std::string(text) + "'");
  }
  return v;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

/// Column index by name from a CSV header line.
std::map<std::string, std::size_t, std::less<>> header_index(std::string_view header) {
  std::map<std::string, std::size_t, std::less<>> idx;
  const auto cols = split(header);
  for (std::size_t i = 0; i < cols.size(); ++i) idx.emplace(std::string(cols[i]), i);
  return idx;
}

std::size_t require_column(const std::map<std::string, std::size_t, std::less<>>& idx,
                           std::string_view name, const fs::path& path) {
  const auto it = idx.find(name);
  if (it == idx.end()) {
    throw Error(ErrorCode::InvalidInput,
                where(path, 1) + ": missing column '" + std::string(name) + "'");
  }
  return it->second;
}

}  // namespace

ImuRecording read_recording_csv(const fs::path& path, SensorSite site) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, where(path, 1) + ": empty file");
  const auto idx = header_index(line);
  const std::array<std::string_view, 7> required = {"t", "ax", "ay", "az", "gx", "gy", "gz"};
  std::array<std::size_t, 10> col{};
  for (std::size_t i = 0; i < required.size(); ++i) col[i] = require_column(idx, required[i], path);
  const bool has_mag = idx.contains("mx") && idx.contains("my") && idx.contains("mz");
  if (has_mag) {
    col[7] = idx.find("mx")->second;
    col[8] = idx.find("my")->second;
    col[9] = idx.find("mz")->second;
  }

  ImuRecording rec;
  rec.site = site;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = split(t);
    auto get = [&](std::size_t c) {
      if (c >= f.size()) {
        throw Error(ErrorCode::InvalidInput, where(path, lineno) + ": too few columns");
      }
      return parse_double(f[c], path, lineno);
    };
    ImuSample s;
    s.t = get(col[0]);
    s.accel = {get(col[1]), get(col[2]), get(col[3])};
    s.gyro = {get(col[4]), get(col[5]), get(col[6])};
    if (has_mag) s.mag = {get(col[7]), get(col[8]), get(col[9])};
    if (!rec.samples.empty() && !(s.t > rec.samples.back().t)) {
      throw Error(ErrorCode::InvalidInput, where(path, lineno) + ": time not strictly increasing");
    }
    rec.samples.push_back(s);
  }
  if (rec.samples.empty()) {
    throw Error(ErrorCode::EmptyRecording, path.string() + ": no samples");
  }
  if (rec.samples.size() > 1) {
    rec.sample_rate = static_cast<double>(rec.samples.size() - 1) /
                      (rec.samples.back().t - rec.samples.front().t);
  }
  return rec;
}

void write_recording_csv(const fs::path& path, const ImuRecording& recording) {
  auto out = open_out(path);
  out << "t,ax,ay,az,gx,gy,gz,mx,my,mz\n";
  for (const ImuSample& s : recording.samples) {
    out << format_double(s.t);
    for (const Vec3* v : {&s.accel, &s.gyro, &s.mag}) {
      out << ',' << format_double(v->x) << ',' << format_double(v->y) << ',' << format_double(v->z);
    }
    out << '\n';
  }
}

std::optional<SensorSite> site_from_filename(const fs::path& path) {
  if (path.extension() != ".csv") return std::nullopt;
  const std::string stem = path.stem().string();
  const auto us = stem.rfind('_');
  if (us == std::string::npos || us == 0) return std::nullopt;
  return parse_site(std::string_view(stem).substr(us + 1));
}

Json annotations_to_json(const std::vector<AnnotationTrack>& tracks) {
  Json arr = Json::array();
  for (const AnnotationTrack& track : tracks) {
    Json intervals = Json::array();
    for (const Interval& iv : track.intervals) {
      intervals.push_back({{"start", iv.start}, {"end", iv.end}, {"label", to_string(iv.label)}});
    }
    arr.push_back({{"site", site_code(track.site)}, {"intervals", intervals}});
  }
  return arr;
}

std::vector<AnnotationTrack> annotations_from_json(const Json& j, const std::string& context) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidInput, context + ": expected a list of tracks");
  std::vector<AnnotationTrack> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string here = context + ": track " + std::to_string(i);
    try {
      AnnotationTrack track;
      const auto site = parse_site(j[i].at("site").get<std::string>());
      if (!site) throw Error(ErrorCode::InvalidInput, here + ": unknown site");
      track.site = *site;
      for (const Json& iv : j[i].at("intervals")) {
        const auto label = parse_state(iv.at("label").get<std::string>());
        if (!label) throw Error(ErrorCode::InvalidInput, here + ": label must be H0 or H1");
        track.intervals.push_back({iv.at("start").get<double>(), iv.at("end").get<double>(), *label});
      }
      track.validate();
      out.push_back(std::move(track));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidInput, here + ": " + e.what());
    }
  }
  return out;
}

std::vector<AnnotationTrack> read_annotations_json(const fs::path& path) {
  return annotations_from_json(read_json(path), path.string());
}

void write_annotations_json(const fs::path& path, const std::vector<AnnotationTrack>& tracks) {
  write_json(path, annotations_to_json(tracks));
}

TrajectorySeries read_trajectory_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, where(path, 1) + ": empty file");
  const auto idx = header_index(line);
  const std::size_t ct = require_column(idx, "t", path);
  const std::size_t cx = require_column(idx, "x", path);
  const std::size_t cy = require_column(idx, "y", path);
  std::vector<double> times;
  TrajectorySeries traj;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = split(t);
    if (f.size() <= std::max({ct, cx, cy})) {
      throw Error(ErrorCode::InvalidInput, where(path, lineno) + ": too few columns");
    }
    times.push_back(parse_double(f[ct], path, lineno));
    if (times.size() > 1 && !(times.back() > times[times.size() - 2])) {
      throw Error(ErrorCode::InvalidInput, where(path, lineno) + ": time not strictly increasing");
    }
    traj.positions.push_back({parse_double(f[cx], path, lineno), parse_double(f[cy], path, lineno)});
  }
  if (times.size() < 2) throw Error(ErrorCode::TooFewSamples, path.string() + ": fewer than 2 samples");
  traj.t0 = times.front();
  traj.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  return traj;
}

void write_trajectory_csv(const fs::path& path, const TrajectorySeries& traj) {
  auto out = open_out(path);
  out << "t,x,y\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_double(traj.t0 + traj.dt * static_cast<double>(i)) << ','
        << format_double(traj.positions[i][0]) << ',' << format_double(traj.positions[i][1]) << '\n';
  }
}

namespace {

Json gamma_json(const GammaParams& p) { return {{"k", p.k}, {"theta", p.theta}}; }

Json hypothesis_json(const HypothesisModel& m) {
  return {{"h0", gamma_json(m.h0)}, {"h1", gamma_json(m.h1)}};
}

GammaParams gamma_from(const Json& j) {
  GammaParams p{j.at("k").get<double>(), j.at("theta").get<double>()};
  p.validate();
  return p;
}

HypothesisModel hypothesis_from(const Json& j) { return {gamma_from(j.at("h0")), gamma_from(j.at("h1"))}; }

}  // namespace

Json model_to_json(const LearnedModel& model) {
  Json sensors = Json::object();
  for (SensorSite site : kAllSites) {
    const auto it = model.sensors.find(site);
    if (it == model.sensors.end()) continue;
    const SensorModel& m = it->second;
    Json s = {{"acc", hypothesis_json(m.acc)},
              {"ang", hypothesis_json(m.ang)},
              {"alpha", m.config.alpha},
              {"lambda0", m.config.lambda0},
              {"lambda1", m.config.lambda1}};
    if (const auto sc = model.training_scores.find(site); sc != model.training_scores.end()) {
      s["training_score"] = sc->second;
    }
    sensors[std::string(site_code(site))] = s;
  }
  return {{"format", "climbsense-model"},
          {"sensors", sensors},
          {"provenance",
           {{"climbs", model.climb_ids},
            {"threshold_grid",
             {{"lambda0", model.grids.thresholds.lambda0}, {"lambda1", model.grids.thresholds.lambda1}}},
            {"alpha_grid", model.grids.alphas},
            {"code_version", kToolVersion}}}};
}

LearnedModel model_from_json(const Json& j, const std::string& context) {
  LearnedModel model;
  try {
    for (const auto& [code, s] : j.at("sensors").items()) {
      const auto site = parse_site(code);
      if (!site) throw Error(ErrorCode::InvalidInput, context + ": unknown sensor '" + code + "'");
      SensorModel m{hypothesis_from(s.at("acc")), hypothesis_from(s.at("ang")),
                    {s.at("lambda0").get<double>(), s.at("lambda1").get<double>(),
                     s.at("alpha").get<double>()}};
      m.config.validate();
      model.sensors[*site] = m;
      if (s.contains("training_score")) model.training_scores[*site] = s["training_score"].get<double>();
    }
    if (j.contains("provenance")) {
      const Json& p = j["provenance"];
      if (p.contains("climbs")) model.climb_ids = p["climbs"].get<std::vector<std::string>>();
      if (p.contains("threshold_grid")) {
        model.grids.thresholds.lambda0 = p["threshold_grid"].at("lambda0").get<std::vector<double>>();
        model.grids.thresholds.lambda1 = p["threshold_grid"].at("lambda1").get<std::vector<double>>();
      }
      if (p.contains("alpha_grid")) model.grids.alphas = p["alpha_grid"].get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, context + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.code(), context + ": " + e.what());
  }
  return model;
}

LearnedModel read_model_json(const fs::path& path) {
  return model_from_json(read_json(path), path.string());
}

void write_detection_csv(const fs::path& path, const BinaryStateSeries& series) {
  auto out = open_out(path);
  out << "t,state\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_double(series.t0 + series.dt * static_cast<double>(i)) << ','
        << to_string(series.states[i]) << '\n';
  }
  out << "# change_points\nindex,onset,state\n";
  for (const ChangePoint& cp : series.change_points) {
    out << cp.index << ',' << cp.onset << ',' << to_string(cp.state) << '\n';
  }
}

BinaryStateSeries read_detection_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  BinaryStateSeries out;
  std::vector<double> times;
  bool in_block = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t == "# change_points") {
      in_block = true;
      continue;
    }
    if (t == "t,state" || t == "index,onset,state") continue;
    const auto f = split(t);
    if (!in_block) {
      if (f.size() != 2) throw Error(ErrorCode::InvalidInput, where(path, lineno) + ": expected t,state");
      const auto s = parse_state(f[1]);
      if (!s) throw Error(ErrorCode::InvalidInput, where(path, lineno) + ": bad state");
      times.push_back(parse_double(f[0], path, lineno));
      out.states.push_back(*s);
    } else {
      const auto s = f.size() == 3 ? parse_state(f[2]) : std::nullopt;
      if (!s) throw Error(ErrorCode::InvalidInput, where(path, lineno) + ": bad change point");
      out.change_points.push_back({static_cast<std::size_t>(parse_double(f[0], path, lineno)),
                                   static_cast<std::size_t>(parse_double(f[1], path, lineno)), *s});
    }
  }
  if (times.size() >= 2) {
    out.t0 = times.front();
    out.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  } else if (times.size() == 1) {
    out.t0 = times.front();
  }
  return out;
}

void write_timeline_csv(const fs::path& path, const ActivityTimeline& timeline) {
  auto out = open_out(path);
  out << "t,full_body,rh,lh,rf,lf\n";
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    out << format_double(timeline.t0 + timeline.dt * static_cast<double>(i)) << ','
        << to_string(timeline.full_body[i]);
    for (SensorSite limb : kLimbs) out << ',' << to_string(timeline.limb_substates.at(limb)[i]);
    out << '\n';
  }
}

ActivityTimeline read_timeline_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, where(path, 1) + ": empty file");
  const auto idx = header_index(line);
  const std::size_t ct = require_column(idx, "t", path);
  const std::size_t cf = require_column(idx, "full_body", path);
  std::array<std::size_t, 4> cl{};
  for (std::size_t l = 0; l < 4; ++l) cl[l] = require_column(idx, site_code(kLimbs[l]), path);

  ActivityTimeline tl;
  std::vector<double> times;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = split(t);
    if (f.size() < idx.size()) throw Error(ErrorCode::InvalidInput, where(path, lineno) + ": too few columns");
    times.push_back(parse_double(f[ct], path, lineno));
    const auto fb = parse_full_body(f[cf]);
    if (!fb) throw Error(ErrorCode::InvalidInput, where(path, lineno) + ": bad full-body state");
    tl.full_body.push_back(*fb);
    for (std::size_t l = 0; l < 4; ++l) {
      const auto s = parse_sub_state(f[cl[l]]);
      if (!s) throw Error(ErrorCode::InvalidInput, where(path, lineno) + ": bad limb sub-state");
      tl.limb_substates[kLimbs[l]].push_back(*s);
    }
  }
  if (!times.empty()) tl.t0 = times.front();
  if (times.size() >= 2) {
    tl.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  }
  for (SensorSite limb : kLimbs) tl.limb_substates[limb];  // present even when empty
  return tl;
}

Json report_to_json(const ExplorationReport& report) {
  Json limbs = Json::object();
  for (SensorSite limb : kLimbs) {
    const auto it = report.limbs.find(limb);
    if (it == report.limbs.end()) continue;
    const LimbCounts& c = it->second;
    const double r = c.ratio();
    Json ratio = std::isnan(r) ? Json(nullptr) : std::isinf(r) ? Json("inf") : Json(r);
    limbs[std::string(site_code(limb))] = {
        {"exploratory", c.exploratory}, {"performatory", c.performatory}, {"ratio", ratio}};
  }
  return limbs;
}

Json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::optional<double> read_manifest_delay(const fs::path& climb_dir) {
  const fs::path p = climb_dir / "manifest.json";
  if (!fs::exists(p)) return std::nullopt;
  const Json j = read_json(p);
  if (!j.contains("delay") || j["delay"].is_null()) return std::nullopt;
  return j["delay"].get<double>();
}

void store_manifest_delay(const fs::path& climb_dir, double delay, double correlation) {
  const fs::path p = climb_dir / "manifest.json";
  Json j = fs::exists(p) ? read_json(p) : Json::object();
  j["delay"] = delay;
  j["delay_correlation"] = correlation;
  write_json(p, j);
}

LabeledClimb load_climb(const fs::path& dir, const ClimbLoadOptions& options,
                        std::vector<std::string>* warnings) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  LabeledClimb climb;
  climb.id = dir.filename().string();
  if (climb.id.empty()) climb.id = dir.parent_path().filename().string();

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    const auto site = site_from_filename(f);
    if (!site) continue;
    if (climb.recordings.contains(*site)) {
      throw Error(ErrorCode::InvalidInput, dir.string() + ": two recordings for site " +
                                               std::string(site_code(*site)));
    }
    IngestReport rep;
    ImuRecording rec = normalize_recording(read_recording_csv(f, *site), &rep);
    if (warnings) {
      for (const auto& w : rep.warnings) warnings->push_back(f.string() + ": " + w);
    }
    climb.signals[*site] = preprocess(rec, options.orientation);
    climb.recordings[*site] = std::move(rec);
  }
  if (climb.recordings.empty()) {
    throw Error(ErrorCode::InvalidInput, dir.string() + ": no <climb>_<site>.csv recordings");
  }

  const fs::path ann = dir / "annotations.json";
  if (fs::exists(ann)) {
    const auto delay = options.apply_delay ? read_manifest_delay(dir) : std::nullopt;
    for (AnnotationTrack& t : read_annotations_json(ann)) {
      climb.annotations[t.site] = delay ? shift_annotations(t, -*delay) : t;
    }
  } else if (options.require_annotations) {
    throw Error(ErrorCode::InvalidInput, dir.string() + ": missing annotations.json");
  }
  const fs::path traj = dir / "trajectory.csv";
  if (fs::exists(traj)) climb.pelvis_trajectory = read_trajectory_csv(traj);
  return climb;
}

std::vector<LabeledClimb> load_climbs(const fs::path& root, const ClimbLoadOptions& options,
                                      std::vector<std::string>* warnings) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::Io, root.string() + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<LabeledClimb> out;
  for (const fs::path& d : dirs) out.push_back(load_climb(d, options, warnings));
  if (out.empty()) throw Error(ErrorCode::InvalidInput, root.string() + ": no climb directories");
  return out;
}

void write_climb(const fs::path& dir, const LabeledClimb& climb) {
  fs::create_directories(dir);
  for (SensorSite site : kAllSites) {
    const auto it = climb.recordings.find(site);
    if (it == climb.recordings.end()) {
      throw Error(ErrorCode::InvalidInput, "climb " + climb.id + " has no raw recording for " +
                                               std::string(site_code(site)));
    }
    write_recording_csv(dir / (climb.id + "_" + std::string(site_code(site)) + ".csv"), it->second);
  }
  std::vector<AnnotationTrack> tracks;
  for (SensorSite site : kAllSites) {
    if (const auto it = climb.annotations.find(site); it != climb.annotations.end()) {
      tracks.push_back(it->second);
    }
  }
  write_annotations_json(dir / "annotations.json", tracks);
  if (climb.pelvis_trajectory) write_trajectory_csv(dir / "trajectory.csv", *climb.pelvis_trajectory);
}

}  // namespace climbsense::io
