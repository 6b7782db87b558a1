// SPDX-License-Identifier: Apache-2.0

#include "climbsense/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "climbsense/classifier.hpp"
#include "climbsense/error.hpp"
#include "climbsense/io.hpp"
#include "climbsense/learning.hpp"
#include "climbsense/simulator.hpp"
#include "climbsense/sync.hpp"

namespace climbsense {

namespace {

namespace fs = std::filesystem;
using io::Json;

std::string fixed(double v, int digits = 3) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

struct GridFlags {
  double lambda_min = 0.1;
  double lambda_max = 1000.0;
  std::size_t lambda_count = 20;
  double alpha_step = 0.1;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lambda-min", lambda_min, "Smallest threshold in the grid")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lambda-max", lambda_max, "Largest threshold in the grid")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lambda-count", lambda_count, "Thresholds per axis (log-spaced)")
        ->capture_default_str()
        ->check(CLI::Range(1, 1000));
    cmd->add_option("--alpha-step", alpha_step, "Spacing of the fusion-weight grid")
        ->capture_default_str()
        ->check(CLI::Range(0.001, 1.0));
  }

  LearningGrids grids() const {
    if (!(lambda_max >= lambda_min)) {
      throw Error(ErrorCode::InvalidParams, "--lambda-max must not be below --lambda-min");
    }
    LearningGrids g;
    g.thresholds = ThresholdGrid::log_spaced(lambda_min, lambda_max, lambda_count);
    g.alphas.clear();
    const auto steps = static_cast<long>(std::floor(1.0 / alpha_step + 1e-9));
    for (long i = 0; i <= steps; ++i) g.alphas.push_back(std::min(1.0, alpha_step * static_cast<double>(i)));
    if (g.alphas.back() < 1.0) g.alphas.push_back(1.0);
    return g;
  }

  Json to_json() const {
    return {{"lambda_min", lambda_min},
            {"lambda_max", lambda_max},
            {"lambda_count", lambda_count},
            {"alpha_step", alpha_step}};
  }
};

/// Run provenance written next to every output.
struct RunManifest {
  std::string command;
  Json config = Json::object();
  Json inputs = Json::array();
  std::string model;
  Json outputs = Json::array();

  void add_climb(const fs::path& dir, const LabeledClimb& climb) {
    Json entry = {{"id", climb.id}, {"path", dir.generic_string()}};
    const auto delay = io::read_manifest_delay(dir);
    entry["applied_delay"] = delay ? Json(*delay) : Json(nullptr);
    inputs.push_back(entry);
  }

  Json to_json() const {
    Json j = {{"tool_version", io::kToolVersion}, {"command", command}, {"config", config}};
    j["inputs"] = inputs;
    if (!model.empty()) j["model"] = model;
    j["outputs"] = outputs;
    return j;
  }

  void write_beside(const fs::path& output) const {
    io::write_json(fs::path(output.string() + ".manifest.json"), to_json());
  }
};

std::vector<fs::path> climb_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::Io, root.string() + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw Error(ErrorCode::InvalidInput, root.string() + ": no climb directories");
  return dirs;
}

std::vector<LabeledClimb> load_all(const fs::path& root, const io::ClimbLoadOptions& opts,
                                   RunManifest& manifest, std::ostream& err) {
  std::vector<LabeledClimb> climbs;
  std::vector<std::string> warnings;
  for (const fs::path& d : climb_dirs(root)) {
    climbs.push_back(io::load_climb(d, opts, &warnings));
    manifest.add_climb(d, climbs.back());
  }
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  return climbs;
}

LabeledClimb load_one(const fs::path& dir, const io::ClimbLoadOptions& opts, RunManifest& manifest,
                      std::ostream& err) {
  std::vector<std::string> warnings;
  LabeledClimb climb = io::load_climb(dir, opts, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  manifest.add_climb(dir, climb);
  return climb;
}

std::map<SensorSite, BinaryStateSeries> detect_all(const LabeledClimb& climb, const LearnedModel& model) {
  std::map<SensorSite, BinaryStateSeries> out;
  for (SensorSite site : kAllSites) {
    const auto it = model.sensors.find(site);
    if (it == model.sensors.end()) {
      throw Error(ErrorCode::InvalidInput, "model has no detector for " + std::string(site_code(site)));
    }
    const SensorSignals& s = climb.signals_of(site);
    out[site] = relabel_segments(detect(s.acc, s.ang, it->second));
  }
  return out;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string climbs;
  std::string out;
  double beta = 0.1;
  GridFlags grid;
};

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  RunManifest manifest;
  manifest.command = "fit";
  manifest.config = {{"beta", a.beta}, {"grid", a.grid.to_json()}};
  io::ClimbLoadOptions opts;
  opts.orientation.beta = a.beta;
  const auto climbs = load_all(a.climbs, opts, manifest, err);
  const LearnedModel model = learn(climbs, a.grid.grids());
  io::write_json(a.out, io::model_to_json(model));
  manifest.outputs.push_back(a.out);
  manifest.write_beside(a.out);
  out << "sensor   alpha  lambda0  lambda1  training_c\n";
  for (const auto& [site, m] : model.sensors) {
    out << pad(std::string(site_code(site)), 6) << pad(fixed(m.config.alpha, 2), 8)
        << pad(fixed(m.config.lambda0, 3), 9) << pad(fixed(m.config.lambda1, 3), 9)
        << pad(fixed(model.training_scores.at(site), 4), 12) << '\n';
  }
  out << "model written to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
  std::string model;
  std::string climb;
  std::string out;
  double beta = 0.1;
  bool plots = false;
};

void write_trace_csv(const fs::path& path, const SensorSignals& s, const SensorModel& m) {
  const auto inc = fuse_increments(log_likelihood_ratios(s.acc, m.acc), log_likelihood_ratios(s.ang, m.ang),
                                   m.config.alpha);
  CusumDetector det(m.config.lambda0, m.config.lambda1);
  std::ostringstream os;
  os << "t,increment,statistic,state\n";
  for (std::size_t i = 0; i < inc.size(); ++i) {
    det.step(inc[i]);
    os << io::format_double(s.acc.time(i)) << ',' << io::format_double(inc[i]) << ','
       << io::format_double(det.statistic()) << ',' << to_string(det.state()) << '\n';
  }
  io::write_text(path, os.str());
}

int cmd_detect(const DetectArgs& a, std::ostream& out, std::ostream& err) {
  RunManifest manifest;
  manifest.command = "detect";
  manifest.model = a.model;
  manifest.config = {{"beta", a.beta}, {"plots", a.plots}};
  const LearnedModel model = io::read_model_json(a.model);
  io::ClimbLoadOptions opts;
  opts.orientation.beta = a.beta;
  opts.require_annotations = false;
  const LabeledClimb climb = load_one(a.climb, opts, manifest, err);
  const auto series = detect_all(climb, model);
  const fs::path dir(a.out);
  for (const auto& [site, s] : series) {
    const fs::path p = dir / (std::string(site_code(site)) + ".csv");
    io::write_detection_csv(p, s);
    manifest.outputs.push_back(p.generic_string());
    if (a.plots) {
      const fs::path tp = dir / (std::string(site_code(site)) + "_trace.csv");
      write_trace_csv(tp, climb.signals_of(site), model.sensors.at(site));
      manifest.outputs.push_back(tp.generic_string());
    }
    out << site_code(site) << ": " << s.change_points.size() << " change points\n";
  }
  io::write_json(dir / "run_manifest.json", manifest.to_json());
  return 0;
}

// ---------------------------------------------------------------- classify

struct ClassifyArgs {
  std::string model;
  std::string climb;
  std::string out;
  double beta = 0.1;
  std::size_t min_episode = 10;
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out, std::ostream& err) {
  RunManifest manifest;
  manifest.command = "classify";
  manifest.model = a.model;
  manifest.config = {{"beta", a.beta}, {"min_episode_samples", a.min_episode}};
  const LearnedModel model = io::read_model_json(a.model);
  io::ClimbLoadOptions opts;
  opts.orientation.beta = a.beta;
  opts.require_annotations = false;
  const LabeledClimb climb = load_one(a.climb, opts, manifest, err);
  const ActivityTimeline tl = classify(detect_all(climb, model), {a.min_episode});
  io::write_timeline_csv(a.out, tl);
  manifest.outputs.push_back(a.out);
  manifest.write_beside(a.out);

  std::map<FullBodyState, std::size_t> counts;
  for (FullBodyState s : tl.full_body) ++counts[s];
  for (const auto& [s, n] : counts) {
    out << pad(std::string(to_string(s)), 20) << "  "
        << fixed(100.0 * static_cast<double>(n) / static_cast<double>(tl.size()), 1) << " %\n";
  }
  out << "timeline written to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string timeline;
  std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const ActivityTimeline tl = io::read_timeline_csv(a.timeline);
  const ExplorationReport rep = exploration_report(tl);
  out << "limb  exploratory  performatory  ratio\n";
  for (SensorSite limb : kLimbs) {
    const LimbCounts& c = rep.limbs.at(limb);
    out << pad(std::string(site_code(limb)), 4) << pad(std::to_string(c.exploratory), 13)
        << pad(std::to_string(c.performatory), 14) << pad(fixed(c.ratio(), 3), 7) << '\n';
  }
  if (!a.out.empty()) {
    io::write_json(a.out, io::report_to_json(rep));
    RunManifest manifest;
    manifest.command = "report";
    manifest.inputs.push_back({{"timeline", a.timeline}});
    manifest.outputs.push_back(a.out);
    manifest.write_beside(a.out);
  }
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string climbs;
  std::string folds = "leave-one-out";
  std::string out;
  std::string roc;
  double beta = 0.1;
  GridFlags grid;
};

std::string evaluation_table(const EvaluationReport& rep) {
  std::ostringstream os;
  os << "      ";
  for (AlphaMode mode : kAlphaModes) os << pad("alpha=" + std::string(to_string(mode)), 25);
  os << "\nsensor";
  for (std::size_t i = 0; i < kAlphaModes.size(); ++i) os << pad("score", 16) << pad("optimal", 9);
  os << '\n';
  for (const auto& [site, modes] : rep.entries) {
    os << pad(std::string(site_code(site)), 6);
    for (AlphaMode mode : kAlphaModes) {
      const ModeResult& r = modes.at(mode);
      os << pad(fixed(r.score), 16) << pad(fixed(r.optimal_score), 9);
    }
    os << '\n';
  }
  os << "\nfolds (optimal alpha)\n";
  os << "sensor  held_out      score  optimal  alpha  lambda0  lambda1\n";
  for (const auto& [site, modes] : rep.entries) {
    for (const FoldResult& f : modes.at(AlphaMode::Optimal).folds) {
      os << pad(std::string(site_code(site)), 6) << "  " << f.held_out
         << pad(fixed(f.score), std::max<std::size_t>(11, 21 - f.held_out.size()))
         << pad(fixed(f.optimal_score), 9) << pad(fixed(f.trained.alpha, 2), 7)
         << pad(fixed(f.trained.lambda0), 9) << pad(fixed(f.trained.lambda1), 9) << '\n';
    }
  }
  return os.str();
}

std::string roc_csv(std::span<const LabeledClimb> climbs, const LearningGrids& grids) {
  std::ostringstream os;
  os << "sensor,alpha,lambda0,lambda1,tpr,fpr,c\n";
  for (SensorSite site : kAllSites) {
    const ChannelModels models = fit_models(climbs, site);
    for (double alpha : grids.alphas) {
      for (const GridCell& cell : evaluate_grid(climbs, site, models, alpha, grids.thresholds)) {
        const double tpr = static_cast<double>(cell.counts.tp) / static_cast<double>(cell.counts.positives());
        const double fpr = static_cast<double>(cell.counts.fp) / static_cast<double>(cell.counts.negatives());
        os << site_code(site) << ',' << io::format_double(alpha) << ',' << io::format_double(cell.lambda0)
           << ',' << io::format_double(cell.lambda1) << ',' << io::format_double(tpr) << ','
           << io::format_double(fpr) << ',' << io::format_double(cell.score) << '\n';
      }
    }
  }
  return os.str();
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.config = {{"beta", a.beta}, {"folds", a.folds}, {"grid", a.grid.to_json()}};
  io::ClimbLoadOptions opts;
  opts.orientation.beta = a.beta;
  const auto climbs = load_all(a.climbs, opts, manifest, err);
  const LearningGrids grids = a.grid.grids();
  const std::string table = evaluation_table(cross_validate(climbs, grids));
  out << table;
  if (!a.out.empty()) {
    io::write_text(a.out, table);
    manifest.outputs.push_back(a.out);
  }
  if (!a.roc.empty()) {
    io::write_text(a.roc, roc_csv(climbs, grids));
    manifest.outputs.push_back(a.roc);
  }
  if (!a.out.empty()) manifest.write_beside(a.out);
  if (!a.roc.empty()) manifest.write_beside(a.roc);
  return 0;
}

// ---------------------------------------------------------------- sync

struct SyncArgs {
  std::string climb;
  double max_lag = 20.0;
  double smooth = 0.3;
  double beta = 0.01;
  std::string profile;
};

int cmd_sync(const SyncArgs& a, std::ostream& out, std::ostream& err) {
  RunManifest manifest;
  manifest.command = "sync";
  manifest.config = {{"max_lag", a.max_lag}, {"smooth_window", a.smooth}, {"beta", a.beta}};
  io::ClimbLoadOptions opts;
  opts.apply_delay = false;
  opts.require_annotations = false;
  const LabeledClimb climb = load_one(a.climb, opts, manifest, err);
  if (!climb.pelvis_trajectory) {
    throw Error(ErrorCode::InvalidInput, a.climb + ": missing trajectory.csv");
  }
  const auto rec = climb.recordings.find(SensorSite::Pelvis);
  if (rec == climb.recordings.end()) {
    throw Error(ErrorCode::InvalidInput, a.climb + ": missing pelvis recording");
  }
  const PelvisSync sync = synchronize_pelvis(rec->second, *climb.pelvis_trajectory,
                                             {a.max_lag, a.smooth, a.beta});
  const DelayEstimate& best = sync.estimate;
  if (!a.profile.empty()) {
    const auto pl = correlation_profile(sync.sensor_lateral, sync.video_lateral, a.max_lag);
    const auto pv = correlation_profile(sync.sensor_vertical, sync.video_vertical, a.max_lag);
    std::ostringstream os;
    os << "delay,lateral,vertical\n";
    for (std::size_t i = 0; i < pl.size() && i < pv.size(); ++i) {
      os << io::format_double(pl[i].delay) << ',' << io::format_double(pl[i].correlation) << ','
         << io::format_double(pv[i].correlation) << '\n';
    }
    io::write_text(a.profile, os.str());
    manifest.outputs.push_back(a.profile);
    manifest.write_beside(a.profile);
  }
  io::store_manifest_delay(a.climb, best.delay, best.correlation);
  out << "delay " << fixed(best.delay, 3) << " s (" << best.lag_samples << " samples), correlation "
      << fixed(best.correlation, 4) << '\n';
  out << "stored in " << (fs::path(a.climb) / "manifest.json").generic_string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string out;
  std::size_t climbs = 3;
  double duration = 180.0;
  std::uint64_t seed = 1;
  double delay = 0.0;
  double rate = 100.0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto models = default_simulation_models();
  SimulationOptions opt;
  opt.sample_rate = a.rate;
  opt.triaxial = true;
  opt.trajectory = true;
  for (std::size_t c = 0; c < a.climbs; ++c) {
    char id[32];
    std::snprintf(id, sizeof(id), "climb%02zu", c + 1);
    opt.seed = a.seed * 1000003ULL + c;
    const StatePlan plan = random_plan(a.duration, opt.seed);
    LabeledClimb climb = simulate(plan, models, opt, id);
    if (a.delay != 0.0) climb = inject_delay(std::move(climb), a.delay);
    const fs::path dir = fs::path(a.out) / id;
    io::write_climb(dir, climb);
    Json m = {{"tool_version", io::kToolVersion},
              {"command", "simulate"},
              {"config",
               {{"seed", a.seed},
                {"climb_seed", opt.seed},
                {"duration", a.duration},
                {"sample_rate", a.rate},
                {"injected_delay", a.delay}}}};
    io::write_json(dir / "manifest.json", m);
    out << id << ": " << climb.recordings.at(SensorSite::Pelvis).samples.size() << " samples per sensor\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Climbing activity detection from wearable inertial sensors", "climbsense"};
  app.set_version_flag("--version", io::kToolVersion);
  app.require_subcommand(1);

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Learn models and thresholds from annotated climbs");
  c_fit->add_option("--climbs", fit.climbs, "Directory of climb directories")
      ->envname("CLIMBSENSE_DATA")
      ->required();
  c_fit->add_option("--out", fit.out, "Model JSON to write")->required();
  c_fit->add_option("--beta", fit.beta, "Orientation filter gain")->capture_default_str();
  fit.grid.add_to(c_fit);

  DetectArgs det;
  auto* c_det = app.add_subcommand("detect", "Detect H0/H1 states of every sensor of one climb");
  c_det->add_option("--model", det.model, "Model JSON")->required();
  c_det->add_option("--climb", det.climb, "Climb directory")->required();
  c_det->add_option("--out", det.out, "Output directory")->required();
  c_det->add_option("--beta", det.beta, "Orientation filter gain")->capture_default_str();
  c_det->add_flag("--plots", det.plots, "Also write per-sensor CUSUM traces");

  ClassifyArgs cls;
  auto* c_cls = app.add_subcommand("classify", "Full-body and limb sub-state timeline of one climb");
  c_cls->add_option("--model", cls.model, "Model JSON")->required();
  c_cls->add_option("--climb", cls.climb, "Climb directory")->required();
  c_cls->add_option("--out", cls.out, "Timeline CSV to write")->required();
  c_cls->add_option("--beta", cls.beta, "Orientation filter gain")->capture_default_str();
  c_cls->add_option("--min-episode", cls.min_episode, "Shortest motion episode kept (samples)")
      ->capture_default_str();

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Exploratory/performatory counts per limb");
  c_rep->add_option("timeline", rep.timeline, "Timeline CSV")->required();
  c_rep->add_option("--out", rep.out, "Also write the counts as JSON");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Cross-validated detection scores");
  c_ev->add_option("--climbs", ev.climbs, "Directory of climb directories")
      ->envname("CLIMBSENSE_DATA")
      ->required();
  c_ev->add_option("--folds", ev.folds, "Fold scheme")
      ->capture_default_str()
      ->check(CLI::IsMember({"leave-one-out"}));
  c_ev->add_option("--out", ev.out, "Also write the table to this file");
  c_ev->add_option("--roc", ev.roc, "Write ROC points of every grid cell as CSV");
  c_ev->add_option("--beta", ev.beta, "Orientation filter gain")->capture_default_str();
  ev.grid.add_to(c_ev);

  SyncArgs sy;
  auto* c_sy = app.add_subcommand("sync", "Estimate the video-to-sensor delay of one climb");
  c_sy->add_option("--climb", sy.climb, "Climb directory")->required();
  c_sy->add_option("--max-lag", sy.max_lag, "Largest delay searched (s)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_sy->add_option("--smooth", sy.smooth, "Moving-average window (s)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_sy->add_option("--beta", sy.beta, "Orientation filter gain for the pelvis attitude")->capture_default_str();
  c_sy->add_option("--profile", sy.profile, "Write the correlation profile as CSV");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate synthetic annotated climbs");
  c_sim->add_option("--out", sim.out, "Output directory")->required();
  c_sim->add_option("--climbs", sim.climbs, "Number of climbs")->capture_default_str()->check(CLI::Range(1, 1000));
  c_sim->add_option("--duration", sim.duration, "Climb duration (s)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_sim->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  c_sim->add_option("--delay", sim.delay, "Video delay injected into annotations and trajectory (s)")
      ->capture_default_str();
  c_sim->add_option("--rate", sim.rate, "Sample rate (Hz)")->capture_default_str()->check(CLI::PositiveNumber);

  std::vector<const char*> argv{"climbsense"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (c_fit->parsed()) return cmd_fit(fit, out, err);
    if (c_det->parsed()) return cmd_detect(det, out, err);
    if (c_cls->parsed()) return cmd_classify(cls, out, err);
    if (c_rep->parsed()) return cmd_report(rep, out);
    if (c_ev->parsed()) return cmd_evaluate(ev, out, err);
    if (c_sy->parsed()) return cmd_sync(sy, out, err);
    if (c_sim->parsed()) return cmd_simulate(sim, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace climbsense
