// Copyright 2026 The resdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "resdiff/data/synthetic.hpp"
#include "resdiff/data/trajectory_csv.hpp"
#include "resdiff/diffusion/features.hpp"
#include "resdiff/diffusion/sampler.hpp"
#include "resdiff/diffusion/trainer.hpp"
#include "resdiff/metrics.hpp"
#include "resdiff/ranking.hpp"
#include "resdiff/scale.hpp"
#include "resdiff/spline.hpp"

namespace resdiff::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// A required input file or checkpoint that is not there.
struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad flag combination or config value found after parsing.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Resolved configuration: defaults, then the --config file, then flags.

/// Flags remember where in the config tree they land and are applied only
/// when given on the command line.
class Overrides {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    entries_.push_back({opt, [value, pointer](json& cfg) { cfg[json::json_pointer(pointer)] = *value; }});
    return opt;
  }

  void apply(json& cfg) const {
    for (const auto& e : entries_)
      if (e.opt->count() > 0) e.set(cfg);
  }

 private:
  struct Entry {
    CLI::Option* opt;
    std::function<void(json&)> set;
  };
  std::vector<Entry> entries_;
};

/// Recursive merge; every key in `patch` must already exist in `base` so a
/// misspelt config key is an error instead of a silent no-op.
void merge_known(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config " + (path.empty() ? std::string("root") : path) + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string where = path + "/" + key;
    if (!base.contains(key)) throw ConfigError("unknown config key " + where);
    if (base[key].is_object()) {
      merge_known(base[key], value, where);
    } else {
      base[key] = value;
    }
  }
}

json load_config_file(const std::string& path) {
  if (!fs::exists(path)) throw MissingArtifact("config file " + path + " not found");
  const std::string text = data::read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <class T>
T get(const json& cfg, const std::string& pointer) {
  try {
    return cfg.at(json::json_pointer(pointer)).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config value " + pointer + ": " + e.what());
  }
}

json data_defaults() {
  const data::SyntheticSceneParams p;
  return {{"scenes", 10},
          {"length", p.length},
          {"strides", {5, 10, 15}},
          {"extent_x", p.extent_x},
          {"extent_y", p.extent_y},
          {"room_size", p.room_size},
          {"waypoints", p.waypoints},
          {"frame_rate", p.frame_rate},
          {"speed_min", p.speed_min},
          {"speed_max", p.speed_max},
          {"sway_amplitude", p.sway_amplitude},
          {"sway_frequency", p.sway_frequency},
          {"heading_smoothing", p.heading_smoothing}};
}

data::SyntheticSceneParams scene_params(const json& d) {
  data::SyntheticSceneParams p;
  p.length = get<int>(d, "/length");
  p.extent_x = get<double>(d, "/extent_x");
  p.extent_y = get<double>(d, "/extent_y");
  p.room_size = get<double>(d, "/room_size");
  p.waypoints = get<int>(d, "/waypoints");
  p.frame_rate = get<double>(d, "/frame_rate");
  p.speed_min = get<double>(d, "/speed_min");
  p.speed_max = get<double>(d, "/speed_max");
  p.sway_amplitude = get<double>(d, "/sway_amplitude");
  p.sway_frequency = get<double>(d, "/sway_frequency");
  p.heading_smoothing = get<double>(d, "/heading_smoothing");
  p.validate();
  return p;
}

json train_defaults() {
  const auto f = diffusion::TrainConfig::standard();
  return {{"profile", "standard"},
          {"iterations", nullptr},
          {"learning_rate", nullptr},
          {"accumulation", f.accumulation},
          {"batch_size", f.batch_size},
          {"stride_min", f.stride_min},
          {"stride_max", f.stride_max},
          {"steps", f.model.steps},
          {"base_channels", f.model.unet.base_channels},
          {"checkpoint_interval", f.checkpoint_interval}};
}

/// Profile first, then any explicitly set field.
diffusion::TrainConfig train_config(const json& t, std::uint64_t seed) {
  const auto profile = get<std::string>(t, "/profile");
  diffusion::TrainConfig c;
  if (profile == "fast") {
    c = diffusion::TrainConfig::fast();
  } else if (profile == "standard") {
    c = diffusion::TrainConfig::standard();
  } else {
    throw ConfigError("train profile must be fast or standard, got " + profile);
  }
  if (!t.at("iterations").is_null()) c.iterations = get<long>(t, "/iterations");
  if (!t.at("learning_rate").is_null()) c.learning_rate = get<double>(t, "/learning_rate");
  c.accumulation = get<int>(t, "/accumulation");
  c.batch_size = get<int>(t, "/batch_size");
  c.stride_min = get<int>(t, "/stride_min");
  c.stride_max = get<int>(t, "/stride_max");
  c.model.steps = get<int>(t, "/steps");
  c.model.unet.base_channels = get<int>(t, "/base_channels");
  c.checkpoint_interval = get<long>(t, "/checkpoint_interval");
  c.seed = seed;
  c.validate();
  return c;
}

void echo_config(std::ostream& out, const std::string& command, const json& cfg) {
  out << "config " << command << " " << cfg.dump() << "\n";
}

// ---------------------------------------------------------------------------
// Scene folders.

std::string scene_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return buf;
}

fs::path scenes_root(const fs::path& data_dir) { return data_dir / "scenes"; }

std::vector<fs::path> list_scenes(const fs::path& data_dir) {
  const fs::path root = scenes_root(data_dir);
  if (!fs::is_directory(root)) throw MissingArtifact("no scenes directory at " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    const std::string name = e.path().filename().string();
    if (e.is_directory() && !name.empty() && name.front() != '.') dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw MissingArtifact("no scene folders under " + root.string());
  return dirs;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw MissingArtifact(what + " " + p.string() + " not found");
}

void write_records_csv(const fs::path& path, const std::vector<int>& frames, const std::vector<std::vector<double>>& records) {
  std::string text = "frame,tx,ty,tz,qw,qx,qy,qz";
  const std::size_t width = records.empty() ? 7 : records.front().size();
  for (std::size_t c = 7; c < width; ++c) text += ",f" + std::to_string(c - 7);
  text += "\n";
  char buf[32];
  for (std::size_t i = 0; i < records.size(); ++i) {
    text += std::to_string(frames[i]);
    for (double v : records[i]) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      text += buf;
    }
    text += "\n";
  }
  data::write_text_file(path, text);
}

// ---------------------------------------------------------------------------
// Commands. Each takes the resolved config and reports on `out`.

int cmd_gen_data(const json& cfg, std::ostream& out) {
  const auto seed = get<std::uint64_t>(cfg, "/seed");
  const fs::path root = get<std::string>(cfg, "/out");
  const json& d = cfg.at("data");
  const data::SyntheticSceneParams base = scene_params(d);
  const int scenes = get<int>(d, "/scenes");
  const auto strides = get<std::vector<int>>(d, "/strides");
  if (scenes <= 0) throw ConfigError("data.scenes must be positive");
  for (int k : strides) data::stride_indices(base.length, k);  // validates before anything is written

  const fs::path dir = scenes_root(root);
  fs::create_directories(dir);
  for (int i = 0; i < scenes; ++i) {
    data::SyntheticSceneParams p = base;
    p.seed = data::scene_seed(seed, static_cast<std::uint64_t>(i));
    const Trajectory gt = data::generate_scene(p);
    const fs::path final_dir = dir / scene_id(i);
    const fs::path tmp = dir / ("." + scene_id(i) + ".tmp");
    try {
      fs::remove_all(tmp);
      fs::create_directory(tmp);
      data::write_trajectory_csv(tmp / "gt.csv", gt);
      for (int k : strides) {
        data::write_observations_csv(tmp / ("obs_k" + std::to_string(k) + ".csv"), data::subsample_observations(gt, {k}));
      }
      fs::remove_all(final_dir);
      fs::rename(tmp, final_dir);
    } catch (...) {
      std::error_code ec;
      fs::remove_all(tmp, ec);
      throw;
    }
  }
  out << "wrote " << scenes << " scenes to " << dir.string() << "\n";
  return kOk;
}

int cmd_train(const json& cfg, std::ostream& out) {
  const auto seed = get<std::uint64_t>(cfg, "/seed");
  const diffusion::TrainConfig tc = train_config(cfg.at("train"), seed);
  const fs::path data_dir = get<std::string>(cfg, "/data");
  std::vector<Trajectory> dataset;
  for (const auto& dir : list_scenes(data_dir)) {
    require_file(dir / "gt.csv", "ground truth");
    dataset.push_back(data::read_trajectory_csv(dir / "gt.csv"));
  }
  diffusion::TrainOutputs outs;
  outs.checkpoint = get<std::string>(cfg, "/out");
  const auto log = get<std::string>(cfg, "/log");
  outs.log = log.empty() ? fs::path(outs.checkpoint.string() + ".log") : fs::path(log);
  const auto result = diffusion::train(dataset, tc, outs);
  double tail = 0.0;
  const std::size_t n = std::min<std::size_t>(result.history.size(), 100);
  for (std::size_t i = result.history.size() - n; i < result.history.size(); ++i) tail += result.history[i].loss;
  out << "trained scenes=" << dataset.size() << " iterations=" << result.history.size()
      << " optimizer_steps=" << result.optimizer_steps << " recent_loss=" << (n > 0 ? tail / n : 0.0) << "\n";
  out << "checkpoint " << outs.checkpoint.string() << "\nlog " << outs.log.string() << "\n";
  return kOk;
}

/// One input/output pair, either given directly or once per scene folder.
struct Job {
  fs::path input;
  fs::path output;
  std::uint64_t index = 0;
};

std::vector<Job> jobs_for(const json& cfg, const std::string& default_output) {
  const auto input = get<std::string>(cfg, "/obs");
  const auto data_dir = get<std::string>(cfg, "/data");
  const auto out = get<std::string>(cfg, "/out");
  if (input.empty() == data_dir.empty()) throw ConfigError("give exactly one of --obs or --data");
  std::vector<Job> jobs;
  if (!input.empty()) {
    require_file(input, "observations");
    jobs.push_back({input, out.empty() ? fs::path(input).parent_path() / default_output : fs::path(out), 0});
    return jobs;
  }
  const auto obs_name = get<std::string>(cfg, "/obs_name");
  const std::string name = out.empty() ? default_output : out;
  std::uint64_t i = 0;
  for (const auto& dir : list_scenes(data_dir)) {
    require_file(dir / obs_name, "observations");
    jobs.push_back({dir / obs_name, dir / name, i++});
  }
  return jobs;
}

int cmd_baseline(const json& cfg, std::ostream& out) {
  const auto mode_name = get<std::string>(cfg, "/mode");
  BaselineMode mode;
  if (mode_name == "catmull-rom") {
    mode = BaselineMode::CatmullRom;
  } else if (mode_name == "linear") {
    mode = BaselineMode::Linear;
  } else {
    throw ConfigError("baseline mode must be linear or catmull-rom, got " + mode_name);
  }
  const int length = get<int>(cfg, "/length");
  for (const auto& job : jobs_for(cfg, "baseline.csv")) {
    const auto obs = data::read_observations_csv(job.input, length);
    data::write_trajectory_csv(job.output, build_baseline(obs, mode));
    out << "baseline " << job.output.string() << "\n";
  }
  return kOk;
}

diffusion::DiffusionModel load_checkpoint(const json& cfg) {
  const fs::path ck = get<std::string>(cfg, "/checkpoint");
  require_file(ck, "checkpoint");
  return diffusion::DiffusionModel::load(ck);
}

int cmd_sample(const json& cfg, std::ostream& out) {
  const auto seed = get<std::uint64_t>(cfg, "/seed");
  const auto model = load_checkpoint(cfg);
  const int length = get<int>(cfg, "/length");
  for (const auto& job : jobs_for(cfg, "pred.csv")) {
    const auto obs = data::read_observations_csv(job.input, length);
    const auto res = diffusion::sample_trajectory(model, obs, data::scene_seed(seed, job.index));
    data::write_trajectory_csv(job.output, res.trajectory);
    out << "sample " << job.output.string() << "\n";
  }
  return kOk;
}

int cmd_export_features(const json& cfg, std::ostream& out) {
  const auto seed = get<std::uint64_t>(cfg, "/seed");
  const auto model = load_checkpoint(cfg);
  const fs::path input = get<std::string>(cfg, "/obs");
  require_file(input, "observations");
  const auto obs = data::read_observations_csv(input, get<int>(cfg, "/length"));
  const auto res = diffusion::sample_trajectory(model, obs, seed);
  auto frames = get<std::vector<int>>(cfg, "/frames");
  if (frames.empty()) {
    frames.resize(res.trajectory.size());
    for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = static_cast<int>(i);
  }
  const auto records = diffusion::export_spatial_features(res, frames);
  fs::path dest = get<std::string>(cfg, "/out");
  if (dest.empty()) dest = input.parent_path() / "features.csv";
  write_records_csv(dest, frames, records);
  out << "features " << dest.string() << " records=" << records.size()
      << " width=" << (records.empty() ? 0 : records.front().size()) << "\n";
  return kOk;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_eval(const json& cfg, std::ostream& out) {
  const auto pred = get<std::string>(cfg, "/pred");
  const auto gt = get<std::string>(cfg, "/gt");
  const auto data_dir = get<std::string>(cfg, "/data");
  std::vector<std::pair<fs::path, fs::path>> pairs;  // (pred, gt)
  std::vector<std::string> names;
  if (!data_dir.empty()) {
    if (!gt.empty()) throw ConfigError("--gt is only used without --data");
    const std::string pred_name = pred.empty() ? "pred.csv" : pred;
    for (const auto& dir : list_scenes(data_dir)) {
      require_file(dir / pred_name, "prediction");
      require_file(dir / "gt.csv", "ground truth");
      pairs.emplace_back(dir / pred_name, dir / "gt.csv");
      names.push_back(dir.filename().string());
    }
  } else {
    if (pred.empty() || gt.empty()) throw ConfigError("eval needs --data, or both --pred and --gt");
    require_file(pred, "prediction");
    require_file(gt, "ground truth");
    pairs.emplace_back(pred, gt);
    names.push_back(fs::path(pred).stem().string());
  }

  // Scenes are independent; the first failure is rethrown after the join.
  std::vector<MetricReport> reports(pairs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  const auto worker = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      try {
        reports[i] = evaluate(data::read_trajectory_csv(pairs[i].first), data::read_trajectory_csv(pairs[i].second));
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, pairs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::string text;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    text += "scene " + names[i];
    for (const auto& [k, v] : reports[i].fields()) text += " " + k + "=" + format_value(v);
    text += "\n";
  }
  text += "scenes=" + std::to_string(reports.size()) + "\n" + to_key_value(mean_report(reports));
  out << text;
  const auto dest = get<std::string>(cfg, "/out");
  if (!dest.empty()) data::write_text_file(dest, to_key_value(mean_report(reports)));
  return kOk;
}

int cmd_rank(const json& cfg, std::ostream& out) {
  const fs::path path = get<std::string>(cfg, "/judgments");
  require_file(path, "judgments file");
  const auto judgments = parse_judgments(data::read_text_file(path));
  const auto matrix = build_matrix(judgments);
  BtOptions opt;
  opt.tol = get<double>(cfg, "/tol");
  opt.max_iter = get<int>(cfg, "/max_iter");
  const BtResult r = bt_fit(matrix, opt);
  std::string text = "method,pi,score\n";
  for (std::size_t i = 0; i < matrix.names.size(); ++i) {
    text += matrix.names[i] + "," + format_value(r.pi[i]) + "," + format_value(r.scores[i]) + "\n";
  }
  out << text << "iterations=" << r.iterations << " converged=" << (r.converged ? "true" : "false") << "\n";
  const auto dest = get<std::string>(cfg, "/out");
  if (!dest.empty()) data::write_text_file(dest, text);
  return kOk;
}

/// `key=value` lines as written by `eval --out`.
std::map<std::string, double> read_report(const fs::path& path) {
  require_file(path, "metric report");
  std::istringstream in(data::read_text_file(path));
  std::map<std::string, double> values;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::MalformedRecord, path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    try {
      values[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw Error(Errc::MalformedRecord, path.string() + ":" + std::to_string(line_no) + ": value is not a number");
    }
  }
  return values;
}

int cmd_sls(const json& cfg, std::ostream& out) {
  SlsInputs in;
  const auto report = get<std::string>(cfg, "/report");
  if (!report.empty()) {
    const auto values = read_report(report);
    for (const char* key : {"recall_75cm", "rotation_score"}) {
      if (values.count(key) == 0) throw Error(Errc::MalformedRecord, report + ": missing " + key);
    }
    in.r75 = values.at("recall_75cm");
    in.rotation_score = values.at("rotation_score");
  }
  if (!cfg.at("r75").is_null()) in.r75 = get<double>(cfg, "/r75");
  if (!cfg.at("rotation_score").is_null()) in.rotation_score = get<double>(cfg, "/rotation_score");
  if (cfg.at("bt").is_null()) throw ConfigError("sls needs --bt");
  in.bt = get<double>(cfg, "/bt");
  const double v = sls(in);
  char buf[64];
  std::snprintf(buf, sizeof buf, "sls=%.1f\nsls_exact=%.17g\n", v, v);
  out << buf;
  return kOk;
}

int cmd_align_scale(const json& cfg, std::ostream& out) {
  const fs::path samples_path = get<std::string>(cfg, "/samples");
  require_file(samples_path, "distance samples");
  const auto how_name = get<std::string>(cfg, "/aggregate");
  ScaleAggregate how;
  if (how_name == "mean") {
    how = ScaleAggregate::Mean;
  } else if (how_name == "median") {
    how = ScaleAggregate::Median;
  } else {
    throw ConfigError("aggregate must be mean or median, got " + how_name);
  }
  const ScaleEstimate e = estimate_scale(parse_distance_samples(data::read_text_file(samples_path)), how);
  out << "scale=" << format_value(e.multiplier) << " samples=" << e.samples << " rejected=" << e.rejected << "\n";
  const auto traj = get<std::string>(cfg, "/traj");
  if (!traj.empty()) {
    require_file(traj, "trajectory");
    fs::path dest = get<std::string>(cfg, "/out");
    if (dest.empty()) dest = fs::path(traj).parent_path() / "scaled.csv";
    data::write_trajectory_csv(dest, apply_scale(data::read_trajectory_csv(traj), e.multiplier));
    out << "scaled " << dest.string() << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct Command {
  CLI::App* app = nullptr;
  json defaults;
  Overrides flags;
  std::function<int(const json&, std::ostream&)> body;
};

}  // namespace

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::Io:
      return kIoError;
    case Errc::NonFiniteLoss:
    case Errc::NonPositivePi:
    case Errc::ZeroNormQuaternion:
      return kNumericalFailure;
    default:
      return kConfigError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual trajectory diffusion toolkit"};
  app.require_subcommand(1);
  std::map<std::string, std::unique_ptr<Command>> commands;

  const auto add = [&](const std::string& name, const std::string& help, json defaults,
                       std::function<int(const json&, std::ostream&)> body) -> Command& {
    auto c = std::make_unique<Command>();
    c->app = app.add_subcommand(name, help);
    c->defaults = json{{"seed", 0}, {"out", ""}};
    c->defaults.update(defaults);
    c->body = std::move(body);
    c->flags.add<std::uint64_t>(c->app, "--seed", "/seed", "Random seed (default 0)");
    c->flags.add<std::string>(c->app, "--out", "/out", "Output path");
    c->app->add_option("--config", "JSON config file; flags override it");
    Command& ref = *c;
    commands[name] = std::move(c);
    return ref;
  };

  {
    auto& c = add("gen-data", "Write synthetic scenes with ground truth and strided observations",
                  {{"out", "data"}, {"data", data_defaults()}}, cmd_gen_data);
    c.flags.add<int>(c.app, "--scenes", "/data/scenes", "Number of scenes");
    c.flags.add<int>(c.app, "--length", "/data/length", "Frames per scene");
    c.flags.add<std::vector<int>>(c.app, "--strides", "/data/strides", "Observation strides")->delimiter(',');
    c.flags.add<double>(c.app, "--sway-amplitude", "/data/sway_amplitude", "Lateral sway in meters");
    c.flags.add<double>(c.app, "--sway-frequency", "/data/sway_frequency", "Sway frequency in Hz");
  }
  {
    auto& c = add("train", "Train the residual denoiser on a scene folder",
                  {{"out", "model.htrd"}, {"data", ""}, {"log", ""}, {"train", train_defaults()}}, cmd_train);
    c.flags.add<std::string>(c.app, "--data", "/data", "Dataset root containing scenes/")->required();
    c.flags.add<std::string>(c.app, "--log", "/log", "Training log (default <out>.log)");
    c.flags.add<std::string>(c.app, "--profile", "/train/profile", "fast or standard");
    c.flags.add<long>(c.app, "--iterations", "/train/iterations", "Training iterations");
    c.flags.add<double>(c.app, "--lr", "/train/learning_rate", "Learning rate");
    c.flags.add<int>(c.app, "--accumulation", "/train/accumulation", "Iterations per optimizer step");
    c.flags.add<int>(c.app, "--steps", "/train/steps", "Diffusion steps");
    c.flags.add<int>(c.app, "--base-channels", "/train/base_channels", "First U-Net level width");
    c.flags.add<long>(c.app, "--checkpoint-interval", "/train/checkpoint_interval", "Iterations between checkpoints");
  }
  const json job_defaults = {{"obs", ""}, {"data", ""}, {"obs_name", "obs_k10.csv"}, {"length", 0}};
  const auto job_flags = [](Command& c) {
    c.flags.add<std::string>(c.app, "--obs", "/obs", "Observations CSV");
    c.flags.add<std::string>(c.app, "--data", "/data", "Dataset root; processes every scene");
    c.flags.add<std::string>(c.app, "--obs-name", "/obs_name", "Observation file name inside each scene");
    c.flags.add<int>(c.app, "--length", "/length", "Output length (default: last observed frame + 1)");
  };
  {
    json d = job_defaults;
    d["mode"] = "catmull-rom";
    auto& c = add("baseline", "Interpolate observations with a spline", d, cmd_baseline);
    job_flags(c);
    c.flags.add<std::string>(c.app, "--mode", "/mode", "linear or catmull-rom");
  }
  {
    json d = job_defaults;
    d["checkpoint"] = "model.htrd";
    auto& c = add("sample", "Generate trajectories from observations", d, cmd_sample);
    job_flags(c);
    c.flags.add<std::string>(c.app, "--checkpoint", "/checkpoint", "Trained model");
  }
  {
    auto& c = add("export-features", "Write poses with interpolated bottleneck features",
                  {{"checkpoint", "model.htrd"}, {"obs", ""}, {"length", 0}, {"frames", json::array()}},
                  cmd_export_features);
    c.flags.add<std::string>(c.app, "--checkpoint", "/checkpoint", "Trained model");
    c.flags.add<std::string>(c.app, "--obs", "/obs", "Observations CSV")->required();
    c.flags.add<int>(c.app, "--length", "/length", "Trajectory length");
    c.flags.add<std::vector<int>>(c.app, "--frames", "/frames", "Frames to export (default all)")->delimiter(',');
  }
  {
    auto& c = add("eval", "Metric report of predictions against ground truth",
                  {{"pred", ""}, {"gt", ""}, {"data", ""}}, cmd_eval);
    c.flags.add<std::string>(c.app, "--pred", "/pred", "Prediction CSV, or its file name inside each scene");
    c.flags.add<std::string>(c.app, "--gt", "/gt", "Ground-truth CSV");
    c.flags.add<std::string>(c.app, "--data", "/data", "Dataset root; evaluates every scene");
  }
  {
    auto& c = add("rank", "Bradley-Terry scores from pairwise judgments",
                  {{"judgments", ""}, {"tol", BtOptions{}.tol}, {"max_iter", BtOptions{}.max_iter}}, cmd_rank);
    c.flags.add<std::string>(c.app, "--judgments", "/judgments", "`winner,loser` lines")->required();
    c.flags.add<double>(c.app, "--tol", "/tol", "Convergence tolerance");
    c.flags.add<int>(c.app, "--max-iter", "/max_iter", "Iteration cap");
  }
  {
    auto& c = add("sls", "Harmonic mean of recall at 75 cm, rotation score and preference score",
                  {{"report", ""}, {"r75", nullptr}, {"rotation_score", nullptr}, {"bt", nullptr}}, cmd_sls);
    c.flags.add<std::string>(c.app, "--report", "/report", "key=value report from eval --out");
    c.flags.add<double>(c.app, "--r75", "/r75", "Recall at 75 cm, percent");
    c.flags.add<double>(c.app, "--rot", "/rotation_score", "Rotation score, percent");
    c.flags.add<double>(c.app, "--bt", "/bt", "Preference score, percent");
  }
  {
    auto& c = add("align-scale", "Metric scale from reference distances",
                  {{"samples", ""}, {"aggregate", "mean"}, {"traj", ""}}, cmd_align_scale);
    c.flags.add<std::string>(c.app, "--samples", "/samples", "`reference_m,reconstructed` lines")->required();
    c.flags.add<std::string>(c.app, "--aggregate", "/aggregate", "mean or median");
    c.flags.add<std::string>(c.app, "--traj", "/traj", "Trajectory CSV to rescale");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  for (auto& [name, c] : commands) {
    if (!c->app->parsed()) continue;
    try {
      json cfg = c->defaults;
      const CLI::Option* config_opt = c->app->get_option("--config");
      const std::string config_path = config_opt->count() > 0 ? config_opt->as<std::string>() : "";
      if (!config_path.empty()) merge_known(cfg, load_config_file(config_path), "");
      c->flags.apply(cfg);
      echo_config(out, name, cfg);
      return c->body(cfg, out);
    } catch (const MissingArtifact& e) {
      err << "error: " << e.what() << "\n";
      return kMissingArtifact;
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << "\n";
      return kConfigError;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
      err << "error: " << e.what() << "\n";
      return kIoError;
    } catch (const json::exception& e) {
      err << "error: config: " << e.what() << "\n";
      return kConfigError;
    }
  }
  return kConfigError;
}

}  // namespace resdiff::cli
