#ifndef PANN_EXPERIMENT_HPP
#define PANN_EXPERIMENT_HPP

// End-to-end runs: classify -> select bands -> tile -> features (or raw
// pixels) -> change scores -> change maps -> pooled AUPRC per class.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <sys/resource.h>

#include <nlohmann/json.hpp>

#include "pann/changedet.hpp"
#include "pann/dynamics.hpp"
#include "pann/eval.hpp"
#include "pann/featureng.hpp"
#include "pann/graph_io.hpp"
#include "pann/netgen.hpp"
#include "pann/pipeline.hpp"
#include "pann/scene.hpp"
#include "pann/scenegen.hpp"

namespace pann {

enum class Model : std::uint8_t { pann, baseline };

inline std::string_view to_string(Model m) { return m == Model::pann ? "pann" : "baseline"; }

inline Model parse_model(std::string_view s) {
  if (s == "pann") return Model::pann;
  if (s == "baseline") return Model::baseline;
  throw ConfigError("unknown model '" + std::string(s) + "'");
}

inline std::string_view to_string(ResetMode m) { return m == ResetMode::persistent ? "persistent" : "per_tile"; }

inline nlohmann::json to_json(const DynamicsConfig& c) {
  return {{"v_set", c.v_set},       {"v_reset", c.v_reset}, {"lambda_max", c.lambda_max},
          {"dt", c.dt},             {"steps_per_frame", c.steps_per_frame},
          {"g_off", c.g_off},       {"g_on", c.g_on},       {"solver_tolerance", c.solver_tolerance}};
}

inline DynamicsConfig dynamics_config_from_json(const nlohmann::json& j) {
  DynamicsConfig c;
  c.v_set = j.value("v_set", c.v_set);
  c.v_reset = j.value("v_reset", c.v_reset);
  c.lambda_max = j.value("lambda_max", c.lambda_max);
  c.dt = j.value("dt", c.dt);
  c.steps_per_frame = j.value("steps_per_frame", c.steps_per_frame);
  c.g_off = j.value("g_off", c.g_off);
  c.g_on = j.value("g_on", c.g_on);
  c.solver_tolerance = j.value("solver_tolerance", c.solver_tolerance);
  c.validate();
  return c;
}

struct RunConfig {
  std::vector<std::filesystem::path> bundles;
  DistanceMetric metric = DistanceMetric::correlation;
  std::optional<std::filesystem::path> feature_spec_path;
  std::optional<DisasterClass> class_override;
  NetgenConfig netgen;
  DynamicsConfig dynamics;
  std::uint32_t n_readout = 400;
  std::size_t n_runs = 5;
  std::uint64_t base_seed = 0;
  ResetMode reset_mode = ResetMode::persistent;
  Model model = Model::pann;
  bool baseline_raw_tiles = false;
  std::filesystem::path out_dir = "out";
  std::size_t threads = 8;
  bool write_maps = true;
  bool export_features = false;

  void validate() const {
    if (n_runs < 1) throw ConfigError("run: n_runs must be at least 1");
    if (bundles.empty()) throw ConfigError("run: no bundles given");
    for (const auto& b : bundles) {
      if (!std::filesystem::exists(b)) throw ConfigError("run: bundle " + b.string() + " does not exist");
    }
    netgen.validate();
    dynamics.validate();
  }
};

/// The part of the configuration that determines results; paths to the
/// output directory and the thread count are excluded.
inline nlohmann::json config_fingerprint(const RunConfig& c, const std::vector<std::string>& events) {
  nlohmann::json j;
  j["events"] = events;
  j["metric"] = to_string(c.metric);
  j["feature_spec"] = c.feature_spec_path ? c.feature_spec_path->string() : "";
  j["class_override"] = c.class_override ? std::string(to_string(*c.class_override)) : "";
  j["netgen"] = to_json(c.netgen);
  j["dynamics"] = to_json(c.dynamics);
  j["n_readout"] = c.n_readout;
  j["n_runs"] = c.n_runs;
  j["base_seed"] = c.base_seed;
  j["reset_mode"] = to_string(c.reset_mode);
  j["model"] = to_string(c.model);
  j["baseline_raw_tiles"] = c.baseline_raw_tiles;
  return j;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Network for run seed `run_seed`: layout and readout streams both derive
/// from it by labelled sub-seeding.
inline NetworkGraph network_for_run(const RunConfig& c, std::uint64_t run_seed) {
  NetgenConfig ng = c.netgen;
  ng.seed = derive_seed(run_seed, "network");
  return make_network(ng, c.n_readout);
}

struct EventResult {
  std::string event;
  Classification classification;
  std::vector<std::size_t> bands;
  std::vector<TileLoc> locs;
  std::vector<double> tile_scores;
  ChangeMap map;
  std::vector<FeatureSequence> features;  // kept only when requested
};

struct EventOptions {
  DistanceMetric metric = DistanceMetric::correlation;
  Model model = Model::pann;
  ResetMode reset_mode = ResetMode::persistent;
  bool baseline_raw_tiles = false;
  bool keep_features = false;
  std::optional<DisasterClass> class_override;
};

/// One event through the full workflow. Both models share everything but
/// the vector source the scores are computed on.
inline EventResult process_event(const SceneBundle& scene, const FeatureEngSpec& spec, FeatureExtractor* extractor,
                                 const EventOptions& opt) {
  EventResult res;
  res.event = scene.event;
  res.classification = classify_event(scene, spec, opt.class_override);
  res.bands = select_bands(res.classification.cls, spec);
  for (auto m : res.bands) {
    if (m > scene.bands()) throw ConfigError("event '" + scene.event + "': band " + std::to_string(m) + " missing");
  }

  std::vector<Raster> normalized;
  normalized.reserve(scene.frames.size());
  for (const auto& f : scene.frames) normalized.push_back(normalize(f, scene.norm_stats, scene.missing));
  const std::size_t side = sensor_tile_side(scene.sensor);
  // raw baseline tiles use every band; otherwise the selected subset
  const bool all_bands = opt.model == Model::baseline && opt.baseline_raw_tiles;
  const auto tiles = tile(normalized, side, all_bands ? std::vector<std::size_t>{} : res.bands);
  normalized.clear();

  res.locs.reserve(tiles.size());
  for (const auto& t : tiles) res.locs.push_back(t.loc);
  res.tile_scores.resize(tiles.size());

  if (opt.model == Model::pann) {
    if (extractor == nullptr) throw ConfigError("process_event: PANN model needs a feature extractor");
    auto feats = extractor->extract(tiles, opt.reset_mode);
    for (std::size_t i = 0; i < feats.size(); ++i) {
      try {
        res.tile_scores[i] = change_score(feats[i], opt.metric);
      } catch (const Error& e) {
        throw Error("event '" + scene.event + "' tile (" + std::to_string(feats[i].loc.a) + "," +
                    std::to_string(feats[i].loc.b) + "): " + e.what());
      }
    }
    if (opt.keep_features) res.features = std::move(feats);
  } else {
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      res.tile_scores[i] = baseline_score(tiles[i], opt.metric, opt.baseline_raw_tiles);
    }
  }
  res.map = assemble_change_map(res.locs, res.tile_scores, scene.height(), scene.width(), side, scene.mask);
  res.map.event = scene.event;
  res.map.metric = opt.metric;
  return res;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

using ProgressFn = std::function<void(const std::string&)>;

/// Runs every configured repetition and returns the metrics report. Maps,
/// feature CSVs and report.json are written below config.out_dir.
inline nlohmann::json run_experiment(const RunConfig& config, const ProgressFn& progress = {}) {
  config.validate();
  auto log = [&](const std::string& msg) {
    if (progress) progress(msg);
  };

  std::vector<SceneBundle> scenes;
  std::vector<std::string> event_names;
  for (const auto& p : config.bundles) {
    scenes.push_back(load_bundle(p));
    event_names.push_back(scenes.back().event);
  }
  std::map<Sensor, FeatureEngSpec> specs;
  for (const auto& s : scenes) {
    if (specs.contains(s.sensor)) continue;
    auto spec = config.feature_spec_path ? load_feature_spec(*config.feature_spec_path) : default_feature_spec(s.sensor);
    if (spec.sensor != s.sensor && !config.class_override)
      throw ConfigError("feature spec targets " + std::string(to_string(spec.sensor)) + " but event '" + s.event +
                        "' is " + std::string(to_string(s.sensor)));
    specs.emplace(s.sensor, std::move(spec));
  }

  const auto fingerprint = config_fingerprint(config, event_names);
  const std::string config_hash = hex64(fnv1a(fingerprint.dump()));

  EventOptions opt;
  opt.metric = config.metric;
  opt.model = config.model;
  opt.reset_mode = config.reset_mode;
  opt.baseline_raw_tiles = config.baseline_raw_tiles;
  opt.keep_features = config.export_features;
  opt.class_override = config.class_override;

  std::map<std::string, std::vector<std::optional<double>>> class_runs;
  std::map<std::string, std::string> class_errors;
  nlohmann::json events_report = nlohmann::json::array();

  for (std::size_t r = 0; r < config.n_runs; ++r) {
    const std::uint64_t run_seed = config.base_seed + r;
    std::vector<std::size_t> order(scenes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 shuffle_rng(derive_seed(run_seed, "event-order"));
    // raw engine output, not a std distribution, so the order is portable
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng() % i);
      std::swap(order[i - 1], order[j]);
    }

    std::optional<NetworkGraph> graph;
    std::optional<FeatureExtractor> extractor;
    if (config.model == Model::pann) {
      graph.emplace(network_for_run(config, run_seed));
      extractor.emplace(*graph, config.dynamics, config.threads);
    }

    std::map<std::string, PixelPool> pools;
    const auto run_dir = config.out_dir / "maps" / ("run_" + std::to_string(r + 1));
    for (std::size_t idx : order) {
      const SceneBundle& scene = scenes[idx];
      log("run " + std::to_string(r + 1) + "/" + std::to_string(config.n_runs) + ": event '" + scene.event + "'");
      EventResult res;
      try {
        res = process_event(scene, specs.at(scene.sensor), extractor ? &*extractor : nullptr, opt);
      } catch (const Error& e) {
        throw Error("run " + std::to_string(r + 1) + ", event '" + scene.event + "': " + e.what());
      }
      const std::string category(to_string(scene.event_class.value_or(res.classification.cls)));
      pools[category].add(res.map, scene.mask);

      nlohmann::json ev = {{"run", r + 1},
                           {"event", scene.event},
                           {"category", category},
                           {"predicted_class", to_string(res.classification.cls)},
                           {"class_scores", res.classification.scores},
                           {"bands", res.bands},
                           {"tiles", res.locs.size()}};
      PixelPool own;
      own.add(res.map, scene.mask);
      try {
        ev["auprc"] = own.auprc();
      } catch (const DegenerateLabelsError& e) {
        ev["auprc"] = nullptr;
        ev["error"] = e.what();
      }
      events_report.push_back(ev);

      if (config.write_maps) {
        std::filesystem::create_directories(run_dir);
        write_cmap(run_dir / (scene.event + ".cmap"), res.map);
        write_pgm(run_dir / (scene.event + ".pgm"), res.map);
        write_invalid_pbm(run_dir / (scene.event + ".invalid.pbm"), res.map);
      }
      if (config.export_features) {
        const auto dir = config.out_dir / "features" / ("run_" + std::to_string(r + 1));
        std::filesystem::create_directories(dir);
        std::ofstream csv(dir / (scene.event + ".csv"));
        write_features_csv(csv, scene.event, res.features);
      }
    }

    for (auto& [category, pool] : pools) {
      try {
        class_runs[category].push_back(pool.auprc());
      } catch (const DegenerateLabelsError& e) {
        class_runs[category].push_back(std::nullopt);
        class_errors[category] = e.what();
      }
    }
  }

  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [category, runs] : class_runs) {
    nlohmann::json entry;
    if (class_errors.contains(category)) {
      entry["runs"] = nlohmann::json::array();
      entry["error"] = class_errors.at(category);
      classes[category] = entry;
      continue;
    }
    std::vector<double> values;
    for (const auto& v : runs) values.push_back(*v);
    entry["runs"] = values;
    if (values.size() >= 2) {
      const auto s = aggregate_runs(values);
      entry["mean"] = s.mean;
      entry["sem"] = s.sem;
    } else {
      entry["mean"] = values.front();
    }
    classes[category] = entry;
  }

  nlohmann::json report = {{"metric", to_string(config.metric)},
                           {"model", to_string(config.model)},
                           {"reset_mode", to_string(config.reset_mode)},
                           {"n_runs", config.n_runs},
                           {"base_seed", config.base_seed},
                           {"config_hash", config_hash},
                           {"classes", classes},
                           {"events", events_report},
                           {"generated_at", utc_timestamp()}};
  std::filesystem::create_directories(config.out_dir);
  std::ofstream(config.out_dir / "report.json") << report.dump(2) << '\n';
  return report;
}

/// Peak resident set size of this process in bytes.
inline std::size_t peak_rss_bytes() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<std::size_t>(usage.ru_maxrss) * 1024;  // Linux reports KiB
}

struct BenchResult {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t tiles = 0;
  std::size_t bands = 0;
  std::size_t threads = 0;
  double wall_seconds = 0.0;
  std::size_t peak_rss = 0;
};

/// Full per-scene PANN pipeline on a synthetic scene of the given dims.
inline BenchResult benchmark(std::size_t height, std::size_t width, std::size_t threads, std::uint64_t seed = 0,
                             const NetgenConfig& netgen = {}, const DynamicsConfig& dynamics = {}) {
  auto spec = fire_like_spec(height, width, seed);
  spec.changes.clear();
  spec.changes.push_back({{0, 0, std::min<std::size_t>(64, height), std::min<std::size_t>(64, width)},
                          fire_like_spec(64, 64, 0).changes.front().delta});
  const SceneBundle scene = generate_scene(spec);

  const auto start = std::chrono::steady_clock::now();
  NetgenConfig ng = netgen;
  ng.seed = derive_seed(seed, "network");
  const NetworkGraph graph = make_network(ng);
  FeatureExtractor extractor(graph, dynamics, threads);
  EventOptions opt;
  const auto res = process_event(scene, default_feature_spec(scene.sensor), &extractor, opt);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  return {height, width, res.locs.size(), res.bands.size(), threads, wall, peak_rss_bytes()};
}

inline nlohmann::json to_json(const BenchResult& b) {
  return {{"height", b.height},
          {"width", b.width},
          {"frames", frames_per_event},
          {"tiles", b.tiles},
          {"bands", b.bands},
          {"threads", b.threads},
          {"hardware_threads", std::thread::hardware_concurrency()},
          {"wall_seconds", b.wall_seconds},
          {"peak_rss_mb", static_cast<double>(b.peak_rss) / (1024.0 * 1024.0)}};
}

}  // namespace pann

#endif  // PANN_EXPERIMENT_HPP
