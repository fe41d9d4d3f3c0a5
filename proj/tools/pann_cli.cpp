// pann: command-line driver for the nanowire-network change detector.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pann/experiment.hpp"
#include "pann/graph_io.hpp"
#include "pann/scenegen.hpp"

namespace fs = std::filesystem;

namespace {

struct RunFlags {
  std::vector<std::string> bundles;
  std::string metric = "correlation";
  std::string model = "pann";
  std::size_t runs = 5;
  std::uint64_t seed = 0;
  bool reset_per_tile = false;
  std::string feature_spec;
  std::string class_override;
  std::size_t threads = 8;
  std::string out = "out";
  std::string config;
  bool baseline_raw_tiles = false;
  bool no_maps = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("bundles", f.bundles, "SceneBundle directories")->required();
  cmd->add_option("--metric", f.metric, "euclidean | cosine | correlation")
      ->check(CLI::IsMember({"euclidean", "cosine", "correlation"}));
  cmd->add_option("--model", f.model, "pann | baseline")->check(CLI::IsMember({"pann", "baseline"}));
  cmd->add_option("--runs", f.runs, "number of repetitions")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "base seed; run r uses seed + r");
  cmd->add_flag("--reset-per-tile", f.reset_per_tile, "zero network state before every tile sequence");
  cmd->add_option("--feature-spec", f.feature_spec, "feature-engineering JSON")->check(CLI::ExistingFile);
  cmd->add_option("--class-override", f.class_override, "skip the decision tree and use this class")
      ->check(CLI::IsMember({"fire", "flood", "hurricane", "landslide"}));
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--config", f.config, "JSON with optional \"netgen\" and \"dynamics\" objects")
      ->check(CLI::ExistingFile);
  cmd->add_flag("--baseline-raw-tiles", f.baseline_raw_tiles, "baseline compares full-resolution all-band tiles");
  cmd->add_flag("--no-maps", f.no_maps, "do not write change-map files");
}

pann::RunConfig to_run_config(const RunFlags& f) {
  pann::RunConfig c;
  for (const auto& b : f.bundles) c.bundles.emplace_back(b);
  c.metric = pann::parse_metric(f.metric);
  c.model = pann::parse_model(f.model);
  c.n_runs = f.runs;
  c.base_seed = f.seed;
  c.reset_mode = f.reset_per_tile ? pann::ResetMode::per_tile : pann::ResetMode::persistent;
  if (!f.feature_spec.empty()) c.feature_spec_path = f.feature_spec;
  if (!f.class_override.empty()) c.class_override = pann::parse_disaster_class(f.class_override);
  c.threads = f.threads;
  c.out_dir = f.out;
  c.baseline_raw_tiles = f.baseline_raw_tiles;
  c.write_maps = !f.no_maps;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    const auto j = nlohmann::json::parse(in);
    if (j.contains("netgen")) c.netgen = pann::netgen_config_from_json(j.at("netgen"));
    if (j.contains("dynamics")) c.dynamics = pann::dynamics_config_from_json(j.at("dynamics"));
    c.n_readout = j.value("n_readout", c.n_readout);
  }
  return c;
}

void log_line(const std::string& msg) { std::cerr << "[pann] " << msg << '\n'; }

int cmd_run(const RunFlags& f, bool export_features) {
  auto c = to_run_config(f);
  c.export_features = export_features;
  const auto report = pann::run_experiment(c, log_line);
  for (const auto& [cls, entry] : report.at("classes").items()) {
    if (entry.contains("error")) {
      log_line(cls + ": " + entry.at("error").get<std::string>());
    } else if (entry.contains("sem")) {
      std::fprintf(stderr, "[pann] %s: AUPRC %.2f%% +- %.2f\n", cls.c_str(), 100.0 * entry.at("mean").get<double>(),
                   100.0 * entry.at("sem").get<double>());
    } else {
      std::fprintf(stderr, "[pann] %s: AUPRC %.2f%%\n", cls.c_str(), 100.0 * entry.at("mean").get<double>());
    }
  }
  log_line("report written to " + (c.out_dir / "report.json").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free change detection with simulated memristive nanowire networks"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "run the change-detection experiment over SceneBundles");
  add_run_flags(run, run_flags);

  RunFlags export_flags;
  export_flags.runs = 1;
  auto* exp = app.add_subcommand("export-features", "run once and write per-tile feature CSVs");
  add_run_flags(exp, export_flags);

  std::size_t bench_h = 574, bench_w = 509, bench_threads = 8;
  std::uint64_t bench_seed = 0;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "time the per-scene pipeline on a synthetic scene");
  bench->add_option("--height", bench_h)->check(CLI::PositiveNumber);
  bench->add_option("--width", bench_w)->check(CLI::PositiveNumber);
  bench->add_option("--threads", bench_threads)->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed);
  bench->add_option("--out", bench_out, "write the result JSON here");

  std::string gen_preset = "suite", gen_out;
  std::size_t gen_h = 256, gen_w = 256;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen-synth", "write synthetic SceneBundles");
  gen->add_option("--preset", gen_preset, "fire | flood | quiet | suite")
      ->check(CLI::IsMember({"fire", "flood", "quiet", "suite"}));
  gen->add_option("--height", gen_h)->check(CLI::PositiveNumber);
  gen->add_option("--width", gen_w)->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out, "output directory")->required();

  std::string inspect_path;
  std::vector<std::size_t> inspect_pixel;
  auto* inspect = app.add_subcommand("inspect", "summarise a SceneBundle");
  inspect->add_option("bundle", inspect_path)->required()->check(CLI::ExistingDirectory);
  inspect->add_option("--pixel", inspect_pixel, "row col: print every frame/band value there")->expected(2);

  std::uint64_t graph_seed = 0;
  std::string graph_out;
  std::uint32_t graph_readout = 400;
  auto* graph = app.add_subcommand("graph", "generate a nanowire network and write it as JSON");
  graph->add_option("--seed", graph_seed);
  graph->add_option("--readout", graph_readout);
  graph->add_option("--out", graph_out, "output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_flags, false);
    if (*exp) return cmd_run(export_flags, true);

    if (*bench) {
      const auto r = pann::benchmark(bench_h, bench_w, bench_threads, bench_seed);
      const auto j = pann::to_json(r);
      std::cout << j.dump(2) << '\n';
      if (!bench_out.empty()) std::ofstream(bench_out) << j.dump(2) << '\n';
      return 0;
    }

    if (*gen) {
      const fs::path out(gen_out);
      auto write = [&](const pann::SynthSpec& spec, const fs::path& dir) {
        pann::save_bundle(pann::generate_scene(spec), dir);
        log_line("wrote " + dir.string());
      };
      if (gen_preset == "fire") write(pann::fire_like_spec(gen_h, gen_w, gen_seed), out);
      if (gen_preset == "flood") write(pann::flood_like_spec(gen_h, gen_w, gen_seed), out);
      if (gen_preset == "quiet") write(pann::quiet_spec(gen_h, gen_w, gen_seed), out);
      if (gen_preset == "suite") {
        write(pann::fire_like_spec(gen_h, gen_w, gen_seed), out / "fire");
        write(pann::flood_like_spec(gen_h, gen_w, gen_seed + 1), out / "flood");
        write(pann::quiet_spec(gen_h, gen_w, gen_seed + 2), out / "quiet");
      }
      return 0;
    }

    if (*inspect) {
      const auto scene = pann::load_bundle(inspect_path);
      std::size_t counts[3] = {0, 0, 0};
      for (auto m : scene.mask) ++counts[m];
      std::size_t missing = 0;
      for (auto m : scene.missing) missing += m;
      std::cout << "event: " << scene.event << '\n'
                << "sensor: " << pann::to_string(scene.sensor) << '\n'
                << "category: " << (scene.event_class ? pann::to_string(*scene.event_class) : "(unset)") << '\n'
                << "dims: " << scene.bands() << " bands x " << scene.height() << " x " << scene.width() << ", "
                << scene.frames.size() << " frames\n"
                << "mask: " << counts[0] << " unaffected, " << counts[1] << " affected, " << counts[2] << " cloud\n"
                << "missing: " << missing << '\n';
      for (std::size_t b = 0; b < scene.bands(); ++b) {
        std::printf("band %02zu %-4s log-range [%.6g, %.6g]\n", b + 1, scene.band_labels[b].c_str(),
                    scene.norm_stats[b].min, scene.norm_stats[b].max);
      }
      if (inspect_pixel.size() == 2) {
        const auto r = inspect_pixel[0], c = inspect_pixel[1];
        if (r >= scene.height() || c >= scene.width()) throw pann::ConfigError("inspect: pixel outside the scene");
        for (std::size_t t = 0; t < scene.frames.size(); ++t) {
          std::printf("frame %zu:", t + 1);
          for (std::size_t b = 0; b < scene.bands(); ++b) std::printf(" %.9g", scene.frames[t].at(b, r, c));
          std::printf("\n");
        }
      }
      return 0;
    }

    if (*graph) {
      pann::NetgenConfig c;
      c.seed = graph_seed;
      const auto g = pann::make_network(c, graph_readout);
      const auto text = pann::to_json(g).dump();
      if (graph_out.empty()) {
        std::cout << text << '\n';
      } else {
        std::ofstream(graph_out) << text << '\n';
      }
      log_line(std::to_string(g.node_count()) + " nodes, " + std::to_string(g.edge_count()) + " edges");
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "pann: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
