// geograph command line: simulate | train | eval | locate.
//
// Exit codes: 0 ok, 2 config error, 3 input error, 4 missing artifact.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "geograph/error.hpp"
#include "geograph/pipeline.hpp"

namespace {

using geograph::PipelineConfig;
using geograph::SimConfig;
using geograph::TrainSettings;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitMissing = 4;

struct RunConfig {
  SimConfig sim;
  TrainSettings train;
  PipelineConfig pipeline;
  std::string corpus;
  std::string checkpoint;
  std::string out;
  std::string train_log;
};

// Flat JSON config mirroring the flags; flags override file values.
void apply_config_file(RunConfig &cfg, const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw geograph::IoError("config file not readable: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw geograph::SchemaError("config file is not valid JSON: " + path);

  auto get = [&](const char *key, auto &target) {
    if (j.contains(key))
      target = j[key].get<std::remove_reference_t<decltype(target)>>();
  };
  get("seed", cfg.sim.seed);
  get("scenes", cfg.sim.n_scenes);
  get("views", cfg.sim.views_per_scene);
  get("objects_min", cfg.sim.objects_min);
  get("objects_max", cfg.sim.objects_max);
  get("area_extent_m", cfg.sim.area_extent_m);
  get("camera_height_m", cfg.sim.camera_height_m);
  get("feature_dim", cfg.sim.feature_dim);
  get("feature_noise", cfg.sim.feature_noise_sigma);
  get("pose_noise_m", cfg.sim.pose_noise_sigma_m);
  get("heading_noise_rad", cfg.sim.heading_noise_sigma_rad);
  get("bbox_noise_px", cfg.sim.bbox_noise_px);
  get("false_positive_rate", cfg.sim.false_positive_rate);
  get("missed_detection_rate", cfg.sim.missed_detection_rate);
  get("image_w", cfg.sim.image_w);
  get("image_h", cfg.sim.image_h);
  get("hidden_dim", cfg.train.hidden_dim);
  get("dropout", cfg.train.dropout_p);
  get("lr", cfg.train.learning_rate);
  get("epochs", cfg.train.epochs);
  get("focal_alpha", cfg.train.focal_alpha);
  get("focal_gamma", cfg.train.focal_gamma);
  get("refine_weight", cfg.train.refine_weight);
  get("zero_pose_block", cfg.train.zero_pose_block);
  get("score_threshold", cfg.pipeline.score_threshold);
  get("nms_iou", cfg.pipeline.nms_iou);
  get("edge_threshold", cfg.pipeline.edge_threshold);
  get("corpus", cfg.corpus);
  get("checkpoint", cfg.checkpoint);
  get("out", cfg.out);
}

std::string canonical_config(const RunConfig &cfg, const std::string &cmd) {
  json j;
  j["cmd"] = cmd;
  j["seed"] = cfg.sim.seed;
  j["scenes"] = cfg.sim.n_scenes;
  j["views"] = cfg.sim.views_per_scene;
  j["objects_min"] = cfg.sim.objects_min;
  j["objects_max"] = cfg.sim.objects_max;
  j["area_extent_m"] = cfg.sim.area_extent_m;
  j["camera_height_m"] = cfg.sim.camera_height_m;
  j["feature_dim"] = cfg.sim.feature_dim;
  j["feature_noise"] = cfg.sim.feature_noise_sigma;
  j["pose_noise_m"] = cfg.sim.pose_noise_sigma_m;
  j["heading_noise_rad"] = cfg.sim.heading_noise_sigma_rad;
  j["bbox_noise_px"] = cfg.sim.bbox_noise_px;
  j["false_positive_rate"] = cfg.sim.false_positive_rate;
  j["missed_detection_rate"] = cfg.sim.missed_detection_rate;
  j["image_w"] = cfg.sim.image_w;
  j["image_h"] = cfg.sim.image_h;
  j["hidden_dim"] = cfg.train.hidden_dim;
  j["dropout"] = cfg.train.dropout_p;
  j["lr"] = cfg.train.learning_rate;
  j["epochs"] = cfg.train.epochs;
  j["focal_alpha"] = cfg.train.focal_alpha;
  j["focal_gamma"] = cfg.train.focal_gamma;
  j["refine_weight"] = cfg.train.refine_weight;
  j["zero_pose_block"] = cfg.train.zero_pose_block;
  j["score_threshold"] = cfg.pipeline.score_threshold;
  j["nms_iou"] = cfg.pipeline.nms_iou;
  j["edge_threshold"] = cfg.pipeline.edge_threshold;
  return j.dump();
}

int validate_sim_config(const SimConfig &sim) {
  auto fail = [](const char *field) {
    std::cerr << "config error: invalid value for " << field << "\n";
    return kExitConfig;
  };
  if (sim.objects_min > sim.objects_max)
    return fail("objects_min/objects_max");
  if (sim.area_extent_m <= 0.0)
    return fail("area_extent_m");
  if (sim.camera_height_m <= 0.0)
    return fail("camera_height_m");
  if (sim.feature_noise_sigma < 0.0)
    return fail("feature_noise");
  if (sim.pose_noise_sigma_m < 0.0)
    return fail("pose_noise_m");
  if (sim.heading_noise_sigma_rad < 0.0)
    return fail("heading_noise_rad");
  if (sim.bbox_noise_px < 0.0)
    return fail("bbox_noise_px");
  if (sim.false_positive_rate < 0.0 || sim.false_positive_rate >= 1.0)
    return fail("false_positive_rate");
  if (sim.missed_detection_rate < 0.0 || sim.missed_detection_rate >= 1.0)
    return fail("missed_detection_rate");
  if (sim.image_w <= 0 || sim.image_h <= 0)
    return fail("image_w/image_h");
  return kExitOk;
}

int cmd_simulate(const RunConfig &cfg) {
  if (int rc = validate_sim_config(cfg.sim); rc != kExitOk)
    return rc;
  auto scenes = geograph::generate_scenes(cfg.sim);
  if (cfg.out.empty()) {
    std::cerr << "simulate: missing -o/--out path\n";
    return kExitConfig;
  }
  geograph::write_scenes(scenes, cfg.out);
  std::size_t objects = 0, detections = 0;
  for (const auto &s : scenes) {
    objects += s.objects.size();
    detections += s.detections.size();
  }
  std::cout << "scenes " << scenes.size() << " objects " << objects
            << " detections " << detections << " seed " << cfg.sim.seed
            << " digest "
            << geograph::config_digest(canonical_config(cfg, "simulate"))
            << " -> " << cfg.out << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig &cfg) {
  if (cfg.corpus.empty() || !std::filesystem::exists(cfg.corpus)) {
    std::cerr << "train: corpus not found: " << cfg.corpus << "\n";
    return kExitMissing;
  }
  auto scenes = geograph::read_scenes(cfg.corpus);
  TrainSettings settings = cfg.train;
  settings.seed = cfg.sim.seed;
  auto result = geograph::train_pipeline(scenes, settings);
  result.checkpoint.config_digest =
      geograph::config_digest(canonical_config(cfg, "train"));
  if (cfg.out.empty()) {
    std::cerr << "train: missing -o/--out checkpoint path\n";
    return kExitConfig;
  }
  geograph::save_checkpoint(result.checkpoint, cfg.out);
  const std::string log_csv = geograph::render_train_log_csv(result.log);
  std::cout << log_csv;
  if (!cfg.train_log.empty()) {
    std::ofstream log_out(cfg.train_log);
    if (!log_out)
      throw geograph::IoError("train: cannot open log file " + cfg.train_log);
    log_out << log_csv;
  }
  std::cerr << "checkpoint " << cfg.out << " seed " << settings.seed
            << " digest " << result.checkpoint.config_digest << "\n";
  return kExitOk;
}

int load_inputs(const RunConfig &cfg, std::vector<geograph::Scene> &scenes,
                geograph::Checkpoint &ckpt) {
  if (cfg.checkpoint.empty() || !std::filesystem::exists(cfg.checkpoint)) {
    std::cerr << "missing checkpoint: " << cfg.checkpoint << "\n";
    return kExitMissing;
  }
  if (cfg.corpus.empty() || !std::filesystem::exists(cfg.corpus)) {
    std::cerr << "missing corpus: " << cfg.corpus << "\n";
    return kExitInput;
  }
  ckpt = geograph::load_checkpoint(cfg.checkpoint);
  scenes = geograph::read_scenes(cfg.corpus);
  return kExitOk;
}

int cmd_eval(const RunConfig &cfg) {
  std::vector<geograph::Scene> scenes;
  geograph::Checkpoint ckpt;
  if (int rc = load_inputs(cfg, scenes, ckpt); rc != kExitOk)
    return rc;
  PipelineConfig pipe = cfg.pipeline;
  pipe.zero_pose_block = cfg.train.zero_pose_block;
  auto report = geograph::eval_corpus(scenes, ckpt.model, ckpt.refine, pipe);
  const std::string digest =
      geograph::config_digest(canonical_config(cfg, "eval"));
  const std::string body =
      geograph::render_report_json(report, cfg.sim.seed, digest);
  if (!cfg.out.empty()) {
    std::ofstream out(cfg.out);
    if (!out)
      throw geograph::IoError("eval: cannot open " + cfg.out);
    out << body;
    std::filesystem::path csv_path(cfg.out);
    csv_path.replace_extension(".csv");
    std::ofstream csv(csv_path);
    csv << geograph::render_report_csv(report);
  }
  std::cout << body;
  return kExitOk;
}

int cmd_locate(const RunConfig &cfg) {
  std::vector<geograph::Scene> scenes;
  geograph::Checkpoint ckpt;
  if (int rc = load_inputs(cfg, scenes, ckpt); rc != kExitOk)
    return rc;
  PipelineConfig pipe = cfg.pipeline;
  pipe.zero_pose_block = cfg.train.zero_pose_block;
  for (const auto &scene : scenes) {
    auto ev = geograph::eval_scene(scene, ckpt.model, ckpt.refine, pipe);
    for (const auto &est : ev.estimates) {
      std::string nodes;
      for (std::size_t v : est.object_component)
        nodes += (nodes.empty() ? "" : " ") + std::to_string(v);
      std::printf("scene %lld nodes [%s] views %zu",
                  static_cast<long long>(scene.scene_id), nodes.c_str(),
                  est.per_view_estimates.size());
      for (const auto &p : est.per_view_estimates)
        std::printf(" (%.7f,%.7f)", geograph::lat_degrees(p),
                    geograph::lng_degrees(p));
      std::printf(" final %.7f %.7f\n", geograph::lat_degrees(est.final),
                  geograph::lng_degrees(est.final));
    }
  }
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"geograph: multi-view re-identification and geo-localization"};
  app.require_subcommand(1);

  RunConfig cfg;

  // --config loads defaults first; remaining flags override.
  std::string config_path;
  for (int i = 1; i < argc - 1; ++i) {
    std::string a = argv[i];
    if (a == "--config")
      config_path = argv[i + 1];
  }
  if (!config_path.empty()) {
    try {
      apply_config_file(cfg, config_path);
    } catch (const std::exception &ex) {
      std::cerr << "config error: " << ex.what() << "\n";
      return kExitConfig;
    }
  }

  std::string config_dummy;
  app.add_option("--config", config_dummy, "JSON config file (flat keys)");

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--seed", cfg.sim.seed, "master RNG seed");
    sub->add_option("--config", config_dummy, "JSON config file (flat keys)");
  };

  CLI::App *sim = app.add_subcommand("simulate", "generate a scene corpus");
  add_common(sim);
  sim->add_option("--scenes", cfg.sim.n_scenes, "number of scenes");
  sim->add_option("--views", cfg.sim.views_per_scene, "views per scene");
  sim->add_option("--objects-min", cfg.sim.objects_min);
  sim->add_option("--objects-max", cfg.sim.objects_max);
  sim->add_option("--extent", cfg.sim.area_extent_m, "placement radius (m)");
  sim->add_option("--feature-dim", cfg.sim.feature_dim);
  sim->add_option("--feature-noise", cfg.sim.feature_noise_sigma);
  sim->add_option("--pose-noise", cfg.sim.pose_noise_sigma_m);
  sim->add_option("--heading-noise", cfg.sim.heading_noise_sigma_rad);
  sim->add_option("--bbox-noise", cfg.sim.bbox_noise_px);
  sim->add_option("--fp-rate", cfg.sim.false_positive_rate);
  sim->add_option("--miss-rate", cfg.sim.missed_detection_rate);
  sim->add_option("-o,--out", cfg.out, "corpus output path (.jsonl)");

  CLI::App *train = app.add_subcommand("train", "train GNN + refinement");
  add_common(train);
  train->add_option("--corpus", cfg.corpus, "scene corpus (.jsonl)");
  train->add_option("--epochs", cfg.train.epochs);
  train->add_option("--lr", cfg.train.learning_rate);
  train->add_option("--dropout", cfg.train.dropout_p);
  train->add_option("--hidden-dim", cfg.train.hidden_dim);
  train->add_option("--refine-weight", cfg.train.refine_weight,
                    "lambda between edge and refinement losses");
  train->add_flag("--zero-pose-block", cfg.train.zero_pose_block,
                  "ablation: zero the geometric block of node embeddings");
  train->add_option("--train-log", cfg.train_log, "also write CSV log here");
  train->add_option("-o,--out", cfg.out, "checkpoint output path");

  CLI::App *eval = app.add_subcommand("eval", "run inference + metrics");
  add_common(eval);
  eval->add_option("--corpus", cfg.corpus);
  eval->add_option("--checkpoint", cfg.checkpoint);
  eval->add_option("--score-threshold", cfg.pipeline.score_threshold);
  eval->add_option("--nms-iou", cfg.pipeline.nms_iou);
  eval->add_option("--edge-threshold", cfg.pipeline.edge_threshold);
  eval->add_flag("--zero-pose-block", cfg.train.zero_pose_block);
  eval->add_option("-o,--out", cfg.out, "report JSON path (CSV next to it)");

  CLI::App *locate = app.add_subcommand("locate", "per-object coordinates");
  add_common(locate);
  locate->add_option("--corpus", cfg.corpus, "scene file (.jsonl)");
  locate->add_option("--checkpoint", cfg.checkpoint);
  locate->add_option("--score-threshold", cfg.pipeline.score_threshold);
  locate->add_option("--edge-threshold", cfg.pipeline.edge_threshold);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(cfg);
    if (train->parsed())
      return cmd_train(cfg);
    if (eval->parsed())
      return cmd_eval(cfg);
    if (locate->parsed())
      return cmd_locate(cfg);
  } catch (const geograph::SchemaError &ex) {
    std::cerr << "input error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const geograph::IoError &ex) {
    std::cerr << "input error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const geograph::DimensionMismatchError &ex) {
    // corpus and checkpoint disagree on feature dimensions
    std::cerr << "input error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const geograph::EmptySceneError &ex) {
    std::cerr << "input error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const std::exception &ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
