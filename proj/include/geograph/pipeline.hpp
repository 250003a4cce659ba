#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geograph/checkpoint.hpp"
#include "geograph/evaluation.hpp"
#include "geograph/simulator.hpp"

namespace geograph {

// Inference knobs (score filter -> per-view NMS -> graph -> GNN -> edge
// threshold -> components -> localization).
struct PipelineConfig {
  double score_threshold = 0.5;
  double nms_iou = 0.5;
  double edge_threshold = 0.5;
  bool zero_pose_block = false; // ablation: geometric cues removed
};

struct TrainSettings {
  std::size_t hidden_dim = kDefaultHiddenDim;
  double dropout_p = 0.2;
  double learning_rate = 1e-3;
  std::size_t epochs = 10;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  std::uint64_t seed = 0;
  double refine_weight = 1.0; // lambda between edge and refinement losses
  bool zero_pose_block = false;
};

struct TrainLogRow {
  std::size_t epoch = 0;
  double edge_loss = 0.0;
  double refine_loss = 0.0;
  double joint_loss = 0.0;
};

struct TrainOutput {
  Checkpoint checkpoint;
  std::vector<TrainLogRow> log;
};

// Joint end-to-end training: per scene, one Adam step on the mean focal edge
// loss and one on the refinement MSE (weighted by refine_weight in the
// reported joint loss). Scene order is fixed; all stochasticity derives from
// settings.seed.
TrainOutput train_pipeline(const std::vector<Scene> &scenes,
                           const TrainSettings &settings);

// Everything cmd_eval needs from one scene. kept_detections are the
// detections surviving score filter + NMS, in pipeline order.
struct SceneEval {
  std::int64_t scene_id = 0;
  std::size_t n_detections = 0; // kept
  std::vector<std::vector<std::size_t>> components;
  std::vector<ObjectEstimate> estimates;
  ReidReport reid_at_threshold; // strict metrics on the 0.5-threshold graph
  double average_precision = 0.0; // swept on the full scored graph
  std::vector<std::pair<double, int>> scored_pairs; // (score, gt) per edge
  GeoReport geo;
};

SceneEval eval_scene(const Scene &scene, const GnnModel &model,
                     const RefineNet &refine_net, const PipelineConfig &cfg);

// The detections a scene contributes to the pipeline, after score filter and
// per-view NMS. Exposed so integration tests can replay cmd_eval manually.
std::vector<Detection> pipeline_detections(const Scene &scene,
                                           const PipelineConfig &cfg);

struct CorpusEvalReport {
  std::vector<SceneEval> scenes;
  ReidReport reid;              // pooled counts; AP = mean over scenes
  double pairwise_f1_pooled = 0.0;
  double geo_mae_m = 0.0;       // pooled over matched objects
  std::size_t geo_matched = 0;
  std::size_t geo_unmatched_estimates = 0;
  std::size_t geo_unmatched_truths = 0;
};

CorpusEvalReport eval_corpus(const std::vector<Scene> &scenes,
                             const GnnModel &model, const RefineNet &refine_net,
                             const PipelineConfig &cfg);

// Deterministic JSON / CSV renderings shared by the CLI and the tests.
std::string render_report_json(const CorpusEvalReport &report,
                               std::uint64_t seed,
                               const std::string &config_digest);
std::string render_report_csv(const CorpusEvalReport &report);
std::string render_train_log_csv(const std::vector<TrainLogRow> &log);

// FNV-1a hash of a canonical config rendering, hex encoded.
std::string config_digest(const std::string &canonical_config);

} // namespace geograph
