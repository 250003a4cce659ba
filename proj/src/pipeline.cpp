#include "geograph/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "geograph/error.hpp"

namespace geograph {

namespace {

std::size_t corpus_feature_dim(const std::vector<Scene> &scenes) {
  for (const Scene &s : scenes)
    if (!s.detections.empty())
      return s.detections.front().feature.size();
  throw EmptySceneError("train_pipeline: corpus has no detections");
}

std::vector<RefineSample> refine_samples_for(const Scene &scene) {
  std::map<std::int64_t, GeoPoint> truth;
  for (const SceneObject &o : scene.objects)
    truth[o.id] = o.position;
  std::vector<RefineSample> samples;
  for (const Detection &d : scene.detections) {
    if (!d.gt_object_id)
      continue;
    auto it = truth.find(*d.gt_object_id);
    if (it == truth.end())
      continue;
    if (!below_horizon(d.bbox.bottom_y(), d.image_height))
      continue;
    samples.push_back({project_detection(d), d.camera, it->second});
  }
  return samples;
}

} // namespace

TrainOutput train_pipeline(const std::vector<Scene> &scenes,
                           const TrainSettings &settings) {
  const std::size_t feat_dim = corpus_feature_dim(scenes);
  const std::size_t in_dim = feat_dim + kPoseBlockDim;

  TrainOutput out;
  out.checkpoint.seed = settings.seed;
  out.checkpoint.model = init_model(in_dim, settings.hidden_dim,
                                    settings.seed, settings.dropout_p);
  out.checkpoint.refine = init_refine(derive_seed(settings.seed, 1));
  adam_init(out.checkpoint.gnn_opt,
            tensor_views(std::as_const(out.checkpoint.model)));
  adam_init(out.checkpoint.refine_opt,
            tensor_views(std::as_const(out.checkpoint.refine)));

  TrainConfig cfg;
  cfg.learning_rate = settings.learning_rate;
  cfg.alpha = settings.focal_alpha;
  cfg.gamma = settings.focal_gamma;
  cfg.seed = settings.seed;

  // Graphs and refinement samples are fixed per scene; build once.
  struct SceneFixture {
    SceneGraph graph;
    GtGraph gt;
    std::vector<RefineSample> samples;
    bool has_graph = false;
  };
  std::vector<SceneFixture> fixtures(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    if (!scenes[s].detections.empty()) {
      fixtures[s].graph =
          build_scene_graph(scenes[s].detections, settings.zero_pose_block);
      fixtures[s].gt = build_gt_graph(scenes[s].detections);
      fixtures[s].has_graph = true;
    }
    fixtures[s].samples = refine_samples_for(scenes[s]);
  }

  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
    double edge_total = 0.0, refine_total = 0.0;
    std::size_t edge_steps = 0, refine_steps = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      SceneFixture &fx = fixtures[s];
      if (fx.has_graph) {
        Rng rng(derive_seed(settings.seed, 0x57E9000000ull + step));
        edge_total += train_step(out.checkpoint.model, fx.graph, fx.gt, cfg,
                                 out.checkpoint.gnn_opt, rng);
        ++edge_steps;
      }
      if (!fx.samples.empty()) {
        refine_total +=
            refine_loss(out.checkpoint.refine, fx.samples);
        RefineGradients grads =
            refine_loss_backward(out.checkpoint.refine, fx.samples);
        auto params = tensor_views(out.checkpoint.refine);
        auto grad_views = tensor_views(std::as_const(grads));
        adam_step(out.checkpoint.refine_opt, params, grad_views,
                  settings.learning_rate);
        ++refine_steps;
      }
      ++step;
    }
    TrainLogRow row;
    row.epoch = epoch;
    row.edge_loss = edge_steps ? edge_total / edge_steps : 0.0;
    row.refine_loss = refine_steps ? refine_total / refine_steps : 0.0;
    row.joint_loss = row.edge_loss + settings.refine_weight * row.refine_loss;
    out.log.push_back(row);
  }
  return out;
}

std::vector<Detection> pipeline_detections(const Scene &scene,
                                           const PipelineConfig &cfg) {
  std::vector<Detection> filtered =
      score_filter(scene.detections, cfg.score_threshold);
  // NMS runs per view; views are processed in ascending order.
  std::map<int, std::vector<Detection>> by_view;
  for (Detection &d : filtered)
    by_view[d.view_id].push_back(std::move(d));
  std::vector<Detection> kept;
  for (auto &[view, dets] : by_view) {
    for (Detection &d : nms(dets, cfg.nms_iou))
      kept.push_back(std::move(d));
  }
  return kept;
}

SceneEval eval_scene(const Scene &scene, const GnnModel &model,
                     const RefineNet &refine_net, const PipelineConfig &cfg) {
  SceneEval ev;
  ev.scene_id = scene.scene_id;

  std::vector<Detection> kept = pipeline_detections(scene, cfg);
  ev.n_detections = kept.size();
  std::map<std::int64_t, GeoPoint> truth;
  for (const SceneObject &o : scene.objects)
    truth[o.id] = o.position;

  if (kept.empty()) {
    ev.geo.unmatched_truths = truth.size();
    return ev;
  }

  SceneGraph graph = build_scene_graph(kept, cfg.zero_pose_block);
  ForwardResult fwd = model_forward(model, graph, RunMode::kEval);
  graph.edge_scores = fwd.edge_scores;

  GtGraph gt = build_gt_graph(kept);
  for (std::size_t k = 0; k < graph.edges.size(); ++k)
    ev.scored_pairs.emplace_back(
        graph.edge_scores[k],
        gt.is_positive(graph.edges[k].i, graph.edges[k].j) ? 1 : 0);

  SceneGraph decided = threshold_edges(graph, cfg.edge_threshold);
  ev.components = connected_components(decided);
  ev.reid_at_threshold = reid_edge_metrics(decided, gt);
  ev.average_precision = reid_edge_metrics(graph, gt).average_precision;

  std::vector<std::size_t> est_component;
  for (std::size_t c = 0; c < ev.components.size(); ++c) {
    try {
      ev.estimates.push_back(localize_object(ev.components[c], kept,
                                             refine_net));
      est_component.push_back(c);
    } catch (const NoValidViewsError &) {
      // Component has no usable ground ray; contributes no estimate.
    }
  }
  auto matching = match_components_to_objects(ev.components, kept);
  std::vector<std::optional<std::int64_t>> est_matching;
  est_matching.reserve(est_component.size());
  for (std::size_t c : est_component)
    est_matching.push_back(matching[c]);
  ev.geo = geo_mae(ev.estimates, truth, est_matching);
  return ev;
}

CorpusEvalReport eval_corpus(const std::vector<Scene> &scenes,
                             const GnnModel &model, const RefineNet &refine_net,
                             const PipelineConfig &cfg) {
  CorpusEvalReport report;
  report.scenes.resize(scenes.size());
  const std::int64_t n = static_cast<std::int64_t>(scenes.size());
  // Exceptions must not escape the parallel region; remember the first one
  // and rethrow it afterwards.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      report.scenes[static_cast<std::size_t>(i)] =
          eval_scene(scenes[static_cast<std::size_t>(i)], model, refine_net,
                     cfg);
    } catch (...) {
#pragma omp critical
      if (!failure)
        failure = std::current_exception();
    }
  }
  if (failure)
    std::rethrow_exception(failure);

  // Pooled counts; AP averaged over scenes that have positive edges.
  std::size_t tp = 0, fp = 0, fn = 0;
  double ap_sum = 0.0;
  std::size_t ap_scenes = 0;
  std::vector<std::pair<double, int>> all_pairs;
  double err_sum = 0.0;
  std::size_t err_count = 0;
  for (const SceneEval &ev : report.scenes) {
    tp += ev.reid_at_threshold.true_positives;
    fp += ev.reid_at_threshold.false_positives;
    fn += ev.reid_at_threshold.false_negatives;
    if (ev.reid_at_threshold.true_positives +
            ev.reid_at_threshold.false_negatives >
        0) {
      ap_sum += ev.average_precision;
      ++ap_scenes;
    }
    all_pairs.insert(all_pairs.end(), ev.scored_pairs.begin(),
                     ev.scored_pairs.end());
    for (double e : ev.geo.per_object_errors)
      err_sum += e;
    err_count += ev.geo.per_object_errors.size();
    report.geo_matched += ev.geo.matched;
    report.geo_unmatched_estimates += ev.geo.unmatched_estimates;
    report.geo_unmatched_truths += ev.geo.unmatched_truths;
  }
  report.reid.true_positives = tp;
  report.reid.false_positives = fp;
  report.reid.false_negatives = fn;
  report.reid.precision =
      (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  report.reid.recall =
      (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  report.reid.f1 =
      (report.reid.precision + report.reid.recall) > 0.0
          ? 2.0 * report.reid.precision * report.reid.recall /
                (report.reid.precision + report.reid.recall)
          : 0.0;
  report.reid.average_precision =
      ap_scenes ? ap_sum / static_cast<double>(ap_scenes) : 0.0;
  report.pairwise_f1_pooled = pairwise_f1(all_pairs, cfg.edge_threshold);
  report.geo_mae_m =
      err_count ? err_sum / static_cast<double>(err_count) : 0.0;
  return report;
}

std::string render_report_json(const CorpusEvalReport &report,
                               std::uint64_t seed,
                               const std::string &digest) {
  nlohmann::json j;
  j["schema"] = "geograph-report/1";
  j["seed"] = seed;
  j["config_digest"] = digest;
  j["reid"] = {{"true_positives", report.reid.true_positives},
               {"false_positives", report.reid.false_positives},
               {"false_negatives", report.reid.false_negatives},
               {"precision", report.reid.precision},
               {"recall", report.reid.recall},
               {"f1", report.reid.f1},
               {"average_precision", report.reid.average_precision}};
  j["pairwise_f1"] = report.pairwise_f1_pooled;
  j["geo"] = {{"mae_m", report.geo_mae_m},
              {"matched", report.geo_matched},
              {"unmatched_estimates", report.geo_unmatched_estimates},
              {"unmatched_truths", report.geo_unmatched_truths}};
  j["n_scenes"] = report.scenes.size();
  return j.dump() + "\n";
}

std::string render_report_csv(const CorpusEvalReport &report) {
  std::ostringstream out;
  out << "scene_id,n_detections,n_components,tp,fp,fn,precision,recall,f1,"
         "average_precision,geo_mae_m,geo_matched,geo_unmatched_truths\n";
  out.precision(17);
  for (const SceneEval &ev : report.scenes) {
    out << ev.scene_id << ',' << ev.n_detections << ','
        << ev.components.size() << ',' << ev.reid_at_threshold.true_positives
        << ',' << ev.reid_at_threshold.false_positives << ','
        << ev.reid_at_threshold.false_negatives << ','
        << ev.reid_at_threshold.precision << ',' << ev.reid_at_threshold.recall
        << ',' << ev.reid_at_threshold.f1 << ',' << ev.average_precision << ','
        << ev.geo.mae << ',' << ev.geo.matched << ','
        << ev.geo.unmatched_truths << '\n';
  }
  return out.str();
}

std::string render_train_log_csv(const std::vector<TrainLogRow> &log) {
  std::ostringstream out;
  out << "epoch,edge_loss,refine_loss,joint_loss\n";
  out.precision(17);
  for (const TrainLogRow &row : log)
    out << row.epoch << ',' << row.edge_loss << ',' << row.refine_loss << ','
        << row.joint_loss << '\n';
  return out.str();
}

std::string config_digest(const std::string &canonical_config) {
  std::uint64_t hash = 0xCBF29CE484222325ull;
  for (unsigned char c : canonical_config) {
    hash ^= c;
    hash *= 0x100000001B3ull;
  }
  std::ostringstream out;
  out << std::hex << hash;
  return out.str();
}

} // namespace geograph
