#include "geograph/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "geograph/error.hpp"

namespace geograph {

namespace {

using nlohmann::json;

json tensors_to_json(std::span<const std::span<const double>> views) {
  json arr = json::array();
  for (const auto &v : views)
    arr.push_back(std::vector<double>(v.begin(), v.end()));
  return arr;
}

void tensors_from_json(const json &arr,
                       std::span<const std::span<double>> views,
                       const char *what) {
  if (!arr.is_array() || arr.size() != views.size())
    throw SchemaError(std::string("checkpoint: tensor list size mismatch in ") +
                      what);
  for (std::size_t i = 0; i < views.size(); ++i) {
    auto vals = arr[i].get<std::vector<double>>();
    if (vals.size() != views[i].size())
      throw SchemaError(std::string("checkpoint: tensor shape mismatch in ") +
                        what);
    std::copy(vals.begin(), vals.end(), views[i].begin());
  }
}

json adam_to_json(const AdamState &s) {
  json j;
  j["t"] = s.t;
  j["m"] = s.m;
  j["v"] = s.v;
  return j;
}

AdamState adam_from_json(const json &j) {
  AdamState s;
  s.t = j.at("t").get<std::int64_t>();
  s.m = j.at("m").get<std::vector<std::vector<double>>>();
  s.v = j.at("v").get<std::vector<std::vector<double>>>();
  return s;
}

} // namespace

void save_checkpoint(const Checkpoint &ckpt,
                     const std::filesystem::path &path) {
  json j;
  j["schema"] = kCheckpointSchema;
  j["seed"] = ckpt.seed;
  j["config_digest"] = ckpt.config_digest;
  j["in_dim"] = ckpt.model.in_dim;
  j["hidden_dim"] = ckpt.model.hidden_dim;
  j["dropout_p"] = ckpt.model.dropout_p;
  j["gnn_tensors"] = tensors_to_json(tensor_views(ckpt.model));
  j["gnn_adam"] = adam_to_json(ckpt.gnn_opt);
  j["refine_tensors"] = tensors_to_json(tensor_views(ckpt.refine));
  j["refine_adam"] = adam_to_json(ckpt.refine_opt);

  std::ofstream out(path);
  if (!out)
    throw IoError("save_checkpoint: cannot open " + path.string());
  out << j.dump() << '\n';
  if (!out)
    throw IoError("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("load_checkpoint: cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw SchemaError("load_checkpoint: invalid JSON in " + path.string());
  if (!j.contains("schema") || j["schema"] != kCheckpointSchema)
    throw SchemaError("load_checkpoint: unsupported schema in " +
                      path.string());

  Checkpoint ckpt;
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  ckpt.config_digest = j.at("config_digest").get<std::string>();
  const auto in_dim = j.at("in_dim").get<std::size_t>();
  const auto hidden_dim = j.at("hidden_dim").get<std::size_t>();
  const auto dropout_p = j.at("dropout_p").get<double>();
  ckpt.model = init_model(in_dim, hidden_dim, 0, dropout_p);
  tensors_from_json(j.at("gnn_tensors"), tensor_views(ckpt.model),
                    "gnn_tensors");
  ckpt.gnn_opt = adam_from_json(j.at("gnn_adam"));
  ckpt.refine = init_refine(0);
  tensors_from_json(j.at("refine_tensors"), tensor_views(ckpt.refine),
                    "refine_tensors");
  ckpt.refine_opt = adam_from_json(j.at("refine_adam"));
  return ckpt;
}

} // namespace geograph
