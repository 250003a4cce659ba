#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "geograph/geoloc.hpp"
#include "geograph/gnn.hpp"

namespace geograph {

inline constexpr const char *kCheckpointSchema = "geograph-checkpoint/1";

// Everything needed to resume or evaluate: both networks, their optimizer
// states, dims and provenance. Write/read round-trips bit-exactly.
struct Checkpoint {
  GnnModel model;
  AdamState gnn_opt;
  RefineNet refine;
  AdamState refine_opt;
  std::uint64_t seed = 0;
  std::string config_digest;
};

void save_checkpoint(const Checkpoint &ckpt,
                     const std::filesystem::path &path);
Checkpoint load_checkpoint(const std::filesystem::path &path);

} // namespace geograph
