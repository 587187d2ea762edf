#pragma once

#include <optional>
#include <string>

#include "dagaf/config.hpp"
#include "dagaf/models.hpp"

namespace dagaf {

// Flat key -> matrix archive: <prefix>.bin holds little-endian 64-bit floats,
// <prefix>.json the manifest of keys, shapes and offsets plus the training
// config echo.
void saveCheckpoint(const std::string& prefix, const FcmModel& model, const Critic* critic,
                    const TrainConfig& cfg);

struct LoadedCheckpoint {
  FcmModel model;
  std::optional<Critic> critic;
  TrainConfig config;
};

LoadedCheckpoint loadCheckpoint(const std::string& prefix);

}  // namespace dagaf
