#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "dagaf/losses.hpp"
#include "dagaf/models.hpp"

namespace dagaf {

enum class ReconKind { None, Mse, Nll };

struct TrainConfig {
  Assumption assumption = Assumption::ANM;
  double lr = 3e-3;
  std::size_t batchSize = 1000;
  std::size_t epochs = 300;
  std::size_t kMaxIter = 100;
  double hTol = 1e-8;
  double cMax = 1e20;
  double rhoMult = 10.0;
  double progressRatio = 0.25;
  double thresholdTau = 0.3;
  double weightDecay = 1e-6;
  LossWeights weights;
  std::uint64_t seed = 0;
  double dropout = 0.5;
  std::size_t zSize = 1;
  std::size_t latentH = 10;
  std::size_t criticHidden = 64;
  ReconKind recon = ReconKind::Mse;

  // Literal pseudo-code variants and resolved open questions, all off by
  // default.
  bool absoluteProgressTest = false;
  bool lambdaOverwrite = false;
  bool interleaved = false;
  bool standardize = false;
  bool mmdUnbiased = false;

  // Training-cost controls. mmdMaxRows caps the per-step MMD sample;
  // plateauPatience = 0 disables the early exit from an epoch block.
  std::size_t mmdMaxRows = 256;
  std::size_t plateauPatience = 20;
  double plateauTol = 1e-3;
  std::size_t criticStepsStep1 = 1;
  std::size_t criticStepsStep2 = 5;
  std::size_t step2Epochs = 0;  // 0: reuse `epochs`

  // Per-epoch logging to stderr; set by the CLI, not persisted.
  bool verbose = false;

  void validate() const;
};

// Flat key=value config file; '#' starts a comment. Unknown keys are errors.
TrainConfig parseConfigFile(const std::string& path, const TrainConfig& base = {});
void applyConfigOverride(TrainConfig& cfg, const std::string& key, const std::string& value);
std::map<std::string, std::string> configToMap(const TrainConfig& cfg);

// Ablation presets (loss-term combinations) and sensitivity presets
// (hyper-parameter rows). Throws ConfigError for unknown names.
TrainConfig applyPreset(const TrainConfig& base, const std::string& preset);
bool isKnownPreset(const std::string& preset);

}  // namespace dagaf
