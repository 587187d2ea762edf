#pragma once

#include <cstdint>
#include <vector>

#include "dagaf/config.hpp"
#include "dagaf/dataset.hpp"
#include "dagaf/graph.hpp"
#include "dagaf/losses.hpp"
#include "dagaf/models.hpp"
#include "dagaf/rng.hpp"

namespace dagaf {

struct LagrangianState {
  double lambda = 0.0;
  double c = 1.0;
  double h = 0.0;
  std::size_t outerIter = 0;
};

struct EpochTrace {
  LossBreakdown losses;
  double h = 0.0;
  std::size_t outerIter = 0;
};

struct TrainReport {
  std::vector<EpochTrace> epochs;
  std::vector<LagrangianState> lagrangian;
  Matrix finalAdjacency;
  BinaryDag finalDag;
  double finalH = 0.0;
  bool converged = false;  // h <= h_tol before k_max_iter ran out
  bool cyclicAfterThreshold = false;
  bool nanAborted = false;
  double wallClockSeconds = 0.0;
  std::uint64_t seed = 0;
};

struct Step1Result {
  FcmModel model;
  Critic critic;
  TrainReport report;
};

struct Step2Result {
  FcmModel model;
  Critic critic;
  TrainReport report;
};

struct InterleavedResult {
  FcmModel discovery;
  FcmModel synthesis;
  TrainReport report;
};

struct SynthesisResult {
  Dataset data;
  bool cyclicFallback = false;
};

// Step 1: causal structure learning under the augmented-Lagrangian schedule.
Step1Result runStep1(const Dataset& data, const TrainConfig& cfg, Rng& rng);

// Step 2: adversarial synthesis training on a fresh model seeded with the
// discovered first layer (frozen).
Step2Result runStep2(const FcmModel& step1Model, const Dataset& data, const TrainConfig& cfg,
                     Rng& rng);

// Literal pseudo-code ordering: discovery and synthesis updates share each
// epoch, with the first layer re-transferred every epoch.
InterleavedResult runInterleaved(const Dataset& data, const TrainConfig& cfg, Rng& rng);

// Ancestral generation through the thresholded learned graph. Falls back to d
// iterated refinement passes when that graph is cyclic.
SynthesisResult synthesize(const FcmModel& model, std::size_t n, double tau, std::size_t zSize,
                           Rng& rng);

}  // namespace dagaf
