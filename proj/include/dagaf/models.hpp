#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dagaf/matrix.hpp"
#include "dagaf/rng.hpp"
#include "dagaf/tape.hpp"

namespace dagaf {

enum class Assumption { LiNGAM, ANM, PNL };

Assumption assumptionFromString(const std::string& name);
std::string toString(Assumption a);

// Invertible post-nonlinearity g and its learned inverse, each an MLP of
// widths [d, 10d, 10d, 10d, d] with ReLU on the hidden layers. One joint
// network covers all d variables.
struct PnlPair {
  std::vector<Param> gW, gB;
  std::vector<Param> gInvW, gInvB;
};

// Per-node local network: first layer h x d (the adjacency-defining layer),
// then one sigmoid hidden layer collapsed to a scalar output. Under LiNGAM
// the first layer is 1 x d and is the whole map.
struct LocalNet {
  Param l0W;   // h x d
  Param l0B;   // 1 x h
  Param hidW;  // 1 x h (unused under LiNGAM)
  Param hidB;  // 1 x 1
};

class FcmModel {
 public:
  FcmModel(std::size_t d, std::size_t latentH, Assumption assumption, Rng& rng);

  FcmModel(FcmModel&&) = default;
  FcmModel& operator=(FcmModel&&) = default;
  FcmModel(const FcmModel&) = delete;
  FcmModel& operator=(const FcmModel&) = delete;

  std::size_t d() const { return d_; }
  std::size_t latentH() const { return latentH_; }
  Assumption assumption() const { return assumption_; }

  // f(X): every node evaluated over all d inputs with its own column
  // structurally zeroed. Output n x d.
  Tape::Id forwardF(Tape& tape, Tape::Id x) const;
  // Full model output: f(X) (+ Z when given), passed through g under PNL.
  Tape::Id forward(Tape& tape, Tape::Id x, std::optional<Tape::Id> z) const;
  Tape::Id forwardG(Tape& tape, Tape::Id v) const;
  Tape::Id forwardGInverse(Tape& tape, Tape::Id x) const;

  // d x d matrix of squared first-layer column norms, on the tape.
  Tape::Id adjacencySquaredOnTape(Tape& tape) const;
  // Numeric adjacency of first-layer L2 norms; diagonal forcibly zero.
  Matrix extractAdjacency() const;

  std::vector<Param*> fParams();             // first layer + hidden layers
  std::vector<Param*> hiddenParams();        // f params minus the first layer
  std::vector<Param*> gParams();
  std::vector<Param*> gInvParams();
  std::vector<Param*> allParams();
  std::vector<const Param*> allParams() const;

  void freezeFirstLayer();
  bool firstLayerFrozen() const;

  const std::vector<LocalNet>& nodes() const { return nodes_; }
  std::vector<LocalNet>& nodes() { return nodes_; }
  const std::optional<PnlPair>& pnl() const { return pnl_; }
  std::optional<PnlPair>& pnl() { return pnl_; }

 private:
  std::size_t d_ = 0;
  std::size_t latentH_ = 0;
  Assumption assumption_ = Assumption::ANM;
  std::vector<LocalNet> nodes_;
  std::vector<Matrix> masks_;  // h x d with column j zeroed
  std::optional<PnlPair> pnl_;
};

// Copies the first layer of `source` into `target` bit-exactly and freezes it
// there. Shapes and assumption must match.
void transferWeights(const FcmModel& source, FcmModel& target);

// Wasserstein critic [d, 64, 64, 1], leaky-ReLU slope 0.2, optional dropout on
// the hidden activations, no output nonlinearity.
class Critic {
 public:
  Critic(std::size_t d, std::size_t hidden, double dropout, Rng& rng);

  Critic(Critic&&) = default;
  Critic& operator=(Critic&&) = default;
  Critic(const Critic&) = delete;
  Critic& operator=(const Critic&) = delete;

  // One unconstrained score per row. Dropout is active only when a stream is
  // provided (training mode).
  Tape::Id forward(Tape& tape, Tape::Id x, Rng* dropoutRng) const;

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  std::size_t inputWidth() const { return d_; }
  double dropout() const { return dropout_; }

 private:
  std::size_t d_ = 0;
  double dropout_ = 0.0;
  std::vector<Param> weights_;
  std::vector<Param> biases_;
};

// Per-batch noise for the synthesis step: each entry is the sum of `zSize`
// independent N(0,1) draws.
Matrix sampleNoiseBank(std::size_t n, std::size_t d, std::size_t zSize, Rng& rng);

}  // namespace dagaf
