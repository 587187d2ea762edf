#pragma once

#include "dagaf/matrix.hpp"
#include "dagaf/models.hpp"
#include "dagaf/rng.hpp"
#include "dagaf/tape.hpp"

namespace dagaf {

struct LossWeights {
  double adv = 1.0;
  double mse = 1.0;
  double kld = 0.1;
  double mmd = 1.0;
  double pnl = 1.0;
  double gpCoeff = 10.0;

  void validate() const;
};

struct LossBreakdown {
  double adv = 0.0;
  double mse = 0.0;
  double kld = 0.0;
  double mmd = 0.0;
  double pnl = 0.0;
  double acycPenalty = 0.0;
  double total = 0.0;
};

// mean D(Xt) - mean D(X) + gp * mean((||grad_Xhat D(Xhat)||_2 - 1)^2) with
// Xhat = eps*X + (1-eps)*Xt, eps ~ U(0,1) per row. Xt should be a detached
// (constant) node; the inner gradient is re-entered onto the tape so the
// penalty remains differentiable in the critic weights.
Tape::Id wganGpCriticLoss(Tape& tape, const Critic& critic, Tape::Id x, Tape::Id xt,
                          double gpCoeff, Rng& rng);

// -mean D(Xt).
Tape::Id wganGeneratorLoss(Tape& tape, const Critic& critic, Tape::Id xt, Rng* dropoutRng);

// (1/n) sum_ij (X_ij - Xt_ij)^2.
Tape::Id mseLoss(Tape& tape, Tape::Id x, Tape::Id xt);

// Gaussian NLL with unit variance: 0.5*mse + (d/2) log(2*pi).
Tape::Id nllLoss(Tape& tape, Tape::Id x, Tape::Id xt);

// (1/2n) sum_ij Xt_ij^2.
Tape::Id kldLoss(Tape& tape, Tape::Id xt);

// Gaussian-kernel MMD with all three i != j sums normalized by 1/n as
// printed; `unbiased` switches the normalization to 1/(n(n-1)).
Tape::Id mmdLoss(Tape& tape, Tape::Id x, Tape::Id xt, double bandwidth, bool unbiased = false);

// Median pairwise distance of the rows of x; 1.0 when the median is zero.
double medianHeuristicBandwidth(const Matrix& x);

// Numeric twin of mmdLoss for evaluation outside the tape.
double mmdStatistic(const Matrix& x, const Matrix& xt, double bandwidth, bool unbiased = true);

// (1/n) sum_ij (Xhat_ij - F_ij)^2, driving g^{-1}(X) toward f(Pa).
Tape::Id pnlLoss(Tape& tape, Tape::Id xhat, Tape::Id f);

// Component ids for the composite objective; -1 marks an absent term.
struct Step1Terms {
  Tape::Id adv = -1;
  Tape::Id mse = -1;
  Tape::Id kld = -1;
  Tape::Id mmd = -1;
  Tape::Id pnl = -1;
  Tape::Id h = -1;  // required
};

// total = w_adv*adv + w_mse*mse + w_kld*kld + w_mmd*mmd + w_pnl*pnl
//         + (c/2) h^2 + lambda h.
Tape::Id composeStep1Loss(Tape& tape, const Step1Terms& terms, const LossWeights& weights,
                          double lambda, double c);

}  // namespace dagaf
