#include "dagaf/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dagaf/errors.hpp"

namespace dagaf {

namespace {

Tape::Id meanOfColumn(Tape& tape, Tape::Id column) {
  const double n = static_cast<double>(tape.value(column).rows());
  return tape.affine(tape.sumAll(column), 1.0 / n, 0.0);
}

// Squared Euclidean distances between the rows of a and b, as a tape node.
Tape::Id pairwiseSqDist(Tape& tape, Tape::Id a, Tape::Id b) {
  const std::size_t n = tape.value(a).rows();
  const std::size_t m = tape.value(b).rows();
  Tape::Id ra = tape.rowSum(tape.square(a));                      // n x 1
  Tape::Id rb = tape.rowSum(tape.square(b));                      // m x 1
  Tape::Id cross = tape.affine(tape.matmul(a, tape.transpose(b)), -2.0, 0.0);
  return tape.add(tape.add(tape.broadcastCol(ra, m), tape.broadcastRow(tape.transpose(rb), n)),
                  cross);
}

Matrix offDiagonalMask(std::size_t n) {
  Matrix mask(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) mask(i, i) = 0.0;
  return mask;
}

Tape::Id offDiagKernelSum(Tape& tape, Tape::Id a, Tape::Id b, double bandwidth) {
  Tape::Id dist = pairwiseSqDist(tape, a, b);
  Tape::Id kernel = tape.expOp(tape.affine(dist, -1.0 / (2.0 * bandwidth * bandwidth), 0.0));
  return tape.sumAll(tape.mulConst(kernel, offDiagonalMask(tape.value(a).rows())));
}

}  // namespace

void LossWeights::validate() const {
  if (adv < 0 || mse < 0 || kld < 0 || mmd < 0 || pnl < 0)
    throw ConfigError("loss weights must be non-negative");
  if (gpCoeff <= 0) throw ConfigError("gradient penalty coefficient must be positive");
}

Tape::Id wganGpCriticLoss(Tape& tape, const Critic& critic, Tape::Id x, Tape::Id xt,
                          double gpCoeff, Rng& rng) {
  // Copies: adding nodes below may invalidate references into the tape.
  const Matrix xv = tape.value(x);
  const Matrix xtv = tape.value(xt);
  if (xv.rows() != xtv.rows() || xv.cols() != xtv.cols())
    throw ShapeError("wganGpCriticLoss: sample shapes differ");
  const std::size_t n = xv.rows();

  Tape::Id scoreReal = critic.forward(tape, x, &rng);
  Tape::Id scoreFake = critic.forward(tape, xt, &rng);

  // Per-row interpolates between real and generated samples.
  Matrix mix(n, xv.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = rng.uniform();
    for (std::size_t j = 0; j < xv.cols(); ++j)
      mix(i, j) = eps * xv(i, j) + (1.0 - eps) * xtv(i, j);
  }
  Tape::Id xhat = tape.input(std::move(mix));
  Tape::Id scoreMix = critic.forward(tape, xhat, &rng);

  Tape::Id grad = tape.gradientOf(tape.sumAll(scoreMix), xhat);
  Tape::Id norms = tape.sqrtEps(tape.rowSum(tape.square(grad)), 1e-12);
  Tape::Id penalty = tape.affine(tape.sumAll(tape.square(tape.affine(norms, 1.0, -1.0))),
                                 1.0 / static_cast<double>(n), 0.0);

  Tape::Id wasserstein = tape.sub(meanOfColumn(tape, scoreFake), meanOfColumn(tape, scoreReal));
  return tape.add(wasserstein, tape.affine(penalty, gpCoeff, 0.0));
}

Tape::Id wganGeneratorLoss(Tape& tape, const Critic& critic, Tape::Id xt, Rng* dropoutRng) {
  Tape::Id score = critic.forward(tape, xt, dropoutRng);
  return tape.affine(tape.sumAll(score), -1.0 / static_cast<double>(tape.value(xt).rows()), 0.0);
}

Tape::Id mseLoss(Tape& tape, Tape::Id x, Tape::Id xt) {
  if (!tape.value(x).sameShape(tape.value(xt))) throw ShapeError("mseLoss: shape mismatch");
  const std::size_t n = tape.value(x).rows();
  Tape::Id sq = tape.square(tape.sub(x, xt));
  return tape.affine(tape.sumAll(sq), 1.0 / static_cast<double>(n), 0.0);
}

Tape::Id nllLoss(Tape& tape, Tape::Id x, Tape::Id xt) {
  const double d = static_cast<double>(tape.value(x).cols());
  constexpr double kLog2Pi = 1.8378770664093454836;
  return tape.affine(mseLoss(tape, x, xt), 0.5, 0.5 * d * kLog2Pi);
}

Tape::Id kldLoss(Tape& tape, Tape::Id xt) {
  const std::size_t n = tape.value(xt).rows();
  return tape.affine(tape.sumAll(tape.square(xt)), 0.5 / static_cast<double>(n), 0.0);
}

Tape::Id mmdLoss(Tape& tape, Tape::Id x, Tape::Id xt, double bandwidth, bool unbiased) {
  const Matrix& xv = tape.value(x);
  const Matrix& xtv = tape.value(xt);
  if (xv.rows() != xtv.rows()) throw ShapeError("mmdLoss: equal sample counts required");
  if (xv.cols() != xtv.cols()) throw ShapeError("mmdLoss: feature counts differ");
  const std::size_t n = xv.rows();
  if (n < 2) throw ShapeError("mmdLoss: at least two samples required");
  if (bandwidth <= 0) throw ConfigError("mmdLoss: bandwidth must be positive");

  Tape::Id txx = offDiagKernelSum(tape, x, x, bandwidth);
  Tape::Id txy = offDiagKernelSum(tape, x, xt, bandwidth);
  Tape::Id tyy = offDiagKernelSum(tape, xt, xt, bandwidth);

  const double norm =
      unbiased ? 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1)) : 1.0 / static_cast<double>(n);
  Tape::Id sum = tape.add(tape.sub(txx, tape.affine(txy, 2.0, 0.0)), tyy);
  return tape.affine(sum, norm, 0.0);
}

double medianHeuristicBandwidth(const Matrix& x) {
  const std::size_t n = x.rows();
  if (n < 2) return 1.0;
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sq = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        const double diff = x(i, k) - x(j, k);
        sq += diff * diff;
      }
      dists.push_back(std::sqrt(sq));
    }
  }
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  const double median = *mid;
  return median > 0.0 ? median : 1.0;
}

double mmdStatistic(const Matrix& x, const Matrix& xt, double bandwidth, bool unbiased) {
  Tape tape;
  Tape::Id a = tape.constant(x);
  Tape::Id b = tape.constant(xt);
  return tape.scalarValue(mmdLoss(tape, a, b, bandwidth, unbiased));
}

Tape::Id pnlLoss(Tape& tape, Tape::Id xhat, Tape::Id f) {
  if (!tape.value(xhat).sameShape(tape.value(f))) throw ShapeError("pnlLoss: shape mismatch");
  const std::size_t n = tape.value(xhat).rows();
  Tape::Id sq = tape.square(tape.sub(xhat, f));
  return tape.affine(tape.sumAll(sq), 1.0 / static_cast<double>(n), 0.0);
}

Tape::Id composeStep1Loss(Tape& tape, const Step1Terms& terms, const LossWeights& weights,
                          double lambda, double c) {
  weights.validate();
  if (terms.h < 0) throw ConfigError("composeStep1Loss: acyclicity term required");

  Tape::Id total = tape.constant(Matrix::scalar(0.0));
  auto accumulate = [&](Tape::Id term, double w) {
    if (term < 0 || w == 0.0) return;
    total = tape.add(total, tape.affine(term, w, 0.0));
  };
  accumulate(terms.adv, weights.adv);
  accumulate(terms.mse, weights.mse);
  accumulate(terms.kld, weights.kld);
  accumulate(terms.mmd, weights.mmd);
  accumulate(terms.pnl, weights.pnl);
  total = tape.add(total, tape.affine(tape.square(terms.h), c / 2.0, 0.0));
  total = tape.add(total, tape.affine(terms.h, lambda, 0.0));
  return total;
}

}  // namespace dagaf
