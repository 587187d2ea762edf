#include "dagaf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "dagaf/errors.hpp"

namespace dagaf {

namespace {

Matrix rowSubset(const Matrix& x, const std::vector<std::size_t>& idx, std::size_t first,
                 std::size_t count) {
  Matrix out(count, x.cols());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t src = idx[first + i];
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(src, j);
  }
  return out;
}

Matrix standardized(const Matrix& x) {
  Matrix out = x;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= static_cast<double>(x.rows());
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double c = x(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(x.rows());
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = (x(i, j) - mean) / sd;
  }
  return out;
}

// Full parameter snapshot (values plus optimizer state) for NaN recovery.
struct Snapshot {
  std::vector<Matrix> value, m, v;
  std::vector<std::int64_t> steps;

  static Snapshot capture(const std::vector<Param*>& params) {
    Snapshot s;
    s.value.reserve(params.size());
    for (const Param* p : params) {
      s.value.push_back(p->value);
      s.m.push_back(p->adamM);
      s.v.push_back(p->adamV);
      s.steps.push_back(p->adamSteps);
    }
    return s;
  }

  void restore(const std::vector<Param*>& params) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i]->value = value[i];
      params[i]->adamM = m[i];
      params[i]->adamV = v[i];
      params[i]->adamSteps = steps[i];
    }
  }
};

Matrix evalFOutput(const FcmModel& model, const Matrix& x) {
  Tape tape;
  return tape.value(model.forwardF(tape, tape.constant(x)));
}

Matrix evalFullOutput(const FcmModel& model, const Matrix& x, const Matrix* z) {
  Tape tape;
  Tape::Id xi = tape.constant(x);
  std::optional<Tape::Id> zi;
  if (z != nullptr) zi = tape.constant(*z);
  return tape.value(model.forward(tape, xi, zi));
}

void criticUpdate(Critic& critic, const Matrix& x, const Matrix& xt, const TrainConfig& cfg,
                  Rng& rng, double* lossOut) {
  Tape tape;
  Tape::Id xc = tape.constant(x);
  Tape::Id xtc = tape.constant(xt);  // detached: the generator gets no gradient here
  Tape::Id loss = wganGpCriticLoss(tape, critic, xc, xtc, cfg.weights.gpCoeff, rng);
  auto params = critic.params();
  zeroGrads(params);
  tape.backward(loss, params);
  adamStep(params, AdamConfig{cfg.lr, cfg.weightDecay});
  if (lossOut != nullptr) *lossOut = tape.scalarValue(loss);
}

struct GeneratorStepResult {
  LossBreakdown breakdown;
  double h = 0.0;
};

GeneratorStepResult generatorUpdate(FcmModel& model, Critic& critic, const Matrix& batch,
                                    const TrainConfig& cfg, double lambda, double c, Rng& rng) {
  Tape tape;
  Tape::Id x = tape.constant(batch);
  Tape::Id xt = model.forwardF(tape, x);

  Step1Terms terms;
  if (cfg.weights.adv > 0.0) terms.adv = wganGeneratorLoss(tape, critic, xt, &rng);
  if (cfg.recon == ReconKind::Mse) terms.mse = mseLoss(tape, x, xt);
  else if (cfg.recon == ReconKind::Nll) terms.mse = nllLoss(tape, x, xt);
  const bool useKld = cfg.weights.kld > 0.0 && cfg.assumption != Assumption::LiNGAM;
  if (useKld) terms.kld = kldLoss(tape, xt);
  if (cfg.weights.mmd > 0.0) {
    const std::size_t m = std::min(cfg.mmdMaxRows, batch.rows());
    if (m >= 2) {
      // Rows are freshly shuffled each epoch, so a prefix is a random subset.
      Tape::Id xs = m == batch.rows() ? x : tape.sliceRows(x, 0, m);
      Tape::Id xts = m == batch.rows() ? xt : tape.sliceRows(xt, 0, m);
      const double bw = medianHeuristicBandwidth(tape.value(xs));
      terms.mmd = mmdLoss(tape, xs, xts, bw, cfg.mmdUnbiased);
    }
  }
  if (cfg.assumption == Assumption::PNL)
    terms.pnl = pnlLoss(tape, model.forwardGInverse(tape, x), xt);
  terms.h = tape.acyclicityFromSquared(model.adjacencySquaredOnTape(tape));

  LossWeights effective = cfg.weights;
  if (!useKld) effective.kld = 0.0;
  Tape::Id total = composeStep1Loss(tape, terms, effective, lambda, c);

  auto fParams = model.fParams();
  zeroGrads(fParams);
  tape.backward(total, fParams);
  adamStep(fParams, AdamConfig{cfg.lr, 0.0});

  if (cfg.assumption == Assumption::PNL) {
    auto gInv = model.gInvParams();
    zeroGrads(gInv);
    tape.backward(terms.pnl, gInv);
    adamStep(gInv, AdamConfig{cfg.lr, 0.0});
  }

  GeneratorStepResult out;
  auto read = [&](Tape::Id id) { return id >= 0 ? tape.scalarValue(id) : 0.0; };
  out.breakdown.adv = read(terms.adv);
  out.breakdown.mse = read(terms.mse);
  out.breakdown.kld = read(terms.kld);
  out.breakdown.mmd = read(terms.mmd);
  out.breakdown.pnl = read(terms.pnl);
  out.h = read(terms.h);
  out.breakdown.acycPenalty = (c / 2.0) * out.h * out.h + lambda * out.h;
  out.breakdown.total = tape.scalarValue(total);
  return out;
}

void logEpoch(const TrainConfig& cfg, const char* phase, std::size_t outer, std::size_t epoch,
              const LossBreakdown& bd, double h, double c, double lambda) {
  if (!cfg.verbose) return;
  std::cerr << phase << " k=" << outer << " epoch=" << epoch << " total=" << bd.total
            << " adv=" << bd.adv << " mse=" << bd.mse << " kld=" << bd.kld << " mmd=" << bd.mmd
            << " pnl=" << bd.pnl << " h=" << h << " c=" << c << " lambda=" << lambda << '\n';
}

enum class BlockStatus { Done, NonFinite };

// One while-body: up to cfg.epochs epochs at fixed (lambda, c), with an
// optional plateau exit.
BlockStatus trainBlock(FcmModel& model, Critic& critic, const Matrix& x, const TrainConfig& cfg,
                       double lambda, double c, std::size_t outerIter, Rng& rng,
                       TrainReport& report) {
  const std::size_t n = x.rows();
  const std::size_t batchSize = std::min(cfg.batchSize, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);

  double bestLoss = std::numeric_limits<double>::infinity();
  std::size_t bestEpoch = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);

    LossBreakdown sum;
    double hLast = 0.0;
    std::size_t steps = 0;
    try {
      for (std::size_t first = 0; first < n; first += batchSize) {
        const std::size_t count = std::min(batchSize, n - first);
        if (count < 2) continue;  // degenerate trailing batch
        Matrix batch = rowSubset(x, idx, first, count);

        Matrix fake = evalFOutput(model, batch);
        for (std::size_t s = 0; s < cfg.criticStepsStep1; ++s)
          criticUpdate(critic, batch, fake, cfg, rng, nullptr);

        GeneratorStepResult res = generatorUpdate(model, critic, batch, cfg, lambda, c, rng);
        sum.adv += res.breakdown.adv;
        sum.mse += res.breakdown.mse;
        sum.kld += res.breakdown.kld;
        sum.mmd += res.breakdown.mmd;
        sum.pnl += res.breakdown.pnl;
        sum.acycPenalty += res.breakdown.acycPenalty;
        sum.total += res.breakdown.total;
        hLast = res.h;
        ++steps;
      }
    } catch (const NumericError&) {
      return BlockStatus::NonFinite;
    }
    if (steps == 0) throw ConfigError("runStep1: batch size leaves no usable batch");

    const double inv = 1.0 / static_cast<double>(steps);
    LossBreakdown mean{sum.adv * inv, sum.mse * inv, sum.kld * inv, sum.mmd * inv,
                       sum.pnl * inv, sum.acycPenalty * inv, sum.total * inv};
    report.epochs.push_back(EpochTrace{mean, hLast, outerIter});
    logEpoch(cfg, "step1", outerIter, epoch, mean, hLast, c, lambda);

    if (cfg.plateauPatience > 0) {
      const double scale = std::max(1.0, std::abs(bestLoss));
      if (mean.total < bestLoss - cfg.plateauTol * scale) {
        bestLoss = mean.total;
        bestEpoch = epoch;
      } else if (epoch - bestEpoch >= cfg.plateauPatience) {
        break;
      }
    }
  }
  return BlockStatus::Done;
}

void finalizeReport(TrainReport& report, const FcmModel& model, const TrainConfig& cfg) {
  report.finalAdjacency = model.extractAdjacency();
  report.finalH = acyclicityH(report.finalAdjacency);
  report.finalDag = threshold(report.finalAdjacency, cfg.thresholdTau);
  report.cyclicAfterThreshold = !isAcyclic(report.finalDag);
}

}  // namespace

Step1Result runStep1(const Dataset& data, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (data.d() < 2) throw ConfigError("runStep1: at least two variables required");
  if (data.n() < 2) throw ConfigError("runStep1: at least two samples required");

  const auto start = std::chrono::steady_clock::now();
  const Matrix x = cfg.standardize ? standardized(data.values) : data.values;

  FcmModel model(data.d(), cfg.latentH, cfg.assumption, rng);
  Critic critic(data.d(), cfg.criticHidden, cfg.dropout, rng);

  TrainReport report;
  report.seed = cfg.seed;

  std::vector<Param*> everything = model.allParams();
  for (Param* p : critic.params()) everything.push_back(p);

  double lambda = 0.0;
  double c = 1.0;
  double hPrev = std::numeric_limits<double>::infinity();
  double hNew = acyclicityH(model.extractAdjacency());
  bool nanRetryUsed = false;

  for (std::size_t k = 0; k < cfg.kMaxIter && !report.nanAborted; ++k) {
    while (c < cfg.cMax) {
      Snapshot snap = Snapshot::capture(everything);
      BlockStatus status = trainBlock(model, critic, x, cfg, lambda, c, k, rng, report);
      if (status == BlockStatus::NonFinite) {
        snap.restore(everything);
        if (nanRetryUsed) {
          report.nanAborted = true;
          break;
        }
        nanRetryUsed = true;
        c = std::min(c * cfg.rhoMult, cfg.cMax);
        continue;
      }
      hNew = acyclicityH(model.extractAdjacency());
      const bool escalate =
          cfg.absoluteProgressTest ? hNew > cfg.progressRatio : hNew > cfg.progressRatio * hPrev;
      if (escalate) c = std::min(c * cfg.rhoMult, cfg.cMax);
      else break;
    }
    lambda = cfg.lambdaOverwrite ? c * hNew : lambda + c * hNew;
    hPrev = hNew;
    report.lagrangian.push_back(LagrangianState{lambda, c, hNew, k});
    if (hNew <= cfg.hTol) {
      report.converged = true;
      break;
    }
  }

  finalizeReport(report, model, cfg);
  report.wallClockSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return Step1Result{std::move(model), std::move(critic), std::move(report)};
}

Step2Result runStep2(const FcmModel& step1Model, const Dataset& data, const TrainConfig& cfg,
                     Rng& rng) {
  cfg.validate();
  if (step1Model.assumption() != cfg.assumption)
    throw ConfigError("runStep2: assumption does not match the discovery model");
  if (data.d() != step1Model.d()) throw ConfigError("runStep2: data width does not match model");

  const auto start = std::chrono::steady_clock::now();
  const Matrix x = cfg.standardize ? standardized(data.values) : data.values;
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();

  FcmModel model(d, cfg.latentH, cfg.assumption, rng);
  transferWeights(step1Model, model);
  Critic critic(d, cfg.criticHidden, cfg.dropout, rng);

  std::vector<Param*> trainable = model.hiddenParams();
  for (Param* p : model.gParams()) trainable.push_back(p);
  auto criticParams = critic.params();

  TrainReport report;
  report.seed = cfg.seed;

  const std::size_t epochs = cfg.step2Epochs > 0 ? cfg.step2Epochs : cfg.epochs;
  const std::size_t batchSize = std::min(cfg.batchSize, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::size_t sinceGenStep = 0;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
    LossBreakdown sum;
    std::size_t criticSteps = 0;
    std::size_t genSteps = 0;
    for (std::size_t first = 0; first < n; first += batchSize) {
      const std::size_t count = std::min(batchSize, n - first);
      if (count < 2) continue;
      Matrix batch = rowSubset(x, idx, first, count);

      Matrix z = sampleNoiseBank(count, d, cfg.zSize, rng);
      Matrix fake = evalFullOutput(model, batch, &z);
      double criticLoss = 0.0;
      criticUpdate(critic, batch, fake, cfg, rng, &criticLoss);
      sum.adv += criticLoss;
      ++criticSteps;

      if (++sinceGenStep >= cfg.criticStepsStep2 && !trainable.empty()) {
        sinceGenStep = 0;
        Tape tape;
        Tape::Id xg = tape.constant(batch);
        Matrix zg = sampleNoiseBank(count, d, cfg.zSize, rng);
        Tape::Id xt = model.forward(tape, xg, tape.constant(zg));
        Tape::Id loss = wganGeneratorLoss(tape, critic, xt, &rng);
        zeroGrads(trainable);
        tape.backward(loss, trainable);
        adamStep(trainable, AdamConfig{cfg.lr, 0.0});
        sum.total += tape.scalarValue(loss);
        ++genSteps;
      }
    }
    LossBreakdown mean;
    mean.adv = criticSteps ? sum.adv / static_cast<double>(criticSteps) : 0.0;
    mean.total = genSteps ? sum.total / static_cast<double>(genSteps) : 0.0;
    report.epochs.push_back(EpochTrace{mean, 0.0, 0});
    logEpoch(cfg, "step2", 0, epoch, mean, 0.0, 0.0, 0.0);
  }

  finalizeReport(report, model, cfg);
  report.wallClockSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return Step2Result{std::move(model), std::move(critic), std::move(report)};
}

InterleavedResult runInterleaved(const Dataset& data, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (data.d() < 2) throw ConfigError("runInterleaved: at least two variables required");

  const auto start = std::chrono::steady_clock::now();
  const Matrix x = cfg.standardize ? standardized(data.values) : data.values;
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();

  FcmModel cd(d, cfg.latentH, cfg.assumption, rng);
  Critic criticCd(d, cfg.criticHidden, cfg.dropout, rng);
  FcmModel ds(d, cfg.latentH, cfg.assumption, rng);
  Critic criticDs(d, cfg.criticHidden, cfg.dropout, rng);

  std::vector<Param*> dsTrainable = ds.hiddenParams();
  for (Param* p : ds.gParams()) dsTrainable.push_back(p);
  auto criticDsParams = criticDs.params();

  TrainReport report;
  report.seed = cfg.seed;

  const std::size_t batchSize = std::min(cfg.batchSize, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);

  double lambda = 0.0;
  double c = 1.0;
  double hPrev = std::numeric_limits<double>::infinity();
  double hNew = acyclicityH(cd.extractAdjacency());

  for (std::size_t k = 0; k < cfg.kMaxIter; ++k) {
    while (c < cfg.cMax) {
      for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
        LossBreakdown sum;
        double hLast = 0.0;
        std::size_t steps = 0;
        for (std::size_t first = 0; first < n; first += batchSize) {
          const std::size_t count = std::min(batchSize, n - first);
          if (count < 2) continue;
          Matrix batch = rowSubset(x, idx, first, count);

          // Discovery half of the epoch body.
          Matrix fake = evalFOutput(cd, batch);
          criticUpdate(criticCd, batch, fake, cfg, rng, nullptr);
          GeneratorStepResult res = generatorUpdate(cd, criticCd, batch, cfg, lambda, c, rng);
          hLast = res.h;
          sum.total += res.breakdown.total;
          ++steps;

          // Parameter transfer, then the synthesis half.
          transferWeights(cd, ds);
          Matrix z = sampleNoiseBank(count, d, cfg.zSize, rng);
          Matrix dsFake = evalFullOutput(ds, batch, &z);
          criticUpdate(criticDs, batch, dsFake, cfg, rng, nullptr);
          if (!dsTrainable.empty()) {
            Tape tape;
            Matrix zg = sampleNoiseBank(count, d, cfg.zSize, rng);
            Tape::Id xt = ds.forward(tape, tape.constant(batch), tape.constant(zg));
            Tape::Id loss = wganGeneratorLoss(tape, criticDs, xt, &rng);
            zeroGrads(dsTrainable);
            tape.backward(loss, dsTrainable);
            adamStep(dsTrainable, AdamConfig{cfg.lr, 0.0});
          }
        }
        if (steps > 0) {
          sum.total /= static_cast<double>(steps);
          report.epochs.push_back(EpochTrace{sum, hLast, k});
        }
      }
      hNew = acyclicityH(cd.extractAdjacency());
      const bool escalate =
          cfg.absoluteProgressTest ? hNew > cfg.progressRatio : hNew > cfg.progressRatio * hPrev;
      if (escalate) c = std::min(c * cfg.rhoMult, cfg.cMax);
      else break;
    }
    lambda = cfg.lambdaOverwrite ? c * hNew : lambda + c * hNew;
    hPrev = hNew;
    report.lagrangian.push_back(LagrangianState{lambda, c, hNew, k});
    if (hNew <= cfg.hTol) {
      report.converged = true;
      break;
    }
  }

  finalizeReport(report, cd, cfg);
  report.wallClockSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return InterleavedResult{std::move(cd), std::move(ds), std::move(report)};
}

SynthesisResult synthesize(const FcmModel& model, std::size_t n, double tau, std::size_t zSize,
                           Rng& rng) {
  const std::size_t d = model.d();
  SynthesisResult out;
  if (n == 0) {
    out.data = Dataset::withDefaultColumns(Matrix(0, d));
    return out;
  }

  const Matrix adjacency = model.extractAdjacency();
  const BinaryDag dag = threshold(adjacency, tau);
  const auto order = topologicalOrder(dag);

  Matrix z = sampleNoiseBank(n, d, zSize, rng);
  Matrix pre(n, d, 0.0);   // f(parents) + Z, before any post-nonlinearity
  Matrix post(n, d, 0.0);  // model output fed back as parent values

  auto applyG = [&](const Matrix& v) {
    if (model.assumption() != Assumption::PNL) return v;
    Tape tape;
    return tape.value(model.forwardG(tape, tape.constant(v)));
  };

  if (order) {
    for (int j : *order) {
      Matrix f = evalFOutput(model, post);
      for (std::size_t i = 0; i < n; ++i)
        pre(i, static_cast<std::size_t>(j)) = f(i, static_cast<std::size_t>(j)) + z(i, static_cast<std::size_t>(j));
      post = applyG(pre);
      if (model.assumption() != Assumption::PNL) post = pre;
    }
  } else {
    // Cycle survived thresholding: iterate d refinement passes instead.
    out.cyclicFallback = true;
    post = applyG(z);
    if (model.assumption() != Assumption::PNL) post = z;
    for (std::size_t pass = 0; pass < d; ++pass) {
      Matrix f = evalFOutput(model, post);
      for (std::size_t i = 0; i < pre.size(); ++i) pre.data()[i] = f.data()[i] + z.data()[i];
      post = applyG(pre);
      if (model.assumption() != Assumption::PNL) post = pre;
    }
  }

  out.data = Dataset::withDefaultColumns(std::move(post));
  return out;
}

}  // namespace dagaf
