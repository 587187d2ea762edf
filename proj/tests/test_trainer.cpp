#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dagaf/errors.hpp"
#include "dagaf/semgen.hpp"
#include "dagaf/trainer.hpp"
#include "testutil.hpp"

using namespace dagaf;

namespace {

// Small, fast settings for unit-level runs.
TrainConfig tinyConfig() {
  TrainConfig cfg;
  cfg.batchSize = 128;
  cfg.epochs = 30;
  cfg.kMaxIter = 12;
  cfg.plateauPatience = 6;
  cfg.mmdMaxRows = 64;
  cfg.criticHidden = 16;
  cfg.dropout = 0.0;
  return cfg;
}

Dataset chainData(std::size_t n, double weight, std::uint64_t seed) {
  Matrix a(2, 2, 0.0);
  a(1, 0) = weight;
  Rng rng(seed);
  return generate(a, SemFamily::Linear, NoiseSpec{NoiseSpec::Kind::Gaussian, 1.0}, n, rng);
}

}  // namespace

TEST_CASE("zero-epoch run leaves the adjacency at its initialization") {
  Dataset data = chainData(256, 1.5, 1);
  TrainConfig cfg = tinyConfig();
  cfg.epochs = 0;
  cfg.kMaxIter = 1;
  cfg.seed = 3;

  Rng rngInit(3);
  FcmModel reference(2, cfg.latentH, cfg.assumption, rngInit);
  Critic refCritic(2, cfg.criticHidden, cfg.dropout, rngInit);
  (void)refCritic;

  Rng rng(3);
  Step1Result res = runStep1(data, cfg, rng);
  CHECK(res.report.finalAdjacency == reference.extractAdjacency());
  CHECK(res.report.epochs.empty());
}

TEST_CASE("d=1 input is rejected") {
  Dataset data;
  data.columns = {"x1"};
  data.values = Matrix(10, 1, 0.5);
  Rng rng(1);
  CHECK_THROWS_AS(runStep1(data, tinyConfig(), rng), ConfigError);
}

TEST_CASE("two-variable chain is recovered") {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Dataset data = chainData(2000, 1.6, seed);
    TrainConfig cfg = tinyConfig();
    cfg.seed = seed;
    Rng rng(seed);
    Step1Result res = runStep1(data, cfg, rng);
    BinaryDag truth;
    truth.d = 2;
    truth.edges = {{0, 1}};
    const int shd = structuralMetrics(res.report.finalDag, truth).shd;
    if (shd <= 1) ++hits;
  }
  CHECK(hits >= 4);
}

TEST_CASE("converged runs end with h at or below the tolerance") {
  Dataset data = chainData(512, 1.5, 7);
  TrainConfig cfg = tinyConfig();
  cfg.seed = 7;
  Rng rng(7);
  Step1Result res = runStep1(data, cfg, rng);
  if (res.report.converged) CHECK(res.report.finalH <= cfg.hTol);
  CHECK(res.report.finalH == acyclicityH(res.report.finalAdjacency));
}

TEST_CASE("constraint pressure is monotone across outer iterations") {
  Dataset data = chainData(512, 1.2, 9);
  TrainConfig cfg = tinyConfig();
  cfg.seed = 9;
  Rng rng(9);
  Step1Result res = runStep1(data, cfg, rng);
  double prevC = 0.0;
  double prevLambda = -1.0;
  for (const LagrangianState& s : res.report.lagrangian) {
    CHECK(s.c >= prevC);
    CHECK(s.c >= 1.0);
    CHECK(s.c <= cfg.cMax);
    if (s.h > 0.0) CHECK(s.lambda >= prevLambda);
    prevC = s.c;
    prevLambda = s.lambda;
  }
}

TEST_CASE("identical seed and config give identical traces and adjacency") {
  Dataset data = chainData(512, 1.4, 11);
  TrainConfig cfg = tinyConfig();
  cfg.epochs = 10;
  cfg.kMaxIter = 3;
  cfg.seed = 11;

  Rng r1(11), r2(11);
  Step1Result a = runStep1(data, cfg, r1);
  Step1Result b = runStep1(data, cfg, r2);
  CHECK(a.report.finalAdjacency == b.report.finalAdjacency);
  REQUIRE(a.report.epochs.size() == b.report.epochs.size());
  for (std::size_t i = 0; i < a.report.epochs.size(); ++i)
    CHECK(a.report.epochs[i].losses.total == b.report.epochs[i].losses.total);
}

TEST_CASE("parameter partition: critic and generator gradients stay separate") {
  Rng rng(13);
  Dataset data = chainData(128, 1.5, 13);
  TrainConfig cfg = tinyConfig();

  FcmModel model(2, cfg.latentH, cfg.assumption, rng);
  Critic critic(2, cfg.criticHidden, 0.0, rng);
  Matrix batch = data.values;

  // Critic loss on a detached generated batch.
  Tape ct;
  Matrix fake;
  {
    Tape ft;
    fake = ft.value(model.forwardF(ft, ft.constant(batch)));
  }
  Tape::Id closs =
      wganGpCriticLoss(ct, critic, ct.constant(batch), ct.constant(fake), 10.0, rng);
  auto gen = model.fParams();
  auto cr = critic.params();
  zeroGrads(gen);
  zeroGrads(cr);
  ct.backward(closs, gen);  // ask for generator grads explicitly
  ct.backward(closs, cr);
  for (Param* p : gen)
    for (std::size_t i = 0; i < p->grad.size(); ++i) CHECK(p->grad.data()[i] == 0.0);
  bool criticTouched = false;
  for (Param* p : cr)
    for (std::size_t i = 0; i < p->grad.size(); ++i) criticTouched |= p->grad.data()[i] != 0.0;
  CHECK(criticTouched);

  // Generator objective: gradients flow to the generator only.
  Tape gt;
  Tape::Id xt = model.forwardF(gt, gt.constant(batch));
  Step1Terms terms;
  terms.adv = wganGeneratorLoss(gt, critic, xt, nullptr);
  terms.mse = mseLoss(gt, gt.constant(batch), xt);
  terms.h = gt.acyclicityFromSquared(model.adjacencySquaredOnTape(gt));
  Tape::Id total = composeStep1Loss(gt, terms, cfg.weights, 0.5, 2.0);
  zeroGrads(gen);
  zeroGrads(cr);
  gt.backward(total, gen);
  bool genTouched = false;
  for (Param* p : gen)
    for (std::size_t i = 0; i < p->grad.size(); ++i) genTouched |= p->grad.data()[i] != 0.0;
  CHECK(genTouched);
  for (Param* p : cr)
    for (std::size_t i = 0; i < p->grad.size(); ++i) CHECK(p->grad.data()[i] == 0.0);
}

TEST_CASE("step 2 keeps the transferred first layer bit-exact") {
  Dataset data = chainData(512, 1.5, 17);
  TrainConfig cfg = tinyConfig();
  cfg.seed = 17;
  cfg.epochs = 8;
  cfg.kMaxIter = 2;
  Rng rng(17);
  Step1Result step1 = runStep1(data, cfg, rng);

  // Checksum of every step-1 parameter before step 2 runs.
  std::vector<Matrix> before;
  for (const Param* p : step1.model.allParams()) before.push_back(p->value);

  cfg.step2Epochs = 6;
  Step2Result step2 = runStep2(step1.model, data, cfg, rng);
  CHECK(step2.report.finalAdjacency == step1.report.finalAdjacency);
  CHECK(step2.model.firstLayerFrozen());

  auto after = step1.model.allParams();
  for (std::size_t i = 0; i < after.size(); ++i) CHECK(after[i]->value == before[i]);
}

TEST_CASE("step 2 rejects a mismatched assumption") {
  Dataset data = chainData(256, 1.5, 19);
  TrainConfig cfg = tinyConfig();
  cfg.seed = 19;
  cfg.epochs = 4;
  cfg.kMaxIter = 1;
  Rng rng(19);
  Step1Result step1 = runStep1(data, cfg, rng);
  cfg.assumption = Assumption::PNL;
  CHECK_THROWS_AS(runStep2(step1.model, data, cfg, rng), ConfigError);
}

TEST_CASE("synthesize contracts: zero hidden layers, empty request, determinism") {
  Rng rng(21);
  FcmModel model(3, 5, Assumption::ANM, rng);
  for (Param* p : model.allParams())
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value.data()[i] = 0.0;

  Rng z1(5), z2(5);
  SynthesisResult a = synthesize(model, 40, 0.3, 1, z1);
  CHECK(a.data.n() == 40);
  CHECK(a.data.d() == 3);
  CHECK(!a.cyclicFallback);
  Matrix z = sampleNoiseBank(40, 3, 1, z2);
  CHECK(a.data.values == z);  // all-zero f makes the output the noise bank

  SynthesisResult empty = synthesize(model, 0, 0.3, 1, z1);
  CHECK(empty.data.n() == 0);
  CHECK(empty.data.columns.size() == 3);

  Rng s1(9), s2(9);
  SynthesisResult d1 = synthesize(model, 25, 0.3, 1, s1);
  SynthesisResult d2 = synthesize(model, 25, 0.3, 1, s2);
  CHECK(d1.data.values == d2.data.values);
}

TEST_CASE("synthesize falls back to refinement passes on a cyclic graph") {
  Rng rng(23);
  FcmModel model(2, 3, Assumption::ANM, rng);
  // Force both off-diagonal norms above any reasonable threshold.
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t m = 0; m < 3; ++m)
      for (std::size_t k = 0; k < 2; ++k)
        model.nodes()[j].l0W.value(m, k) = (k == j) ? 0.0 : 1.0;
  SynthesisResult res = synthesize(model, 10, 0.3, 1, rng);
  CHECK(res.cyclicFallback);
  CHECK(res.data.n() == 10);
}

TEST_CASE("interleaved mode transfers the first layer every epoch") {
  Dataset data = chainData(256, 1.5, 29);
  TrainConfig cfg = tinyConfig();
  cfg.seed = 29;
  cfg.epochs = 5;
  cfg.kMaxIter = 2;
  cfg.interleaved = true;
  Rng rng(29);
  InterleavedResult res = runInterleaved(data, cfg, rng);
  CHECK(res.synthesis.firstLayerFrozen());
  CHECK(res.discovery.extractAdjacency() == res.synthesis.extractAdjacency());
}

TEST_CASE("PNL training runs and reports a pnl trace") {
  Rng dataRng(31);
  auto [dag, weights] = sampleErDag(3, 1.5, dataRng);
  Dataset data = generate(weights, SemFamily::PostNonLinear1,
                          NoiseSpec{NoiseSpec::Kind::Gaussian, 1.0}, 512, dataRng);
  TrainConfig cfg = tinyConfig();
  cfg.assumption = Assumption::PNL;
  cfg.epochs = 6;
  cfg.kMaxIter = 2;
  cfg.seed = 31;
  Rng rng(31);
  Step1Result res = runStep1(data, cfg, rng);
  REQUIRE(!res.report.epochs.empty());
  bool pnlActive = false;
  for (const EpochTrace& t : res.report.epochs) pnlActive |= t.losses.pnl != 0.0;
  CHECK(pnlActive);
}
