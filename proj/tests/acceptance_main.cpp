// Acceptance suite: prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any fail. `--only N[,M...]` restricts the run.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dagaf/cli.hpp"
#include "dagaf/csvio.hpp"
#include "dagaf/evalsuite.hpp"
#include "dagaf/losses.hpp"
#include "dagaf/semgen.hpp"
#include "dagaf/trainer.hpp"
#include "testutil.hpp"

using namespace dagaf;
namespace tu = dagaf::testutil;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string label;
  std::function<bool(std::string&)> run;
};

int runCliArgs(std::vector<std::string> args) {
  std::vector<const char*> argv;
  argv.push_back("dagaf");
  for (const auto& a : args) argv.push_back(a.c_str());
  return runCli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Benchmark-scale training configuration (paper defaults; plateau exit and
// the MMD row cap keep desk-scale runtime inside the stated budgets).
TrainConfig benchmarkConfig(Assumption assumption, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.assumption = assumption;
  cfg.seed = seed;
  return cfg;
}

struct BenchmarkOutcome {
  std::vector<int> shds;
  double meanShd = 0.0;
  double seconds = 0.0;
};

BenchmarkOutcome runBenchmark(SemFamily family, Assumption assumption, std::size_t d,
                              std::size_t n, double degree, const std::vector<std::uint64_t>& seeds,
                              std::string& detail) {
  BenchmarkOutcome out;
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t seed : seeds) {
    Rng rng(seed);
    auto [dag, weights] = sampleErDag(d, degree, rng);
    NoiseSpec noise{family == SemFamily::Linear ? NoiseSpec::Kind::Uniform
                                                : NoiseSpec::Kind::Gaussian,
                    1.0};
    Dataset data = generate(weights, family, noise, n, rng);
    TrainConfig cfg = benchmarkConfig(assumption, seed);
    Step1Result res = runStep1(data, cfg, rng);
    const int shd = structuralMetrics(res.report.finalDag, dag).shd;
    out.shds.push_back(shd);
    std::cerr << "  [" << toString(family) << "/" << toString(assumption) << "] seed " << seed
              << ": shd=" << shd << " h=" << res.report.finalH
              << " converged=" << res.report.converged << " (" << res.report.wallClockSeconds
              << "s)\n";
  }
  for (int s : out.shds) out.meanShd += s;
  out.meanShd /= static_cast<double>(out.shds.size());
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream ss;
  ss << "mean shd " << out.meanShd << " [";
  for (std::size_t i = 0; i < out.shds.size(); ++i) ss << (i ? "," : "") << out.shds[i];
  ss << "] in " << static_cast<int>(out.seconds) << "s";
  detail = ss.str();
  return out;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness across all loss terms.

bool criterion1(std::string& detail) {
  Rng meta(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + meta.index(3);
    const std::size_t n = meta.uniform() < 0.5 ? 4 : 8;
    const Assumption assumption = trial % 3 == 0 ? Assumption::PNL
                                 : trial % 3 == 1 ? Assumption::ANM
                                                  : Assumption::LiNGAM;
    Rng init(2000 + static_cast<std::uint64_t>(trial));
    FcmModel model(d, 4, assumption, init);
    Critic critic(d, 8, 0.0, init);
    for (Param* p : model.allParams())
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value.data()[i] += init.uniform(-0.3, 0.3);
    Matrix x = tu::randomMatrix(n, d, init);

    // Composite generator objective (adv + recon + kld + mmd (+pnl) + h).
    auto buildComposite = [&](Tape& tape) {
      Tape::Id xc = tape.constant(x);
      Tape::Id xt = model.forwardF(tape, xc);
      Step1Terms terms;
      terms.adv = wganGeneratorLoss(tape, critic, xt, nullptr);
      terms.mse = mseLoss(tape, xc, xt);
      if (assumption != Assumption::LiNGAM) terms.kld = kldLoss(tape, xt);
      terms.mmd = mmdLoss(tape, xc, xt, 0.9);
      if (assumption == Assumption::PNL)
        terms.pnl = pnlLoss(tape, model.forwardGInverse(tape, xc), xt);
      terms.h = tape.acyclicityFromSquared(model.adjacencySquaredOnTape(tape));
      LossWeights w;
      if (assumption == Assumption::LiNGAM) w.kld = 0.0;
      return composeStep1Loss(tape, terms, w, 0.7, 3.0);
    };
    std::vector<Param*> genParams = model.allParams();
    {
      Tape tape;
      Tape::Id loss = buildComposite(tape);
      zeroGrads(genParams);
      tape.backward(loss, genParams);
      auto value = [&]() {
        Tape t;
        return t.scalarValue(buildComposite(t));
      };
      worst = std::max(worst, tu::maxGradientError(value, genParams, 1e-5, 1e-8));
    }

    // Critic objective incl. the gradient-penalty double-backward path.
    Matrix xt = tu::randomMatrix(n, d, init);
    auto buildCritic = [&](Tape& tape) {
      Rng fixed(777);
      return wganGpCriticLoss(tape, critic, tape.constant(x), tape.constant(xt), 10.0, fixed);
    };
    auto criticParams = critic.params();
    {
      Tape tape;
      Tape::Id loss = buildCritic(tape);
      zeroGrads(criticParams);
      tape.backward(loss, criticParams);
      auto value = [&]() {
        Tape t;
        return t.scalarValue(buildCritic(t));
      };
      worst = std::max(worst, tu::maxGradientError(value, criticParams, 1e-5, 1e-8));
    }
    if (worst >= 1e-4) break;
  }
  std::ostringstream ss;
  ss << "worst relative error " << worst;
  detail = ss.str();
  return worst < 1e-4;
}

// ---------------------------------------------------------------------------
// 2. Oracle equivalence for the numeric kernels.

bool criterion2(std::string& detail) {
  Rng rng(4242);
  double worst = 0.0;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };

  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(5);
    const std::size_t d = 1 + rng.index(4);
    Matrix x = tu::randomMatrix(n, d, rng, 2.0);
    Matrix xt = tu::randomMatrix(n, d, rng, 2.0);
    Tape tape;
    Tape::Id xc = tape.constant(x);
    Tape::Id xtc = tape.constant(xt);

    track(tape.scalarValue(mseLoss(tape, xc, xtc)), tu::oracleMse(x, xt));
    track(tape.scalarValue(kldLoss(tape, xtc)), tu::oracleKld(xt));
    const double bw = 0.5 + rng.uniform();
    track(tape.scalarValue(mmdLoss(tape, xc, xtc, bw, false)), tu::oracleMmd(x, xt, bw, false));
    track(tape.scalarValue(pnlLoss(tape, xc, xtc)), tu::oracleMse(x, xt));

    Matrix a = tu::randomMatrix(2 + rng.index(3), 0, rng);  // placeholder reshaped below
    const std::size_t ad = 2 + rng.index(3);
    a = tu::randomMatrix(ad, ad, rng, 1.2);
    track(acyclicityH(a), tu::oracleAcyclicity(a));

    // SHD vs the breadth-first edit-distance oracle.
    auto randomGraph = [&](std::size_t gd) {
      BinaryDag g;
      g.d = gd;
      for (int i = 0; i < static_cast<int>(gd); ++i)
        for (int j = 0; j < static_cast<int>(gd); ++j)
          if (i != j && rng.uniform() < 0.3) g.edges.emplace(i, j);
      return g;
    };
    BinaryDag g1 = randomGraph(3), g2 = randomGraph(3);
    track(structuralMetrics(g1, g2).shd, tu::oracleShd(g1, g2));
  }
  std::ostringstream ss;
  ss << "worst absolute deviation " << worst;
  detail = ss.str();
  return worst < 1e-12;
}

// ---------------------------------------------------------------------------
// 3-5. Desk-scale benchmarks.

bool criterion3(std::string& detail) {
  BenchmarkOutcome out =
      runBenchmark(SemFamily::Linear, Assumption::ANM, 10, 5000, 3.0, {1, 2, 3, 4, 5}, detail);
  return out.meanShd <= 5.0;
}

bool criterion4(std::string& detail) {
  BenchmarkOutcome out =
      runBenchmark(SemFamily::NonLinear1, Assumption::ANM, 10, 5000, 3.0, {1, 2, 3, 4, 5}, detail);
  return out.meanShd <= 8.0;
}

bool criterion5(std::string& detail) {
  std::string pnlDetail, anmDetail;
  BenchmarkOutcome pnl = runBenchmark(SemFamily::PostNonLinear1, Assumption::PNL, 10, 5000, 3.0,
                                      {1, 2, 3, 4, 5}, pnlDetail);
  BenchmarkOutcome anm = runBenchmark(SemFamily::PostNonLinear1, Assumption::ANM, 10, 5000, 3.0,
                                      {1, 2, 3, 4, 5}, anmDetail);
  detail = "pnl: " + pnlDetail + " | anm: " + anmDetail;
  return pnl.meanShd <= 12.0 && pnl.meanShd < anm.meanShd;
}

// ---------------------------------------------------------------------------
// 6. Constraint satisfaction.

bool criterion6(std::string& detail) {
  Rng rng(606);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t d = 2 + rng.index(9);
    auto [dag, weights] = sampleErDag(d, std::min<double>(3.0, d - 1.0) * rng.uniform(), rng);
    if (acyclicityH(weights) != 0.0) {
      detail = "sampled ER graph with nonzero h";
      return false;
    }
  }

  std::size_t converged = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng r(seed);
    auto [dag, weights] = sampleErDag(4, 1.5, r);
    Dataset data = generate(weights, SemFamily::Linear, NoiseSpec{NoiseSpec::Kind::Uniform, 1.0},
                            600, r);
    TrainConfig cfg;
    cfg.assumption = Assumption::ANM;
    cfg.seed = seed;
    cfg.batchSize = 200;
    cfg.epochs = 40;
    cfg.kMaxIter = 25;
    cfg.plateauPatience = 8;
    cfg.criticHidden = 16;
    cfg.dropout = 0.0;
    cfg.mmdMaxRows = 64;
    Step1Result res = runStep1(data, cfg, r);
    if (res.report.converged) {
      ++converged;
      if (res.report.finalH > cfg.hTol) {
        detail = "converged run with h above tolerance";
        return false;
      }
      if (acyclicityH(res.report.finalAdjacency) > cfg.hTol) {
        detail = "reported h disagrees with recomputation";
        return false;
      }
    }
  }
  std::ostringstream ss;
  ss << converged << "/20 runs converged, all with h <= 1e-8; 1000 ER samples exactly acyclic";
  detail = ss.str();
  return converged >= 15;
}

// ---------------------------------------------------------------------------
// 7. Synthesis fidelity at known structure.

bool criterion7(std::string& detail) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    Rng rng(seed);
    auto [dag, weights] = sampleErDag(10, 3.0, rng);
    Dataset train =
        generate(weights, SemFamily::Linear, NoiseSpec{NoiseSpec::Kind::Uniform, 1.0}, 5000, rng);
    Dataset held =
        generate(weights, SemFamily::Linear, NoiseSpec{NoiseSpec::Kind::Uniform, 1.0}, 5000, rng);

    TrainConfig cfg = benchmarkConfig(Assumption::ANM, seed);
    Rng trainRng(seed);
    Step1Result step1 = runStep1(train, cfg, trainRng);
    const int shd = structuralMetrics(step1.report.finalDag, dag).shd;
    std::cerr << "  [synthesis] seed " << seed << ": step-1 shd=" << shd << "\n";
    if (shd != 0) continue;  // retry seeds until a perfect graph shows up

    Step2Result step2 = runStep2(step1.model, train, cfg, trainRng);
    SynthesisResult synth = synthesize(step2.model, 5000, cfg.thresholdTau, cfg.zSize, trainRng);
    QualityReport q = qualityReport(held, synth.data);
    std::ostringstream ss;
    ss << "seed " << seed << ": corr_frobenius_diff=" << q.corrFrobeniusDiff
       << " mmd_stat=" << q.mmdStat;
    detail = ss.str();
    return q.corrFrobeniusDiff < 0.5 && std::abs(q.mmdStat) < 0.05;
  }
  detail = "no seed reached SHD 0 in 12 attempts";
  return false;
}

// ---------------------------------------------------------------------------
// 8. Determinism through the CLI surface.

bool criterion8(std::string& detail) {
  const std::string root = "/tmp/dagaf_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);
  auto p = [&](const std::string& leaf) { return root + "/" + leaf; };

  if (runCliArgs({"simulate", "--family", "linear", "--d", "5", "--n", "600", "--degree", "2",
                  "--seed", "21", "--out", p("sim")}) != 0) {
    detail = "simulate failed";
    return false;
  }
  auto discover = [&](const std::string& out) {
    return runCliArgs({"discover", "--data", p("sim/data.csv"), "--assumption", "anm", "--out",
                       p(out), "--quiet", "--set", "seed=21", "--set", "epochs=12", "--set",
                       "k_max_iter=3", "--set", "batch_size=200", "--set", "critic_hidden=16",
                       "--set", "dropout=0.5", "--set", "plateau_patience=4", "--set",
                       "mmd_max_rows=64", "--set", "step2_epochs=6"});
  };
  if (discover("d1") != 0 || discover("d2") != 0) {
    detail = "discover failed";
    return false;
  }
  if (slurp(p("d1/adjacency.csv")) != slurp(p("d2/adjacency.csv"))) {
    detail = "adjacency CSVs differ";
    return false;
  }
  auto synth = [&](const std::string& from, const std::string& out) {
    return runCliArgs({"synthesize", "--data", p("sim/data.csv"), "--checkpoint",
                       p(from + "/checkpoint"), "--n", "300", "--out", p(out), "--quiet"});
  };
  if (synth("d1", "s1") != 0 || synth("d2", "s2") != 0) {
    detail = "synthesize failed";
    return false;
  }
  if (slurp(p("s1/synthetic.csv")) != slurp(p("s2/synthetic.csv"))) {
    detail = "synthetic CSVs differ";
    return false;
  }
  detail = "adjacency and synthetic CSVs bit-identical across reruns";
  return true;
}

// ---------------------------------------------------------------------------
// 9. Full-scale table specs are accepted and produce well-formed rows.

bool criterion9(std::string& detail) {
  const std::string root = "/tmp/dagaf_acceptance_scale";
  fs::remove_all(root);
  fs::create_directories(root);
  auto p = [&](const std::string& leaf) { return root + "/" + leaf; };

  // Sachs-shaped continuous data: 11 columns with a 20-edge ground truth.
  {
    Rng rng(909);
    BinaryDag truth;
    truth.d = 11;
    Matrix weights(11, 11, 0.0);
    while (truth.edges.size() < 20) {
      const int a = static_cast<int>(rng.index(11));
      const int b = static_cast<int>(rng.index(11));
      if (a == b || truth.hasEdge(b, a) || truth.hasEdge(a, b)) continue;
      BinaryDag probe = truth;
      probe.edges.emplace(a, b);
      if (!isAcyclic(probe)) continue;
      truth = probe;
      weights(static_cast<std::size_t>(b), static_cast<std::size_t>(a)) = rng.uniform(0.5, 2.0);
    }
    Dataset sachs = generate(weights, SemFamily::NonLinear1,
                             NoiseSpec{NoiseSpec::Kind::Gaussian, 1.0}, 7466, rng);
    writeDatasetCsv(p("sachs.csv"), sachs);
    writeEdgeListCsv(p("sachs_truth.csv"), truth);
  }

  {
    std::ofstream spec(p("full_scale.spec"));
    // Smoke overrides keep the grid runnable at desk scale; the point is that
    // the d=50/100 and real-data specs are accepted and produce rows.
    const char* overrides =
        "epochs = 2\nk_max_iter = 1\nbatch_size = 500\ncritic_hidden = 8\n"
        "dropout = 0\nplateau_patience = 1\nmmd_max_rows = 32\n";
    spec << "[experiment]\nname = linear-d50\nfamily = linear\nd = 50\nn = 5000\ndegree = 3\n"
         << "seeds = 1\n" << overrides;
    spec << "[experiment]\nname = linear-d100\nfamily = linear\nd = 100\nn = 5000\ndegree = 3\n"
         << "seeds = 1\n" << overrides;
    spec << "[experiment]\nname = sachs-anm\ndata = " << p("sachs.csv")
         << "\ntruth = " << p("sachs_truth.csv") << "\nassumption = anm\nseeds = 1\n" << overrides;
  }
  if (runCliArgs({"benchmark", "--spec", p("full_scale.spec"), "--out", p("bench"), "--jobs",
                  "1"}) != 0) {
    detail = "benchmark command failed";
    return false;
  }
  const std::string table = slurp(p("bench/benchmark.csv"));
  std::size_t lines = 0;
  for (char ch : table)
    if (ch == '\n') ++lines;
  const bool wellFormed = lines == 4 && table.find("linear-d50") != std::string::npos &&
                          table.find("linear-d100") != std::string::npos &&
                          table.find("sachs-anm") != std::string::npos &&
                          table.find("err") == std::string::npos;
  detail = wellFormed ? "3 rows emitted for d=50/d=100/sachs specs" : "table malformed:\n" + table;
  return wellFormed;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.push_back(std::stoi(tok));
    }
  }

  std::vector<Criterion> criteria = {
      {1, "gradient correctness vs central finite differences", criterion1},
      {2, "oracle equivalence of numeric kernels", criterion2},
      {3, "linear benchmark d=10 mean SHD <= 5", criterion3},
      {4, "non-linear-1 benchmark d=10 mean SHD <= 8", criterion4},
      {5, "post-non-linear-1 benchmark: PNL <= 12 and below ANM", criterion5},
      {6, "constraint satisfaction: h <= 1e-8 on convergence, ER h = 0", criterion6},
      {7, "synthesis fidelity at SHD 0 structure", criterion7},
      {8, "bit-identical outputs for identical seed and config", criterion8},
      {9, "full-scale specs accepted with well-formed rows", criterion9},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.label << " ("
              << detail << ") [" << static_cast<int>(secs) << "s]" << std::endl;
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
