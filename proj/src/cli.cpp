#include "dagaf/cli.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "dagaf/checkpoint.hpp"
#include "dagaf/csvio.hpp"
#include "dagaf/errors.hpp"
#include "dagaf/evalsuite.hpp"
#include "dagaf/semgen.hpp"
#include "dagaf/trainer.hpp"

namespace dagaf {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kReportSchema = "dagaf-report/1";

std::uint64_t envSeedFallback() {
  const char* env = std::getenv("DAGAF_SEED");
  if (env == nullptr) return 0;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    throw ConfigError("DAGAF_SEED is not an unsigned integer");
  }
}

TrainConfig baseConfig() {
  TrainConfig cfg;
  cfg.seed = envSeedFallback();
  return cfg;
}

void applySetOverrides(TrainConfig& cfg, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    applyConfigOverride(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
}

json breakdownJson(const EpochTrace& t) {
  return json{{"adv", t.losses.adv},       {"mse", t.losses.mse},
              {"kld", t.losses.kld},       {"mmd", t.losses.mmd},
              {"pnl", t.losses.pnl},       {"acyc_penalty", t.losses.acycPenalty},
              {"total", t.losses.total},   {"h", t.h},
              {"outer_iter", t.outerIter}};
}

json reportJson(const TrainReport& report, const TrainConfig& cfg,
                const std::optional<StructMetrics>& metrics) {
  json epochs = json::array();
  for (const EpochTrace& t : report.epochs) epochs.push_back(breakdownJson(t));
  json lagrangian = json::array();
  for (const LagrangianState& s : report.lagrangian)
    lagrangian.push_back(json{
        {"lambda", s.lambda}, {"c", s.c}, {"h", s.h}, {"outer_iter", s.outerIter}});
  json out{{"schema", kReportSchema},
           {"seed", report.seed},
           {"config", configToMap(cfg)},
           {"final_h", report.finalH},
           {"converged", report.converged},
           {"cyclic_after_threshold", report.cyclicAfterThreshold},
           {"nan_aborted", report.nanAborted},
           {"wall_clock_seconds", report.wallClockSeconds},
           {"epochs", std::move(epochs)},
           {"lagrangian", std::move(lagrangian)}};
  if (metrics) {
    out["shd"] = metrics->shd;
    out["tpr"] = metrics->tpr;
    out["fdr"] = metrics->fdr;
    out["fpr"] = metrics->fpr;
  }
  return out;
}

void writeJson(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

NoiseSpec defaultNoise(SemFamily family, const std::string& noiseName, double scale) {
  NoiseSpec spec;
  spec.scale = scale;
  if (noiseName == "gaussian") spec.kind = NoiseSpec::Kind::Gaussian;
  else if (noiseName == "uniform") spec.kind = NoiseSpec::Kind::Uniform;
  else if (noiseName.empty()) {
    // Linear data plays the LiNGAM role, which needs non-Gaussian noise.
    spec.kind = family == SemFamily::Linear ? NoiseSpec::Kind::Uniform : NoiseSpec::Kind::Gaussian;
  } else {
    throw ConfigError("unknown noise kind '" + noiseName + "'");
  }
  return spec;
}

// ---------------------------------------------------------------------------
// simulate

int cmdSimulate(const std::string& family, std::size_t d, std::size_t n, double degree,
                const std::string& noiseName, double noiseScale, std::uint64_t seed,
                const std::string& out) {
  if (n == 0) throw ConfigError("--n must be positive");
  const SemFamily fam = semFamilyFromString(family);
  const NoiseSpec noise = defaultNoise(fam, noiseName, noiseScale);

  Rng rng(seed);
  auto [dag, weights] = sampleErDag(d, degree, rng);
  Dataset data = generate(weights, fam, noise, n, rng);

  fs::create_directories(out);
  writeDatasetCsv((fs::path(out) / "data.csv").string(), data);
  writeEdgeListCsv((fs::path(out) / "truth_edges.csv").string(), dag);
  writeMatrixCsv((fs::path(out) / "truth_weights.csv").string(), weights);
  return 0;
}

// ---------------------------------------------------------------------------
// discover

int cmdDiscover(const std::string& dataPath, const std::string& assumption,
                const std::string& configPath, const std::vector<std::string>& sets,
                const std::string& preset, const std::string& truthPath, const std::string& out,
                bool quiet) {
  TrainConfig cfg = baseConfig();
  if (!configPath.empty()) cfg = parseConfigFile(configPath, cfg);
  if (!assumption.empty()) cfg.assumption = assumptionFromString(assumption);
  if (!preset.empty()) cfg = applyPreset(cfg, preset);
  applySetOverrides(cfg, sets);
  cfg.verbose = !quiet;
  cfg.validate();

  Dataset data = readDatasetCsv(dataPath);
  std::optional<BinaryDag> truth;
  if (!truthPath.empty()) truth = readEdgeListCsv(truthPath, data.d());

  fs::create_directories(out);
  Rng rng(cfg.seed);

  TrainReport report;
  if (cfg.interleaved) {
    InterleavedResult res = runInterleaved(data, cfg, rng);
    report = std::move(res.report);
    saveCheckpoint((fs::path(out) / "checkpoint").string(), res.discovery, nullptr, cfg);
    saveCheckpoint((fs::path(out) / "checkpoint_ds").string(), res.synthesis, nullptr, cfg);
  } else {
    Step1Result res = runStep1(data, cfg, rng);
    report = std::move(res.report);
    saveCheckpoint((fs::path(out) / "checkpoint").string(), res.model, &res.critic, cfg);
  }

  std::optional<StructMetrics> metrics;
  if (truth) metrics = structuralMetrics(report.finalDag, *truth);

  writeMatrixCsv((fs::path(out) / "adjacency.csv").string(), report.finalAdjacency);
  writeEdgeListCsv((fs::path(out) / "edges.csv").string(), report.finalDag);
  writeJson(fs::path(out) / "report.json", reportJson(report, cfg, metrics));
  return 0;
}

// ---------------------------------------------------------------------------
// synthesize

int cmdSynthesize(const std::string& dataPath, const std::string& checkpointPrefix, std::size_t n,
                  const std::vector<std::string>& sets, const std::string& out, bool quiet) {
  LoadedCheckpoint loaded = loadCheckpoint(checkpointPrefix);
  TrainConfig cfg = loaded.config;
  applySetOverrides(cfg, sets);
  cfg.verbose = !quiet;
  cfg.validate();

  Dataset data = readDatasetCsv(dataPath);
  if (data.d() != loaded.model.d())
    throw ConfigError("synthesize: data width does not match checkpoint");

  fs::create_directories(out);
  Rng rng(cfg.seed);
  Step2Result res = runStep2(loaded.model, data, cfg, rng);
  SynthesisResult synth = synthesize(res.model, n, cfg.thresholdTau, cfg.zSize, rng);
  synth.data.columns = data.columns;

  writeDatasetCsv((fs::path(out) / "synthetic.csv").string(), synth.data);
  saveCheckpoint((fs::path(out) / "checkpoint").string(), res.model, &res.critic, cfg);
  json j = reportJson(res.report, cfg, std::nullopt);
  j["cyclic_fallback"] = synth.cyclicFallback;
  j["synthetic_rows"] = n;
  writeJson(fs::path(out) / "report.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

int cmdEvaluate(const std::string& realPath, const std::string& synthPath,
                const std::string& out) {
  Dataset real = readDatasetCsv(realPath);
  Dataset synth = readDatasetCsv(synthPath);
  if (real.d() != synth.d()) throw ConfigError("evaluate: column counts differ");

  QualityReport q = qualityReport(real, synth);

  fs::create_directories(out);
  writeMatrixCsv((fs::path(out) / "corr_real.csv").string(), q.corrReal);
  writeMatrixCsv((fs::path(out) / "corr_synth.csv").string(), q.corrSynth);
  writeMatrixCsv((fs::path(out) / "pca_real.csv").string(), q.pcaReal2d);
  writeMatrixCsv((fs::path(out) / "pca_synth.csv").string(), q.pcaSynth2d);
  writeMarginalSummaries(out, real, synth);

  json j{{"schema", kReportSchema},
         {"corr_frobenius_diff", q.corrFrobeniusDiff},
         {"mmd_stat", q.mmdStat},
         {"mann_whitney_p", q.mannWhitneyP},
         {"constant_columns_real", q.constantColumnsReal},
         {"constant_columns_synth", q.constantColumnsSynth}};
  writeJson(fs::path(out) / "quality.json", j);
  return 0;
}

// ---------------------------------------------------------------------------
// benchmark

struct ExperimentSpec {
  std::string name;
  std::string family;  // empty when data file given
  std::size_t d = 10;
  std::size_t n = 5000;
  double degree = 3.0;
  std::string noise;
  std::string dataPath;
  std::string truthPath;
  std::string preset;
  std::vector<std::uint64_t> seeds;
  TrainConfig config;
};

std::vector<ExperimentSpec> parseBenchmarkSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec '" + path + "'");

  std::vector<ExperimentSpec> specs;
  ExperimentSpec* current = nullptr;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);

    if (line == "[experiment]") {
      specs.emplace_back();
      specs.back().config = baseConfig();
      current = &specs.back();
      continue;
    }
    if (current == nullptr)
      throw ConfigError("spec line " + std::to_string(lineNo) + " appears before [experiment]");
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("spec line " + std::to_string(lineNo) + " is not key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const std::size_t x = s.find_first_not_of(" \t");
      const std::size_t y = s.find_last_not_of(" \t");
      s = x == std::string::npos ? "" : s.substr(x, y - x + 1);
    };
    trim(key);
    trim(value);

    if (key == "name") current->name = value;
    else if (key == "family") current->family = value;
    else if (key == "d") current->d = std::stoul(value);
    else if (key == "n") current->n = std::stoul(value);
    else if (key == "degree") current->degree = std::stod(value);
    else if (key == "noise") current->noise = value;
    else if (key == "data") current->dataPath = value;
    else if (key == "truth") current->truthPath = value;
    else if (key == "preset") current->preset = value;
    else if (key == "seeds") {
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) current->seeds.push_back(std::stoull(tok));
    } else {
      applyConfigOverride(current->config, key, value);
    }
  }
  if (specs.empty()) throw ConfigError("spec file lists no experiments");
  for (auto& spec : specs) {
    if (spec.seeds.empty()) throw ConfigError("experiment '" + spec.name + "' lists no seeds");
    if (spec.family.empty() && spec.dataPath.empty())
      throw ConfigError("experiment '" + spec.name + "' needs a family or a data file");
    if (!spec.preset.empty()) spec.config = applyPreset(spec.config, spec.preset);
  }
  return specs;
}

struct CellResult {
  bool ok = false;
  std::string error;
  StructMetrics metrics;
  double wallClock = 0.0;
};

CellResult runBenchmarkCell(const ExperimentSpec& spec, std::uint64_t seed) {
  CellResult out;
  try {
    TrainConfig cfg = spec.config;
    cfg.seed = seed;
    cfg.validate();

    Dataset data;
    std::optional<BinaryDag> truth;
    Rng rng(seed);
    if (!spec.dataPath.empty()) {
      data = readDatasetCsv(spec.dataPath);
      if (!spec.truthPath.empty()) truth = readEdgeListCsv(spec.truthPath, data.d());
    } else {
      const SemFamily fam = semFamilyFromString(spec.family);
      auto [dag, weights] = sampleErDag(spec.d, spec.degree, rng);
      data = generate(weights, fam, defaultNoise(fam, spec.noise, 1.0), spec.n, rng);
      truth = dag;
    }

    Step1Result res = runStep1(data, cfg, rng);
    out.wallClock = res.report.wallClockSeconds;
    if (truth) out.metrics = structuralMetrics(res.report.finalDag, *truth);
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

int cmdBenchmark(const std::string& specPath, const std::string& out, std::size_t jobs) {
  std::vector<ExperimentSpec> specs = parseBenchmarkSpec(specPath);

  struct Cell {
    std::size_t spec;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < specs.size(); ++s)
    for (std::uint64_t seed : specs[s].seeds) cells.push_back({s, seed});

  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, cells.size());

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      results[i] = runBenchmarkCell(specs[cells[i].spec], cells[i].seed);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t + 1 < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  fs::create_directories(out);
  std::ofstream table(fs::path(out) / "benchmark.csv");
  if (!table) throw IoError("cannot write benchmark.csv under '" + out + "'");
  table << "name,family,d,n,assumption,preset,seeds,per_seed_shd,mean_shd,std_shd,mean_tpr,"
           "mean_fdr,mean_fpr,mean_wall_clock_s,error\n";

  std::size_t cellIdx = 0;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const ExperimentSpec& spec = specs[s];
    std::vector<double> shds, tprs, fdrs, fprs, clocks;
    std::string error;
    std::string perSeed;
    for (std::size_t k = 0; k < spec.seeds.size(); ++k, ++cellIdx) {
      const CellResult& r = results[cellIdx];
      if (!perSeed.empty()) perSeed += ';';
      if (r.ok) {
        perSeed += std::to_string(r.metrics.shd);
        shds.push_back(r.metrics.shd);
        tprs.push_back(r.metrics.tpr);
        fdrs.push_back(r.metrics.fdr);
        fprs.push_back(r.metrics.fpr);
        clocks.push_back(r.wallClock);
      } else {
        perSeed += "err";
        if (error.empty()) error = r.error;
      }
    }
    auto mean = [](const std::vector<double>& v) {
      if (v.empty()) return 0.0;
      double s2 = 0.0;
      for (double x : v) s2 += x;
      return s2 / static_cast<double>(v.size());
    };
    auto stddev = [&](const std::vector<double>& v) {
      if (v.size() < 2) return 0.0;
      const double m = mean(v);
      double s2 = 0.0;
      for (double x : v) s2 += (x - m) * (x - m);
      return std::sqrt(s2 / static_cast<double>(v.size() - 1));
    };

    const bool complete = shds.size() == spec.seeds.size();
    table << (spec.name.empty() ? ("experiment-" + std::to_string(s + 1)) : spec.name) << ','
          << (spec.family.empty() ? "data" : spec.family) << ',' << spec.d << ',' << spec.n << ','
          << toString(spec.config.assumption) << ','
          << (spec.preset.empty() ? "default" : spec.preset) << ',' << spec.seeds.size() << ','
          << perSeed << ',';
    if (complete) {
      table << formatReal(mean(shds)) << ',' << formatReal(stddev(shds)) << ','
            << formatReal(mean(tprs)) << ',' << formatReal(mean(fdrs)) << ','
            << formatReal(mean(fprs)) << ',' << formatReal(mean(clocks)) << ',';
    } else {
      table << ",,,,,,";
    }
    table << error << '\n';
  }
  if (!table) throw IoError("write failed for benchmark.csv");
  return 0;
}

}  // namespace

int runCli(int argc, const char* const* argv) {
  CLI::App app{"Causal structure learning and tabular data synthesis"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic benchmark dataset");
  std::string simFamily = "linear";
  std::size_t simD = 10, simN = 5000;
  double simDegree = 3.0, simScale = 1.0;
  std::string simNoise, simOut = "sim";
  std::uint64_t simSeed = 0;
  bool simSeedSet = false;
  simulate->add_option("--family", simFamily, "linear|non-linear-1|non-linear-2|post-non-linear-1|post-non-linear-2");
  simulate->add_option("--d", simD, "variable count");
  simulate->add_option("--n", simN, "sample count");
  simulate->add_option("--degree", simDegree, "expected node degree");
  simulate->add_option("--noise", simNoise, "gaussian|uniform (default depends on family)");
  simulate->add_option("--noise-scale", simScale, "noise standard deviation");
  simulate->add_option("--seed", simSeed, "random seed")->each([&](const std::string&) { simSeedSet = true; });
  simulate->add_option("--out", simOut, "output directory")->required();

  // discover
  auto* discover = app.add_subcommand("discover", "Learn a DAG from observational data");
  std::string disData, disAssumption, disConfig, disPreset, disTruth, disOut = "discover";
  std::vector<std::string> disSets;
  bool disQuiet = false;
  discover->add_option("--data", disData, "input CSV")->required();
  discover->add_option("--assumption", disAssumption, "lingam|anm|pnl");
  discover->add_option("--config", disConfig, "key=value config file");
  discover->add_option("--set", disSets, "config override key=value (repeatable)");
  discover->add_option("--preset", disPreset, "ablation or sensitivity preset name");
  discover->add_option("--truth", disTruth, "ground-truth edge list CSV");
  discover->add_option("--out", disOut, "output directory")->required();
  discover->add_flag("--quiet", disQuiet, "suppress per-epoch progress on stderr");

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "Train the synthesis step and sample data");
  std::string synData, synCheckpoint, synOut = "synth";
  std::size_t synN = 0;
  std::vector<std::string> synSets;
  bool synQuiet = false;
  synth->add_option("--data", synData, "input CSV")->required();
  synth->add_option("--checkpoint", synCheckpoint, "checkpoint prefix from discover")->required();
  synth->add_option("--n", synN, "number of synthetic rows")->required();
  synth->add_option("--set", synSets, "config override key=value (repeatable)");
  synth->add_option("--out", synOut, "output directory")->required();
  synth->add_flag("--quiet", synQuiet, "suppress per-epoch progress on stderr");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compare real and synthetic datasets");
  std::string evalReal, evalSynth, evalOut = "eval";
  evaluate->add_option("--real", evalReal, "real data CSV")->required();
  evaluate->add_option("--synth", evalSynth, "synthetic data CSV")->required();
  evaluate->add_option("--out", evalOut, "output directory")->required();

  // benchmark
  auto* benchmark = app.add_subcommand("benchmark", "Run an experiment grid");
  std::string benchSpec, benchOut = "bench";
  std::size_t benchJobs = 0;
  benchmark->add_option("--spec", benchSpec, "experiment spec file")->required();
  benchmark->add_option("--out", benchOut, "output directory")->required();
  benchmark->add_option("--jobs", benchJobs, "worker count (default: hardware threads)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (simulate->parsed()) {
      if (!simSeedSet) simSeed = envSeedFallback();
      return cmdSimulate(simFamily, simD, simN, simDegree, simNoise, simScale, simSeed, simOut);
    }
    if (discover->parsed())
      return cmdDiscover(disData, disAssumption, disConfig, disSets, disPreset, disTruth, disOut,
                         disQuiet);
    if (synth->parsed())
      return cmdSynthesize(synData, synCheckpoint, synN, synSets, synOut, synQuiet);
    if (evaluate->parsed()) return cmdEvaluate(evalReal, evalSynth, evalOut);
    if (benchmark->parsed()) return cmdBenchmark(benchSpec, benchOut, benchJobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace dagaf
