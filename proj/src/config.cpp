#include "dagaf/config.hpp"

#include <cstdio>
#include <fstream>

#include "dagaf/errors.hpp"

namespace dagaf {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

bool parseBool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected boolean, got '" + v + "'");
}

double parseDouble(const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("expected number, got '" + v + "'");
  }
}

std::size_t parseCount(const std::string& v) {
  const double x = parseDouble(v);
  if (x < 0 || x != static_cast<double>(static_cast<std::size_t>(x)))
    throw ConfigError("expected non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

ReconKind reconFromString(const std::string& v) {
  if (v == "none") return ReconKind::None;
  if (v == "mse") return ReconKind::Mse;
  if (v == "nll") return ReconKind::Nll;
  throw ConfigError("unknown recon kind '" + v + "'");
}

std::string toString(ReconKind r) {
  switch (r) {
    case ReconKind::None: return "none";
    case ReconKind::Mse: return "mse";
    case ReconKind::Nll: return "nll";
  }
  return "?";
}

}  // namespace

void TrainConfig::validate() const {
  if (lr <= 0) throw ConfigError("lr must be positive");
  if (batchSize < 1) throw ConfigError("batch_size must be at least 1");
  if (hTol <= 0) throw ConfigError("h_tol must be positive");
  if (rhoMult <= 1) throw ConfigError("rho_mult must exceed 1");
  if (progressRatio <= 0 || progressRatio >= 1)
    throw ConfigError("progress_ratio must lie in (0, 1)");
  if (cMax < 1) throw ConfigError("c_max must be at least 1");
  if (thresholdTau < 0) throw ConfigError("threshold_tau must be non-negative");
  if (weightDecay < 0) throw ConfigError("weight_decay must be non-negative");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must lie in [0, 1)");
  if (latentH < 1) throw ConfigError("latent_h must be positive");
  if (criticHidden < 1) throw ConfigError("critic_hidden must be positive");
  if (plateauTol < 0) throw ConfigError("plateau_tol must be non-negative");
  if (criticStepsStep1 < 1 || criticStepsStep2 < 1)
    throw ConfigError("critic step counts must be positive");
  if (mmdMaxRows < 2) throw ConfigError("mmd_max_rows must be at least 2");
  weights.validate();
}

void applyConfigOverride(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "assumption") cfg.assumption = assumptionFromString(value);
  else if (key == "lr") cfg.lr = parseDouble(value);
  else if (key == "batch_size") cfg.batchSize = parseCount(value);
  else if (key == "epochs") cfg.epochs = parseCount(value);
  else if (key == "k_max_iter") cfg.kMaxIter = parseCount(value);
  else if (key == "h_tol") cfg.hTol = parseDouble(value);
  else if (key == "c_max") cfg.cMax = parseDouble(value);
  else if (key == "rho_mult") cfg.rhoMult = parseDouble(value);
  else if (key == "progress_ratio") cfg.progressRatio = parseDouble(value);
  else if (key == "threshold_tau") cfg.thresholdTau = parseDouble(value);
  else if (key == "weight_decay") cfg.weightDecay = parseDouble(value);
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parseCount(value));
  else if (key == "dropout") cfg.dropout = parseDouble(value);
  else if (key == "z_size") cfg.zSize = parseCount(value);
  else if (key == "latent_h") cfg.latentH = parseCount(value);
  else if (key == "critic_hidden") cfg.criticHidden = parseCount(value);
  else if (key == "recon") cfg.recon = reconFromString(value);
  else if (key == "w_adv") cfg.weights.adv = parseDouble(value);
  else if (key == "w_mse") cfg.weights.mse = parseDouble(value);
  else if (key == "w_kld") cfg.weights.kld = parseDouble(value);
  else if (key == "w_mmd") cfg.weights.mmd = parseDouble(value);
  else if (key == "w_pnl") cfg.weights.pnl = parseDouble(value);
  else if (key == "gp_coeff") cfg.weights.gpCoeff = parseDouble(value);
  else if (key == "absolute_progress_test") cfg.absoluteProgressTest = parseBool(value);
  else if (key == "lambda_overwrite") cfg.lambdaOverwrite = parseBool(value);
  else if (key == "interleaved") cfg.interleaved = parseBool(value);
  else if (key == "standardize") cfg.standardize = parseBool(value);
  else if (key == "mmd_unbiased") cfg.mmdUnbiased = parseBool(value);
  else if (key == "mmd_max_rows") cfg.mmdMaxRows = parseCount(value);
  else if (key == "plateau_patience") cfg.plateauPatience = parseCount(value);
  else if (key == "plateau_tol") cfg.plateauTol = parseDouble(value);
  else if (key == "critic_steps_step1") cfg.criticStepsStep1 = parseCount(value);
  else if (key == "critic_steps_step2") cfg.criticStepsStep2 = parseCount(value);
  else if (key == "step2_epochs") cfg.step2Epochs = parseCount(value);
  else throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig parseConfigFile(const std::string& path, const TrainConfig& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  TrainConfig cfg = base;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineNo) + " is not key=value");
    try {
      applyConfigOverride(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
  return cfg;
}

std::map<std::string, std::string> configToMap(const TrainConfig& cfg) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  std::map<std::string, std::string> m;
  m["assumption"] = toString(cfg.assumption);
  m["lr"] = num(cfg.lr);
  m["batch_size"] = std::to_string(cfg.batchSize);
  m["epochs"] = std::to_string(cfg.epochs);
  m["k_max_iter"] = std::to_string(cfg.kMaxIter);
  m["h_tol"] = num(cfg.hTol);
  m["c_max"] = num(cfg.cMax);
  m["rho_mult"] = num(cfg.rhoMult);
  m["progress_ratio"] = num(cfg.progressRatio);
  m["threshold_tau"] = num(cfg.thresholdTau);
  m["weight_decay"] = num(cfg.weightDecay);
  m["seed"] = std::to_string(cfg.seed);
  m["dropout"] = num(cfg.dropout);
  m["z_size"] = std::to_string(cfg.zSize);
  m["latent_h"] = std::to_string(cfg.latentH);
  m["critic_hidden"] = std::to_string(cfg.criticHidden);
  m["recon"] = toString(cfg.recon);
  m["w_adv"] = num(cfg.weights.adv);
  m["w_mse"] = num(cfg.weights.mse);
  m["w_kld"] = num(cfg.weights.kld);
  m["w_mmd"] = num(cfg.weights.mmd);
  m["w_pnl"] = num(cfg.weights.pnl);
  m["gp_coeff"] = num(cfg.weights.gpCoeff);
  m["absolute_progress_test"] = cfg.absoluteProgressTest ? "true" : "false";
  m["lambda_overwrite"] = cfg.lambdaOverwrite ? "true" : "false";
  m["interleaved"] = cfg.interleaved ? "true" : "false";
  m["standardize"] = cfg.standardize ? "true" : "false";
  m["mmd_unbiased"] = cfg.mmdUnbiased ? "true" : "false";
  m["mmd_max_rows"] = std::to_string(cfg.mmdMaxRows);
  m["plateau_patience"] = std::to_string(cfg.plateauPatience);
  m["plateau_tol"] = num(cfg.plateauTol);
  m["critic_steps_step1"] = std::to_string(cfg.criticStepsStep1);
  m["critic_steps_step2"] = std::to_string(cfg.criticStepsStep2);
  m["step2_epochs"] = std::to_string(cfg.step2Epochs);
  return m;
}

TrainConfig applyPreset(const TrainConfig& base, const std::string& preset) {
  TrainConfig cfg = base;
  auto lossCombo = [&](ReconKind recon, bool kld, bool mmd) {
    cfg.recon = recon;
    if (recon == ReconKind::None) cfg.weights.mse = 0.0;
    if (!kld) cfg.weights.kld = 0.0;
    if (!mmd) cfg.weights.mmd = 0.0;
  };

  if (preset.empty() || preset == "default") return cfg;

  // Loss-term combinations; adversarial training is always on.
  if (preset == "no-recon") lossCombo(ReconKind::None, false, false);
  else if (preset == "mse") lossCombo(ReconKind::Mse, false, false);
  else if (preset == "nll") lossCombo(ReconKind::Nll, false, false);
  else if (preset == "mse+mmd") lossCombo(ReconKind::Mse, false, true);
  else if (preset == "nll+mmd") lossCombo(ReconKind::Nll, false, true);
  else if (preset == "mse+kld") lossCombo(ReconKind::Mse, true, false);
  else if (preset == "nll+kld") lossCombo(ReconKind::Nll, true, false);
  else if (preset == "mse+kld+mmd") lossCombo(ReconKind::Mse, true, true);
  else if (preset == "nll+kld+mmd") lossCombo(ReconKind::Nll, true, true);
  // Hyper-parameter sensitivity rows.
  else if (preset == "sensitivity-1") { cfg.lr = 3e-3; cfg.dropout = 0.5; cfg.zSize = 1; cfg.batchSize = 100; }
  else if (preset == "sensitivity-2") { cfg.lr = 3e-3; cfg.dropout = 0.0; cfg.zSize = 1; cfg.batchSize = 100; }
  else if (preset == "sensitivity-3") { cfg.lr = 3e-3; cfg.dropout = 0.5; cfg.zSize = 2; cfg.batchSize = 100; }
  else if (preset == "sensitivity-4") { cfg.lr = 3e-3; cfg.dropout = 0.5; cfg.zSize = 5; cfg.batchSize = 100; }
  else if (preset == "sensitivity-5") { cfg.lr = 3e-3; cfg.dropout = 0.5; cfg.zSize = 1; cfg.batchSize = 500; }
  else if (preset == "sensitivity-6") { cfg.lr = 3e-3; cfg.dropout = 0.5; cfg.zSize = 1; cfg.batchSize = 1000; }
  else if (preset == "sensitivity-7") { cfg.lr = 2e-4; cfg.dropout = 0.5; cfg.zSize = 1; cfg.batchSize = 100; }
  else if (preset == "sensitivity-8") { cfg.lr = 1e-3; cfg.dropout = 0.5; cfg.zSize = 1; cfg.batchSize = 100; }
  else throw ConfigError("unknown preset '" + preset + "'");
  return cfg;
}

bool isKnownPreset(const std::string& preset) {
  try {
    applyPreset(TrainConfig{}, preset);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

}  // namespace dagaf
