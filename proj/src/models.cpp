#include "dagaf/models.hpp"

#include <cmath>

#include "dagaf/errors.hpp"

namespace dagaf {

namespace {

constexpr double kFirstLayerInitRange = 0.1;

Matrix uniformInit(std::size_t rows, std::size_t cols, double range, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-range, range);
  return m;
}

Matrix fanInInit(std::size_t rows, std::size_t cols, std::size_t fanIn, Rng& rng) {
  return uniformInit(rows, cols, 1.0 / std::sqrt(static_cast<double>(fanIn)), rng);
}

void initMlp(std::vector<Param>& ws, std::vector<Param>& bs, const std::vector<std::size_t>& widths,
             const std::string& prefix, Rng& rng) {
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    ws.emplace_back(prefix + "." + std::to_string(l), fanInInit(out, in, in, rng));
    bs.emplace_back(prefix + "." + std::to_string(l) + ".bias", Matrix(1, out, 0.0));
  }
}

Tape::Id mlpForward(Tape& tape, Tape::Id x, const std::vector<Param>& ws,
                    const std::vector<Param>& bs, bool reluHidden) {
  Tape::Id h = x;
  for (std::size_t l = 0; l < ws.size(); ++l) {
    h = tape.addRowVec(tape.matmul(h, tape.transpose(tape.leaf(const_cast<Param&>(ws[l])))),
                       tape.leaf(const_cast<Param&>(bs[l])));
    if (reluHidden && l + 1 < ws.size()) h = tape.relu(h);
  }
  return h;
}

}  // namespace

Assumption assumptionFromString(const std::string& name) {
  if (name == "lingam") return Assumption::LiNGAM;
  if (name == "anm") return Assumption::ANM;
  if (name == "pnl") return Assumption::PNL;
  throw ConfigError("unknown assumption '" + name + "'");
}

std::string toString(Assumption a) {
  switch (a) {
    case Assumption::LiNGAM: return "lingam";
    case Assumption::ANM: return "anm";
    case Assumption::PNL: return "pnl";
  }
  return "?";
}

FcmModel::FcmModel(std::size_t d, std::size_t latentH, Assumption assumption, Rng& rng)
    : d_(d), latentH_(assumption == Assumption::LiNGAM ? 1 : latentH), assumption_(assumption) {
  if (d < 1) throw ConfigError("FcmModel: at least one variable required");
  if (latentH_ < 1) throw ConfigError("FcmModel: latent size must be positive");

  nodes_.reserve(d_);
  masks_.reserve(d_);
  for (std::size_t j = 0; j < d_; ++j) {
    LocalNet net;
    Matrix w = uniformInit(latentH_, d_, kFirstLayerInitRange, rng);
    for (std::size_t m = 0; m < latentH_; ++m) w(m, j) = 0.0;  // no self-loop
    net.l0W = Param("l0.node" + std::to_string(j), std::move(w));
    net.l0B = Param("l0.node" + std::to_string(j) + ".bias", Matrix(1, latentH_, 0.0));
    net.hidW = Param("hidden1.node" + std::to_string(j), fanInInit(1, latentH_, latentH_, rng));
    net.hidB = Param("hidden1.node" + std::to_string(j) + ".bias", Matrix(1, 1, 0.0));
    nodes_.push_back(std::move(net));

    Matrix mask(latentH_, d_, 1.0);
    for (std::size_t m = 0; m < latentH_; ++m) mask(m, j) = 0.0;
    masks_.push_back(std::move(mask));
  }

  if (assumption_ == Assumption::PNL) {
    PnlPair pair;
    const std::vector<std::size_t> widths = {d_, 10 * d_, 10 * d_, 10 * d_, d_};
    initMlp(pair.gW, pair.gB, widths, "g", rng);
    initMlp(pair.gInvW, pair.gInvB, widths, "g_inv", rng);
    pnl_ = std::move(pair);
  }
}

Tape::Id FcmModel::forwardF(Tape& tape, Tape::Id x) const {
  if (tape.value(x).cols() != d_) throw ShapeError("forwardF: input width mismatch");
  std::vector<Tape::Id> cols;
  cols.reserve(d_);
  for (std::size_t j = 0; j < d_; ++j) {
    const LocalNet& net = nodes_[j];
    Tape::Id w = tape.mulConst(tape.leaf(const_cast<Param&>(net.l0W)), masks_[j]);
    Tape::Id pre = tape.addRowVec(tape.matmul(x, tape.transpose(w)),
                                  tape.leaf(const_cast<Param&>(net.l0B)));
    if (assumption_ == Assumption::LiNGAM) {
      cols.push_back(pre);  // single linear map, h == 1
      continue;
    }
    Tape::Id act = tape.sigmoid(pre);
    cols.push_back(tape.addRowVec(tape.matmul(act, tape.transpose(tape.leaf(const_cast<Param&>(net.hidW)))),
                                  tape.leaf(const_cast<Param&>(net.hidB))));
  }
  return tape.concatCols(cols);
}

Tape::Id FcmModel::forward(Tape& tape, Tape::Id x, std::optional<Tape::Id> z) const {
  Tape::Id out = forwardF(tape, x);
  if (z) out = tape.add(out, *z);
  if (assumption_ == Assumption::PNL) out = forwardG(tape, out);
  return out;
}

Tape::Id FcmModel::forwardG(Tape& tape, Tape::Id v) const {
  if (assumption_ != Assumption::PNL) throw ConfigError("forwardG: PNL assumption required");
  return mlpForward(tape, v, pnl_->gW, pnl_->gB, true);
}

Tape::Id FcmModel::forwardGInverse(Tape& tape, Tape::Id x) const {
  if (assumption_ != Assumption::PNL)
    throw ConfigError("forwardGInverse: PNL assumption required");
  return mlpForward(tape, x, pnl_->gInvW, pnl_->gInvB, true);
}

Tape::Id FcmModel::adjacencySquaredOnTape(Tape& tape) const {
  std::vector<Tape::Id> rows;
  rows.reserve(d_);
  for (std::size_t j = 0; j < d_; ++j) {
    Tape::Id w = tape.mulConst(tape.leaf(const_cast<Param&>(nodes_[j].l0W)), masks_[j]);
    rows.push_back(tape.colSum(tape.square(w)));
  }
  return tape.concatRows(rows);
}

Matrix FcmModel::extractAdjacency() const {
  Matrix a(d_, d_, 0.0);
  for (std::size_t j = 0; j < d_; ++j) {
    const Matrix& w = nodes_[j].l0W.value;
    for (std::size_t k = 0; k < d_; ++k) {
      if (k == j) continue;
      double sq = 0.0;
      for (std::size_t m = 0; m < latentH_; ++m) sq += w(m, k) * w(m, k);
      a(j, k) = std::sqrt(sq);
    }
  }
  return a;
}

std::vector<Param*> FcmModel::fParams() {
  std::vector<Param*> out;
  for (LocalNet& net : nodes_) {
    out.push_back(&net.l0W);
    out.push_back(&net.l0B);
    if (assumption_ != Assumption::LiNGAM) {
      out.push_back(&net.hidW);
      out.push_back(&net.hidB);
    }
  }
  return out;
}

std::vector<Param*> FcmModel::hiddenParams() {
  std::vector<Param*> out;
  if (assumption_ == Assumption::LiNGAM) return out;
  for (LocalNet& net : nodes_) {
    out.push_back(&net.hidW);
    out.push_back(&net.hidB);
  }
  return out;
}

std::vector<Param*> FcmModel::gParams() {
  std::vector<Param*> out;
  if (!pnl_) return out;
  for (Param& p : pnl_->gW) out.push_back(&p);
  for (Param& p : pnl_->gB) out.push_back(&p);
  return out;
}

std::vector<Param*> FcmModel::gInvParams() {
  std::vector<Param*> out;
  if (!pnl_) return out;
  for (Param& p : pnl_->gInvW) out.push_back(&p);
  for (Param& p : pnl_->gInvB) out.push_back(&p);
  return out;
}

std::vector<Param*> FcmModel::allParams() {
  std::vector<Param*> out = fParams();
  for (Param* p : gParams()) out.push_back(p);
  for (Param* p : gInvParams()) out.push_back(p);
  return out;
}

std::vector<const Param*> FcmModel::allParams() const {
  auto mutable_list = const_cast<FcmModel*>(this)->allParams();
  return {mutable_list.begin(), mutable_list.end()};
}

void FcmModel::freezeFirstLayer() {
  for (LocalNet& net : nodes_) {
    net.l0W.frozen = true;
    net.l0B.frozen = true;
  }
}

bool FcmModel::firstLayerFrozen() const {
  for (const LocalNet& net : nodes_)
    if (!net.l0W.frozen || !net.l0B.frozen) return false;
  return !nodes_.empty();
}

void transferWeights(const FcmModel& source, FcmModel& target) {
  if (source.d() != target.d() || source.latentH() != target.latentH() ||
      source.assumption() != target.assumption())
    throw ShapeError("transferWeights: model shapes or assumptions differ");
  for (std::size_t j = 0; j < source.d(); ++j) {
    target.nodes()[j].l0W.value = source.nodes()[j].l0W.value;
    target.nodes()[j].l0B.value = source.nodes()[j].l0B.value;
  }
  target.freezeFirstLayer();
}

Critic::Critic(std::size_t d, std::size_t hidden, double dropout, Rng& rng)
    : d_(d), dropout_(dropout) {
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("Critic: dropout must be in [0, 1)");
  const std::vector<std::size_t> widths = {d, hidden, hidden, 1};
  initMlp(weights_, biases_, widths, "critic", rng);
}

Tape::Id Critic::forward(Tape& tape, Tape::Id x, Rng* dropoutRng) const {
  if (tape.value(x).cols() != d_) throw ShapeError("Critic::forward: input width mismatch");
  Tape::Id h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = tape.addRowVec(tape.matmul(h, tape.transpose(tape.leaf(const_cast<Param&>(weights_[l])))),
                       tape.leaf(const_cast<Param&>(biases_[l])));
    if (l + 1 == weights_.size()) break;  // linear output score
    h = tape.leakyRelu(h, 0.2);
    if (dropoutRng != nullptr && dropout_ > 0.0) {
      const Matrix& hv = tape.value(h);
      Matrix mask(hv.rows(), hv.cols());
      const double keepInv = 1.0 / (1.0 - dropout_);
      for (std::size_t i = 0; i < mask.size(); ++i)
        mask.data()[i] = dropoutRng->uniform() < dropout_ ? 0.0 : keepInv;
      h = tape.mulConst(h, std::move(mask));
    }
  }
  return h;
}

std::vector<Param*> Critic::params() {
  std::vector<Param*> out;
  for (Param& p : weights_) out.push_back(&p);
  for (Param& p : biases_) out.push_back(&p);
  return out;
}

std::vector<const Param*> Critic::params() const {
  auto mutable_list = const_cast<Critic*>(this)->params();
  return {mutable_list.begin(), mutable_list.end()};
}

Matrix sampleNoiseBank(std::size_t n, std::size_t d, std::size_t zSize, Rng& rng) {
  Matrix z(n, d, 0.0);
  for (std::size_t s = 0; s < std::max<std::size_t>(zSize, 1); ++s)
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] += rng.gaussian();
  return z;
}

}  // namespace dagaf
