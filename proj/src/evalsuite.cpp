#include "dagaf/evalsuite.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dagaf/csvio.hpp"
#include "dagaf/errors.hpp"
#include "dagaf/losses.hpp"

namespace dagaf {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;

CMap view(const Matrix& m) {
  return CMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

double normalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

Matrix correlationMatrix(const Dataset& ds, std::vector<int>* constantColumns) {
  const std::size_t n = ds.n();
  const std::size_t d = ds.d();
  if (n < 2) throw ShapeError("correlationMatrix: at least two samples required");

  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += ds.values(i, j);
    mean[j] = s / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = ds.values(i, j) - mean[j];
      sq += c * c;
    }
    sd[j] = std::sqrt(sq);
  }

  Matrix corr(d, d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    corr(j, j) = 1.0;
    if (sd[j] == 0.0 && constantColumns) constantColumns->push_back(static_cast<int>(j));
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      if (sd[a] == 0.0 || sd[b] == 0.0) continue;  // flagged, entry stays 0
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        dot += (ds.values(i, a) - mean[a]) * (ds.values(i, b) - mean[b]);
      const double r = dot / (sd[a] * sd[b]);
      corr(a, b) = r;
      corr(b, a) = r;
    }
  }
  return corr;
}

PcaBasis fitPca(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) throw ShapeError("fitPca: at least two samples required");

  PcaBasis basis;
  basis.mean.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x(i, j);
    basis.mean[j] = s / static_cast<double>(n);
  }

  Eigen::MatrixXd cov(d, d);
  cov.setZero();
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd row(d);
    for (std::size_t j = 0; j < d; ++j) row(static_cast<Eigen::Index>(j)) = x(i, j) - basis.mean[j];
    cov += row * row.transpose();
  }
  cov /= static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("fitPca: eigendecomposition failed");

  basis.components = Matrix(d, d);
  basis.eigenvalues.assign(d, 0.0);
  // Eigen returns ascending order; flip to descending.
  for (std::size_t r = 0; r < d; ++r) {
    const Eigen::Index src = static_cast<Eigen::Index>(d - 1 - r);
    basis.eigenvalues[r] = solver.eigenvalues()(src);
    // Sign convention: largest-magnitude loading positive.
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index argmax = 0;
    v.cwiseAbs().maxCoeff(&argmax);
    if (v(argmax) < 0.0) v = -v;
    for (std::size_t c = 0; c < d; ++c) basis.components(r, c) = v(static_cast<Eigen::Index>(c));
  }
  return basis;
}

Matrix pcaTransform(const PcaBasis& basis, const Matrix& x, std::size_t components) {
  const std::size_t d = x.cols();
  if (components > d) throw ShapeError("pcaTransform: too many components requested");
  if (basis.mean.size() != d) throw ShapeError("pcaTransform: basis dimension mismatch");
  Matrix out(x.rows(), components, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < components; ++c) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        dot += (x(i, j) - basis.mean[j]) * basis.components(c, j);
      out(i, c) = dot;
    }
  }
  return out;
}

Matrix pcaProject(const Matrix& x, std::size_t components) {
  return pcaTransform(fitPca(x), x, components);
}

double mannWhitneyU(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw ShapeError("mannWhitneyU: empty sample");
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();

  struct Tagged {
    double v;
    int group;
  };
  std::vector<Tagged> all;
  all.reserve(n1 + n2);
  for (double v : a) all.push_back({v, 0});
  for (double v : b) all.push_back({v, 1});
  std::sort(all.begin(), all.end(), [](const Tagged& x, const Tagged& y) { return x.v < y.v; });

  // Midranks with tie bookkeeping.
  std::vector<double> ranks(all.size());
  double tieTerm = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j + 1 < all.size() && all[j + 1].v == all[i].v) ++j;
    const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[k] = rank;
    const double t = static_cast<double>(j - i + 1);
    tieTerm += t * t * t - t;
    i = j + 1;
  }

  double rankSumA = 0.0;
  for (std::size_t k = 0; k < all.size(); ++k)
    if (all[k].group == 0) rankSumA += ranks[k];

  const double u1 = rankSumA - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  const double n1d = static_cast<double>(n1);
  const double n2d = static_cast<double>(n2);
  const double nTot = n1d + n2d;
  const double meanU = n1d * n2d / 2.0;
  const double varU =
      n1d * n2d / 12.0 * ((nTot + 1.0) - tieTerm / (nTot * (nTot - 1.0)));
  if (varU <= 0.0) return 1.0;  // every value tied across both samples

  const double u = std::min(u1, n1d * n2d - u1);
  // Continuity-corrected two-sided normal approximation.
  double z = (u - meanU + 0.5) / std::sqrt(varU);
  if (z > 0.0) z = 0.0;
  double p = 2.0 * normalCdf(z);
  return std::min(p, 1.0);
}

QualityReport qualityReport(const Dataset& real, const Dataset& synth, BandwidthPolicy policy,
                            double fixedBandwidth) {
  if (real.d() != synth.d()) throw ShapeError("qualityReport: feature counts differ");
  const std::size_t d = real.d();

  QualityReport report;
  report.corrReal = correlationMatrix(real, &report.constantColumnsReal);
  report.corrSynth = correlationMatrix(synth, &report.constantColumnsSynth);

  double fro = 0.0;
  for (std::size_t i = 0; i < report.corrReal.size(); ++i) {
    const double diff = report.corrReal.data()[i] - report.corrSynth.data()[i];
    fro += diff * diff;
  }
  report.corrFrobeniusDiff = std::sqrt(fro);

  const double bandwidth =
      policy == BandwidthPolicy::Median ? medianHeuristicBandwidth(real.values) : fixedBandwidth;
  const std::size_t m = std::min(real.n(), synth.n());
  Matrix a(m, d), b(m, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      a(i, j) = real.values(i, j);
      b(i, j) = synth.values(i, j);
    }
  report.mmdStat = mmdStatistic(a, b, bandwidth, /*unbiased=*/true);

  // Shared basis fitted on the real data; both sets projected through it.
  PcaBasis basis = fitPca(real.values);
  const std::size_t comps = std::min<std::size_t>(2, d);
  report.pcaReal2d = pcaTransform(basis, real.values, comps);
  report.pcaSynth2d = pcaTransform(basis, synth.values, comps);

  report.mannWhitneyP.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> colA(real.n()), colB(synth.n());
    for (std::size_t i = 0; i < real.n(); ++i) colA[i] = real.values(i, j);
    for (std::size_t i = 0; i < synth.n(); ++i) colB[i] = synth.values(i, j);
    report.mannWhitneyP.push_back(mannWhitneyU(colA, colB));
  }
  return report;
}

void writeMarginalSummaries(const std::string& dir, const Dataset& real, const Dataset& synth,
                            std::size_t bins) {
  if (real.d() != synth.d()) throw ShapeError("writeMarginalSummaries: feature counts differ");
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  static const double kQuantiles[] = {0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99};

  auto quantile = [](std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
  };

  std::ofstream q(fs::path(dir) / "quantiles.csv");
  if (!q) throw IoError("cannot write quantiles.csv under '" + dir + "'");
  q << "feature,source,q01,q05,q25,q50,q75,q95,q99\n";
  std::ofstream h(fs::path(dir) / "histograms.csv");
  if (!h) throw IoError("cannot write histograms.csv under '" + dir + "'");
  h << "feature,bin_left,bin_right,count_real,count_synth\n";

  for (std::size_t j = 0; j < real.d(); ++j) {
    std::vector<double> colR(real.n()), colS(synth.n());
    for (std::size_t i = 0; i < real.n(); ++i) colR[i] = real.values(i, j);
    for (std::size_t i = 0; i < synth.n(); ++i) colS[i] = synth.values(i, j);

    for (int source = 0; source < 2; ++source) {
      const auto& col = source == 0 ? colR : colS;
      q << real.columns[j] << ',' << (source == 0 ? "real" : "synthetic");
      for (double qq : kQuantiles) q << ',' << formatReal(quantile(col, qq));
      q << '\n';
    }

    const double lo = std::min(*std::min_element(colR.begin(), colR.end()),
                               *std::min_element(colS.begin(), colS.end()));
    const double hi = std::max(*std::max_element(colR.begin(), colR.end()),
                               *std::max_element(colS.begin(), colS.end()));
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    std::vector<std::size_t> countR(bins, 0), countS(bins, 0);
    auto binOf = [&](double v) {
      const std::ptrdiff_t b = static_cast<std::ptrdiff_t>((v - lo) / width);
      return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1));
    };
    for (double v : colR) countR[binOf(v)]++;
    for (double v : colS) countS[binOf(v)]++;
    for (std::size_t b = 0; b < bins; ++b) {
      h << real.columns[j] << ',' << formatReal(lo + width * static_cast<double>(b)) << ','
        << formatReal(lo + width * static_cast<double>(b + 1)) << ',' << countR[b] << ','
        << countS[b] << '\n';
    }
  }
}

}  // namespace dagaf
