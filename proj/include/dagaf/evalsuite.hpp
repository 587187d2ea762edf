#pragma once

#include <string>
#include <vector>

#include "dagaf/dataset.hpp"
#include "dagaf/matrix.hpp"

namespace dagaf {

// Pearson correlation; symmetric with unit diagonal. Constant columns yield
// zero entries and are flagged.
Matrix correlationMatrix(const Dataset& ds, std::vector<int>* constantColumns = nullptr);

struct PcaBasis {
  std::vector<double> mean;
  Matrix components;  // one eigenvector per row, eigenvalue-descending
  std::vector<double> eigenvalues;
};

PcaBasis fitPca(const Matrix& x);
Matrix pcaTransform(const PcaBasis& basis, const Matrix& x, std::size_t components);
// Fit-and-project on a single dataset.
Matrix pcaProject(const Matrix& x, std::size_t components = 2);

// Two-sided Mann-Whitney U with normal approximation and tie correction.
double mannWhitneyU(const std::vector<double>& a, const std::vector<double>& b);

struct QualityReport {
  Matrix corrReal;
  Matrix corrSynth;
  double corrFrobeniusDiff = 0.0;
  double mmdStat = 0.0;
  Matrix pcaReal2d;
  Matrix pcaSynth2d;
  std::vector<double> mannWhitneyP;
  std::vector<int> constantColumnsReal;
  std::vector<int> constantColumnsSynth;
};

enum class BandwidthPolicy { Median, Fixed };

QualityReport qualityReport(const Dataset& real, const Dataset& synth,
                            BandwidthPolicy policy = BandwidthPolicy::Median,
                            double fixedBandwidth = 1.0);

// Plot-ready CSVs: per-feature quantiles at {1,5,25,50,75,95,99}% and shared
// histogram bins for each feature.
void writeMarginalSummaries(const std::string& dir, const Dataset& real, const Dataset& synth,
                            std::size_t bins = 30);

}  // namespace dagaf
