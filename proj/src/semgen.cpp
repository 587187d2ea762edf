#include "dagaf/semgen.hpp"

#include <cmath>

#include "dagaf/errors.hpp"

namespace dagaf {

SemFamily semFamilyFromString(const std::string& name) {
  if (name == "linear") return SemFamily::Linear;
  if (name == "non-linear-1" || name == "nonlinear1") return SemFamily::NonLinear1;
  if (name == "non-linear-2" || name == "nonlinear2") return SemFamily::NonLinear2;
  if (name == "post-non-linear-1" || name == "pnl1") return SemFamily::PostNonLinear1;
  if (name == "post-non-linear-2" || name == "pnl2") return SemFamily::PostNonLinear2;
  throw ConfigError("unknown SEM family '" + name + "'");
}

std::string toString(SemFamily family) {
  switch (family) {
    case SemFamily::Linear: return "linear";
    case SemFamily::NonLinear1: return "non-linear-1";
    case SemFamily::NonLinear2: return "non-linear-2";
    case SemFamily::PostNonLinear1: return "post-non-linear-1";
    case SemFamily::PostNonLinear2: return "post-non-linear-2";
  }
  return "?";
}

bool isPostNonLinear(SemFamily family) {
  return family == SemFamily::PostNonLinear1 || family == SemFamily::PostNonLinear2;
}

Matrix sampleNoise(const NoiseSpec& spec, std::size_t n, std::size_t d, Rng& rng) {
  if (spec.scale <= 0.0) throw ConfigError("sampleNoise: scale must be positive");
  Matrix z(n, d);
  if (spec.kind == NoiseSpec::Kind::Gaussian) {
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] = spec.scale * rng.gaussian();
  } else {
    const double half = spec.scale * std::sqrt(3.0);
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] = rng.uniform(-half, half);
  }
  return z;
}

namespace {

// Fills row `i` of `x` in topological order given its noise row.
void evalRow(const Matrix& adjacency, SemFamily family, const std::vector<int>& order,
             const double* zRow, Matrix& x, std::size_t i) {
  const std::size_t d = adjacency.rows();
  for (int j : order) {
    const std::size_t jj = static_cast<std::size_t>(j);
    double mixed = 0.0;
    double mixedShift = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double w = adjacency(jj, k);
      if (w == 0.0) continue;
      const double xk = x(i, k);
      switch (family) {
        case SemFamily::Linear:
          mixed += w * xk;
          break;
        case SemFamily::NonLinear1:
        case SemFamily::PostNonLinear1:
          mixed += w * std::cos(xk + 1.0);
          break;
        case SemFamily::NonLinear2:
        case SemFamily::PostNonLinear2:
          mixedShift += w * (xk + 0.5);
          break;
      }
    }
    const double z = zRow[jj];
    double v = 0.0;
    switch (family) {
      case SemFamily::Linear:
      case SemFamily::NonLinear1:
        v = mixed + z;
        break;
      case SemFamily::NonLinear2:
        v = 2.0 * std::sin(mixedShift) + mixedShift + z;
        break;
      case SemFamily::PostNonLinear1:
        v = std::sinh(mixed + z);
        break;
      case SemFamily::PostNonLinear2:
        v = std::tanh(2.0 * std::sin(mixedShift) + mixedShift + z);
        break;
    }
    x(i, jj) = v;
  }
}

bool rowFinite(const Matrix& x, std::size_t i) {
  for (std::size_t k = 0; k < x.cols(); ++k)
    if (!std::isfinite(x(i, k))) return false;
  return true;
}

}  // namespace

Dataset generate(const Matrix& adjacency, SemFamily family, const NoiseSpec& noise, std::size_t n,
                 Rng& rng) {
  if (adjacency.rows() != adjacency.cols()) throw ShapeError("generate: square adjacency required");
  if (n < 1) throw ConfigError("generate: at least one sample required");

  const std::size_t d = adjacency.rows();
  BinaryDag structure = threshold(adjacency, 0.0);
  auto order = topologicalOrder(structure);
  if (!order) throw ConfigError("generate: adjacency contains a cycle");

  Matrix z = sampleNoise(noise, n, d, rng);
  Matrix x(n, d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    evalRow(adjacency, family, *order, z.data() + i * d, x, i);
    int retries = 0;
    while (!rowFinite(x, i)) {
      if (++retries > 100) throw NumericError("generate: row kept producing non-finite values");
      Matrix fresh = sampleNoise(noise, 1, d, rng);
      for (std::size_t k = 0; k < d; ++k) x(i, k) = 0.0;
      evalRow(adjacency, family, *order, fresh.data(), x, i);
    }
  }
  return Dataset::withDefaultColumns(std::move(x));
}

}  // namespace dagaf
