#pragma once

#include <string>

#include "dagaf/dataset.hpp"
#include "dagaf/graph.hpp"
#include "dagaf/rng.hpp"

namespace dagaf {

enum class SemFamily { Linear, NonLinear1, NonLinear2, PostNonLinear1, PostNonLinear2 };

SemFamily semFamilyFromString(const std::string& name);
std::string toString(SemFamily family);
bool isPostNonLinear(SemFamily family);

struct NoiseSpec {
  enum class Kind { Gaussian, Uniform };
  Kind kind = Kind::Gaussian;
  double scale = 1.0;
};

// Gaussian: N(0, scale^2). Uniform: U(-scale*sqrt(3), scale*sqrt(3)), which
// matches the Gaussian variance.
Matrix sampleNoise(const NoiseSpec& spec, std::size_t n, std::size_t d, Rng& rng);

// Ancestral sampling through the weighted DAG. Rows of `adjacency` select the
// parents of each variable. Rows that come out non-finite are redrawn with
// fresh noise, up to 100 attempts each.
Dataset generate(const Matrix& adjacency, SemFamily family, const NoiseSpec& noise, std::size_t n,
                 Rng& rng);

}  // namespace dagaf
