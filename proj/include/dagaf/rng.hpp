#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dagaf {

// Deterministic random stream. Distributions are implemented by hand so that
// identical seeds give identical draws on every platform and stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t nextU64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one spare is cached per pair.
  double gaussian() {
    if (haveSpare_) {
      haveSpare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    haveSpare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Derived child stream; advances this stream by one draw.
  Rng fork() { return Rng(nextU64() ^ 0x9e3779b97f4a7c15ull); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool haveSpare_ = false;
};

}  // namespace dagaf
