#pragma once

// Deterministic random draws. std::normal_distribution output is
// implementation-defined, so Gaussian variates are generated by an explicit
// Box-Muller transform over mt19937_64 to keep simulated datasets
// bit-reproducible across toolchains.

#include <cstdint>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Core>

namespace navfuse {

class Rng {
 public:
  /// Independent sub-streams of one scenario seed are selected by `stream`.
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(seed ^ (0x9E3779B97F4A7C15ull * (stream + 1))) {}

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform double in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n); rejection sampling avoids modulo bias.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal draw.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  double gaussian(double sigma) { return sigma * gaussian(); }

  Eigen::Vector3d gaussian3(double sigma) {
    const double a = gaussian(sigma);
    const double b = gaussian(sigma);
    const double c = gaussian(sigma);
    return {a, b, c};
  }

 private:
  std::mt19937_64 engine_;
  double spare_{0.0};
  bool have_spare_{false};
};

}  // namespace navfuse
