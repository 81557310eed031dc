#pragma once

#include <cmath>
#include <random>

namespace fricest::rng {

/// Uniform double in (0, 1) from the fully specified mt19937_64 stream.
/// std::uniform_real_distribution is not pinned down by the standard, so all
/// deterministic draws in this project go through this mapping.
inline double uniform01(std::mt19937_64& engine) {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform double in [-1, 1].
inline double uniform_pm1(std::mt19937_64& engine) {
  return 2.0 * uniform01(engine) - 1.0;
}

/// Standard normal draws via Box-Muller on the uniform01 stream; identical
/// across standard libraries (std::normal_distribution is not).
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}
  explicit NormalSampler(std::mt19937_64 engine) : engine_(engine) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01(engine_);
    const double u2 = uniform01(engine_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fricest::rng
