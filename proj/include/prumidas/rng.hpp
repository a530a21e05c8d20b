#pragma once

#include <cstdint>
#include <random>

namespace prumidas {

// Thin wrapper around mt19937_64 with the handful of draws the sampler needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return unif_(engine_); }
  double normal() { return norm_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma with shape/rate parametrization, mean shape/rate.
  double gamma(double shape, double rate) {
    std::gamma_distribution<double> d(shape, 1.0 / rate);
    return d(engine_);
  }

  // Inverse gamma with shape/rate parametrization: density ~ x^{-shape-1} exp(-rate/x).
  double inv_gamma(double shape, double rate) {
    return 1.0 / gamma(shape, rate);
  }

  std::mt19937_64& engine() { return engine_; }

  // Decorrelated stream for chain i under a common base seed (splitmix64 step).
  static std::uint64_t derived_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace prumidas
