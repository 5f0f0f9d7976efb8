#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace cmsm {

/// splitmix64 finalizer; used to derive independent stream seeds.
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t x);

/// Deterministic seed for a named sub-stream, e.g. derive_seed(seed, {step, branch}).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream);

/// Seeded generator with platform-independent uniform/normal draws
/// (std distributions are implementation-defined, this is not).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Marsaglia polar method).
  double normal();
  /// Circular complex Gaussian with the given per-component standard deviation.
  std::complex<double> complex_normal(double std_per_component) {
    double const re = normal();
    double const im = normal();
    return {std_per_component * re, std_per_component * im};
  }
  std::uint64_t bits() { return engine_(); }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cmsm
