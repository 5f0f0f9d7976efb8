#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cmsm/rng.hpp"

namespace cmsm {

/// Geometric variance-exploding noise levels.
struct NoiseSchedule {
  double sigma_min = 0.01;
  double sigma_max = 10.0;
  int steps = 100;

  void validate() const {
    if (!(sigma_min > 0) || !(sigma_max >= sigma_min)) throw std::invalid_argument("NoiseSchedule: need 0 < sigma_min <= sigma_max");
    if (steps < 2) throw std::invalid_argument("NoiseSchedule: need at least 2 steps");
  }

  /// Noise level at step t in [0, T-1]: sigma(T-1) = σ_max down to sigma(0) = σ_min,
  /// geometrically spaced. The sampler walks t = T-1 … 0.
  [[nodiscard]] double sigma(int t) const {
    double const frac = double(steps - 1 - t) / double(steps - 1);
    return sigma_max * std::pow(sigma_min / sigma_max, frac);
  }

  bool operator==(NoiseSchedule const &) const = default;
};

/// Log-uniform draw on [σ_min, σ_max].
[[nodiscard]] inline double sample_sigma(NoiseSchedule const &schedule, std::uint64_t seed) {
  Rng rng(seed);
  double const u = rng.uniform();
  if (schedule.sigma_min == schedule.sigma_max) return schedule.sigma_min;
  return std::exp(std::log(schedule.sigma_min) + u * (std::log(schedule.sigma_max) - std::log(schedule.sigma_min)));
}

}  // namespace cmsm
