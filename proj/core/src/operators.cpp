#include "cmsm/operators.hpp"

#include <iostream>

#include "cmsm/rng.hpp"

namespace cmsm {

double mask_outer_probability(int width, double acceleration, int acs_width) {
  double const target = width / acceleration;
  int const outer = width - acs_width;
  if (outer <= 0) return 0.0;
  return std::clamp((target - acs_width) / outer, 0.0, 1.0);
}

Mask make_mask(int height, int width, double acceleration, int acs_width, std::uint64_t seed) {
  if (acceleration < 1.0) throw std::invalid_argument("make_mask: acceleration must be >= 1");
  if (acs_width < 0 || acs_width > width) throw std::invalid_argument("make_mask: acs_width must be in [0, width]");
  if (double(acs_width) / width > 1.0 / acceleration) {
    std::clog << "warning: make_mask: ACS block (" << acs_width << "/" << width
              << ") exceeds the 1/R budget at R=" << acceleration << "; selecting ACS only\n";
  }
  Mask m = Mask::acs_only(height, width, acs_width);
  double const p = mask_outer_probability(width, acceleration, acs_width);
  Rng rng(seed);
  for (int x = 0; x < width; ++x) {
    // One draw per column whether or not it is in the ACS block, so the pattern
    // outside the ACS does not depend on acs_width.
    double const u = rng.uniform();
    if (x >= m.acs_begin() && x < m.acs_end()) continue;
    if (u < p) m.columns[static_cast<std::size_t>(x)] = 1;
  }
  return m;
}

}  // namespace cmsm
