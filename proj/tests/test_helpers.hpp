#pragma once

#include <cstdint>

#include "cmsm/operators.hpp"
#include "cmsm/rng.hpp"

namespace cmsm::test {

template <std::floating_point Real>
Image<Real> random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image<Real> img(h, w);
  for (auto &v : img.data) v = std::complex<Real>(rng.complex_normal(1.0));
  return img;
}

template <std::floating_point Real>
CoilMaps<Real> random_maps(int nc, int h, int w, std::uint64_t seed, bool normalize = true) {
  CoilMaps<Real> m;
  for (int k = 0; k < nc; ++k) m.coils.push_back(random_image<Real>(h, w, derive_seed(seed, {std::uint64_t(k)})));
  return normalize ? rss_normalize(m).maps : m;
}

template <std::floating_point Real>
KSpace<Real> random_kspace(int nc, Mask const &mask, std::uint64_t seed) {
  KSpace<Real> y(nc, mask);
  for (int k = 0; k < nc; ++k) {
    y.coils[k] = random_image<Real>(mask.height, mask.width, derive_seed(seed, {std::uint64_t(k)}));
    apply_mask_inplace(y.coils[k], mask);
  }
  return y;
}

inline Mask columns_mask(int h, int w, std::initializer_list<int> cols) {
  Mask m(h, w, 0);
  for (int c : cols) m.columns[static_cast<std::size_t>(c)] = 1;
  return m;
}

template <std::floating_point Real>
double max_abs_diff(Image<Real> const &a, Image<Real> const &b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, double(std::abs(a.data[i] - b.data[i])));
  return d;
}

}  // namespace cmsm::test
