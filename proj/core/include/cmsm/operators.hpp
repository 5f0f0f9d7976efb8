#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>

#include "cmsm/fft.hpp"
#include "cmsm/types.hpp"

namespace cmsm {

/// Column-line mask with a centered ACS block of `acs_width` columns. Every other
/// column is kept independently with the probability that makes the expected
/// selected fraction 1/acceleration. When the ACS block alone already exceeds
/// 1/acceleration only the ACS is selected (and a warning is logged).
[[nodiscard]] Mask make_mask(int height, int width, double acceleration, int acs_width, std::uint64_t seed);

/// Per-column selection probability used by make_mask outside the ACS block.
[[nodiscard]] double mask_outer_probability(int width, double acceleration, int acs_width);

template <std::floating_point Real>
void check_same_shape(Image<Real> const &a, Image<Real> const &b, char const *what) {
  if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": image shape mismatch");
}

template <std::floating_point Real>
void check_maps(CoilMaps<Real> const &maps, int h, int w, char const *what) {
  if (maps.n_coils() == 0) throw ShapeError(std::string(what) + ": no coil maps");
  for (auto const &c : maps.coils) {
    if (c.height != h || c.width != w) throw ShapeError(std::string(what) + ": coil map shape mismatch");
  }
}

/// Zero every column the mask does not select.
template <std::floating_point Real>
void apply_mask_inplace(Image<Real> &img, Mask const &mask) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!mask.selected(x)) img(y, x) = {};
    }
  }
}

/// Per coil: mask ⊙ F(C_k ⊙ x).
template <std::floating_point Real>
KSpace<Real> apply_forward(Image<Real> const &x, CoilMaps<Real> const &maps, Mask const &mask) {
  check_maps(maps, x.height, x.width, "apply_forward");
  if (mask.height != x.height || mask.width != x.width) throw ShapeError("apply_forward: mask shape mismatch");
  KSpace<Real> out;
  out.mask = mask;
  out.coils.reserve(maps.coils.size());
  for (auto const &c : maps.coils) {
    Image<Real> weighted(x.height, x.width);
    for (std::size_t i = 0; i < x.size(); ++i) weighted.data[i] = c.data[i] * x.data[i];
    Image<Real> k = fft2_unitary(weighted);
    apply_mask_inplace(k, mask);
    out.coils.push_back(std::move(k));
  }
  return out;
}

/// Σ_k conj(C_k) ⊙ F^H y_k.
template <std::floating_point Real>
Image<Real> apply_adjoint(KSpace<Real> const &y, CoilMaps<Real> const &maps) {
  if (y.n_coils() != maps.n_coils()) throw ShapeError("apply_adjoint: coil count mismatch");
  check_maps(maps, y.height(), y.width(), "apply_adjoint");
  Image<Real> out(y.height(), y.width());
  for (int k = 0; k < y.n_coils(); ++k) {
    auto const &yk = y.coils[static_cast<std::size_t>(k)];
    if (yk.height != y.height() || yk.width != y.width()) throw ShapeError("apply_adjoint: k-space shape mismatch");
    Image<Real> const img = ifft2_unitary(yk);
    auto const &c = maps.coils[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += std::conj(c.data[i]) * img.data[i];
  }
  return out;
}

template <std::floating_point Real>
struct RssResult {
  CoilMaps<Real> maps;
  int clamped_pixels = 0;  // pixels whose RSS fell below the clamp floor
};

inline constexpr double kRssFloor = 1e-12;

/// C_k(q) / max(sqrt(Σ_j |C_j(q)|²), 1e-12).
template <std::floating_point Real>
RssResult<Real> rss_normalize(CoilMaps<Real> const &maps) {
  RssResult<Real> r;
  r.maps = maps;
  if (maps.n_coils() == 0) return r;
  check_maps(maps, maps.height(), maps.width(), "rss_normalize");
  std::size_t const n = maps.coils.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    Real ss = 0;
    for (auto const &c : maps.coils) ss += std::norm(c.data[i]);
    Real rss = std::sqrt(ss);
    if (rss < Real(kRssFloor)) {
      rss = Real(kRssFloor);
      ++r.clamped_pixels;
    }
    Real const inv = Real(1) / rss;
    for (auto &c : r.maps.coils) c.data[i] *= inv;
  }
  return r;
}

/// Keep entries where both masks select; output mask is the intersection.
template <std::floating_point Real>
KSpace<Real> restrict(KSpace<Real> const &y, Mask const &mask) {
  KSpace<Real> out;
  out.mask = y.mask.intersect(mask);
  out.coils = y.coils;
  for (auto &c : out.coils) apply_mask_inplace(c, out.mask);
  return out;
}

// ---- small vector-space helpers ---------------------------------------------

/// ⟨a, b⟩ = Σ conj(a)·b, accumulated in double.
template <std::floating_point Real>
std::complex<double> inner(Image<Real> const &a, Image<Real> const &b) {
  check_same_shape(a, b, "inner");
  std::complex<double> s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(std::complex<double>(a.data[i])) * std::complex<double>(b.data[i]);
  return s;
}

template <std::floating_point Real>
std::complex<double> inner(KSpace<Real> const &a, KSpace<Real> const &b) {
  if (a.n_coils() != b.n_coils()) throw ShapeError("inner: coil count mismatch");
  std::complex<double> s{};
  for (int k = 0; k < a.n_coils(); ++k) s += inner(a.coils[static_cast<std::size_t>(k)], b.coils[static_cast<std::size_t>(k)]);
  return s;
}

template <std::floating_point Real>
double squared_norm(Image<Real> const &a) {
  double s = 0;
  for (auto const &v : a.data) s += std::norm(std::complex<double>(v));
  return s;
}

template <std::floating_point Real>
double squared_norm(KSpace<Real> const &a) {
  double s = 0;
  for (auto const &c : a.coils) s += squared_norm(c);
  return s;
}

template <std::floating_point Real>
double norm(Image<Real> const &a) { return std::sqrt(squared_norm(a)); }

template <std::floating_point Real>
double norm(KSpace<Real> const &a) { return std::sqrt(squared_norm(a)); }

template <std::floating_point Real>
KSpace<Real> scaled(KSpace<Real> y, std::complex<Real> a) {
  for (auto &c : y.coils) {
    for (auto &v : c.data) v *= a;
  }
  return y;
}

/// Inverse FFT of each coil (zero-filled image per coil).
template <std::floating_point Real>
std::vector<Image<Real>> coil_images(KSpace<Real> const &y) {
  std::vector<Image<Real>> out;
  out.reserve(y.coils.size());
  for (auto const &c : y.coils) out.push_back(ifft2_unitary(c));
  return out;
}

}  // namespace cmsm
