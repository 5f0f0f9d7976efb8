#pragma once

#include <complex>
#include <numbers>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cmsm/types.hpp"

namespace cmsm {

[[nodiscard]] constexpr bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

// exp(-2πik/n) for k < n/2, cached per thread.
inline std::vector<std::complex<double>> const &twiddles(int n) {
  thread_local std::unordered_map<int, std::vector<std::complex<double>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> t(static_cast<std::size_t>(n / 2));
  for (int k = 0; k < n / 2; ++k) t[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / n);
  return cache.emplace(n, std::move(t)).first->second;
}

// Unnormalized in-place radix-2 transform of a contiguous buffer.
template <std::floating_point Real>
void fft_radix2(std::span<std::complex<Real>> a, bool inverse) {
  int const n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  auto const &tw = twiddles(n);
  for (int len = 2; len <= n; len <<= 1) {
    int const half = len / 2;
    int const step = n / len;
    for (int start = 0; start < n; start += len) {
      for (int k = 0; k < half; ++k) {
        auto w = std::complex<Real>(tw[static_cast<std::size_t>(k * step)]);
        if (inverse) w = std::conj(w);
        auto const u = a[start + k];
        auto const v = a[start + k + half] * w;
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
}

// Rotate both axes by half the extent (fftshift == ifftshift for even sizes).
template <std::floating_point Real>
Image<Real> half_shift(Image<Real> const &in) {
  Image<Real> out(in.height, in.width);
  int const hy = in.height / 2;
  int const hx = in.width / 2;
  for (int y = 0; y < in.height; ++y) {
    int const ys = (y + hy) % in.height;
    for (int x = 0; x < in.width; ++x) out(ys, (x + hx) % in.width) = in(y, x);
  }
  return out;
}

template <std::floating_point Real>
Image<Real> centered_fft2(Image<Real> const &img, bool inverse) {
  if (!is_power_of_two(img.height) || !is_power_of_two(img.width)) {
    throw SizeError("fft2: dimensions must be powers of two, got " + std::to_string(img.height) + "x" +
                    std::to_string(img.width));
  }
  Image<Real> a = half_shift(img);
  for (int y = 0; y < a.height; ++y) {
    fft_radix2<Real>(std::span(a.data).subspan(static_cast<std::size_t>(y) * a.width, a.width), inverse);
  }
  std::vector<std::complex<Real>> col(static_cast<std::size_t>(a.height));
  for (int x = 0; x < a.width; ++x) {
    for (int y = 0; y < a.height; ++y) col[y] = a(y, x);
    fft_radix2<Real>(col, inverse);
    for (int y = 0; y < a.height; ++y) a(y, x) = col[y];
  }
  Real const scale = Real(1) / std::sqrt(Real(a.height) * Real(a.width));
  Image<Real> out = half_shift(a);
  for (auto &v : out.data) v *= scale;
  return out;
}

}  // namespace detail

/// Unitary, centered 2-D DFT (DC at (H/2, W/2)). Throws SizeError unless both
/// dimensions are powers of two.
template <std::floating_point Real>
Image<Real> fft2_unitary(Image<Real> const &img) {
  return detail::centered_fft2(img, false);
}

/// Inverse of fft2_unitary (and its adjoint).
template <std::floating_point Real>
Image<Real> ifft2_unitary(Image<Real> const &img) {
  return detail::centered_fft2(img, true);
}

}  // namespace cmsm
