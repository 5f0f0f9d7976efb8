#pragma once

#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cmsm/errors.hpp"

namespace cmsm {

/// Single complex 2-D image, row-major (row = y, column = x).
template <std::floating_point Real>
struct Image {
  using value_type = std::complex<Real>;

  int height = 0;
  int width = 0;
  std::vector<value_type> data;

  Image() = default;
  Image(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w) {}
  Image(int h, int w, value_type fill)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] value_type &operator()(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  [[nodiscard]] value_type const &operator()(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  [[nodiscard]] bool same_shape(Image const &o) const { return height == o.height && width == o.width; }

  bool operator==(Image const &) const = default;
};

/// Column-line Cartesian sampling pattern. Readout (y) is always fully sampled;
/// a set column bit means that phase-encode line was acquired.
struct Mask {
  int height = 0;
  int width = 0;
  int acs_width = 0;
  std::vector<std::uint8_t> columns;

  Mask() = default;
  Mask(int h, int w, int acs) : height(h), width(w), acs_width(acs), columns(static_cast<std::size_t>(w), 0) {}

  static Mask full(int h, int w);
  static Mask acs_only(int h, int w, int acs);

  [[nodiscard]] int acs_begin() const { return width / 2 - acs_width / 2; }
  [[nodiscard]] int acs_end() const { return acs_begin() + acs_width; }
  [[nodiscard]] bool selected(int x) const { return columns[static_cast<std::size_t>(x)] != 0; }
  [[nodiscard]] int count() const;
  [[nodiscard]] double fraction() const { return width ? double(count()) / width : 0.0; }
  [[nodiscard]] bool is_full() const { return count() == width; }
  [[nodiscard]] bool same_grid(Mask const &o) const { return height == o.height && width == o.width; }

  /// Coordinates selected by both masks; the ACS guarantee shrinks to the smaller block.
  [[nodiscard]] Mask intersect(Mask const &o) const;

  bool operator==(Mask const &) const = default;
};

/// Stack of per-coil sensitivity maps, all the same shape.
template <std::floating_point Real>
struct CoilMaps {
  std::vector<Image<Real>> coils;

  CoilMaps() = default;
  CoilMaps(int n_coils, int h, int w) : coils(static_cast<std::size_t>(n_coils), Image<Real>(h, w)) {}
  explicit CoilMaps(std::vector<Image<Real>> c) : coils(std::move(c)) {}

  [[nodiscard]] int n_coils() const { return static_cast<int>(coils.size()); }
  [[nodiscard]] int height() const { return coils.empty() ? 0 : coils.front().height; }
  [[nodiscard]] int width() const { return coils.empty() ? 0 : coils.front().width; }

  bool operator==(CoilMaps const &) const = default;
};

/// Full-grid multi-coil k-space; entries outside `mask` are exactly zero.
template <std::floating_point Real>
struct KSpace {
  std::vector<Image<Real>> coils;
  Mask mask;

  KSpace() = default;
  KSpace(int n_coils, Mask m)
      : coils(static_cast<std::size_t>(n_coils), Image<Real>(m.height, m.width)), mask(std::move(m)) {}

  [[nodiscard]] int n_coils() const { return static_cast<int>(coils.size()); }
  [[nodiscard]] int height() const { return mask.height; }
  [[nodiscard]] int width() const { return mask.width; }

  bool operator==(KSpace const &) const = default;
};

template <std::floating_point To, std::floating_point From>
Image<To> cast(Image<From> const &in) {
  Image<To> out(in.height, in.width);
  for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = std::complex<To>(in.data[i]);
  return out;
}

template <std::floating_point To, std::floating_point From>
CoilMaps<To> cast(CoilMaps<From> const &in) {
  CoilMaps<To> out;
  for (auto const &c : in.coils) out.coils.push_back(cast<To>(c));
  return out;
}

template <std::floating_point To, std::floating_point From>
KSpace<To> cast(KSpace<From> const &in) {
  KSpace<To> out;
  out.mask = in.mask;
  for (auto const &c : in.coils) out.coils.push_back(cast<To>(c));
  return out;
}

template <std::floating_point Real>
bool all_finite(Image<Real> const &img) {
  for (auto const &v : img.data) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

}  // namespace cmsm
