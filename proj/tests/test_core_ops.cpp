#include "doctest.h"
#include "test_helpers.hpp"

#include "cmsm/operators.hpp"

using namespace cmsm;
using namespace cmsm::test;

TEST_CASE("fft2_unitary of a centered delta is constant 1/sqrt(N)") {
  Image<double> d(32, 32);
  d(16, 16) = 1.0;
  auto const k = fft2_unitary(d);
  for (auto const &v : k.data) {
    CHECK(std::abs(v.real() - 1.0 / 32) < 1e-15);
    CHECK(std::abs(v.imag()) < 1e-15);
  }
}

TEST_CASE("fft2_unitary round trip and Parseval") {
  for (auto [h, w] : {std::pair{32, 32}, std::pair{64, 32}, std::pair{8, 16}}) {
    auto const x = random_image<double>(h, w, 7 + h + w);
    auto const k = fft2_unitary(x);
    auto const back = ifft2_unitary(k);
    CHECK(max_abs_diff(x, back) / norm(x) < 1e-12);
    CHECK(std::abs(norm(k) - norm(x)) / norm(x) < 1e-12);
  }
}

TEST_CASE("fft2_unitary matches a direct centered DFT") {
  int const h = 8, w = 4;
  auto const x = random_image<double>(h, w, 3);
  auto const k = fft2_unitary(x);
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < w; ++v) {
      std::complex<double> s{};
      for (int y = 0; y < h; ++y) {
        for (int c = 0; c < w; ++c) {
          double const ph = -2 * std::numbers::pi * (double(u - h / 2) * (y - h / 2) / h + double(v - w / 2) * (c - w / 2) / w);
          s += x(y, c) * std::polar(1.0, ph);
        }
      }
      s /= std::sqrt(double(h * w));
      CHECK(std::abs(s - k(u, v)) < 1e-12);
    }
  }
}

TEST_CASE("fft2_unitary rejects non power-of-two sizes") {
  CHECK_THROWS_AS(fft2_unitary(Image<double>(30, 32)), SizeError);
  CHECK_THROWS_AS(ifft2_unitary(Image<double>(32, 12)), SizeError);
}

TEST_CASE("apply_forward basic cases") {
  auto const maps = random_maps<double>(3, 16, 16, 1);
  auto const m = make_mask(16, 16, 4, 4, 9);
  auto const zero = apply_forward(Image<double>(16, 16), maps, m);
  CHECK(squared_norm(zero) == 0.0);

  auto const x = random_image<double>(16, 16, 2);
  CoilMaps<double> ones(1, 16, 16);
  for (auto &v : ones.coils[0].data) v = 1.0;
  auto const y = apply_forward(x, ones, Mask::full(16, 16));
  CHECK(max_abs_diff(y.coils[0], fft2_unitary(x)) == 0.0);

  auto const masked = apply_forward(x, maps, m);
  CHECK(masked.mask == m);
  for (auto const &c : masked.coils) {
    for (int r = 0; r < 16; ++r) {
      for (int col = 0; col < 16; ++col) {
        if (!m.selected(col)) CHECK(c(r, col) == std::complex<double>{});
      }
    }
  }
  CHECK_THROWS_AS(apply_forward(Image<double>(8, 16), maps, m), ShapeError);
}

TEST_CASE("apply_adjoint basic cases") {
  auto const maps = random_maps<double>(2, 16, 16, 4);
  KSpace<double> y(2, Mask::full(16, 16));
  CHECK(squared_norm(apply_adjoint(y, maps)) == 0.0);

  CoilMaps<double> ones(1, 16, 16);
  for (auto &v : ones.coils[0].data) v = 1.0;
  auto const x = random_image<double>(16, 16, 5);
  auto const back = apply_adjoint(apply_forward(x, ones, Mask::full(16, 16)), ones);
  CHECK(max_abs_diff(back, x) < 1e-12);

  auto const other = random_maps<double>(3, 16, 16, 4);
  CHECK_THROWS_AS(apply_adjoint(y, other), ShapeError);
}

TEST_CASE("forward/adjoint satisfy the inner-product identity") {
  Rng pick(2024);
  for (int trial = 0; trial < 100; ++trial) {
    int const nc = 1 + int(pick.bits() % 8);
    int const n = (trial % 2) ? 32 : 16;
    auto const x = random_image<double>(n, n, derive_seed(trial, {1}));
    auto const maps = random_maps<double>(nc, n, n, derive_seed(trial, {2}), trial % 3 != 0);
    auto const m = make_mask(n, n, 1 + 7 * pick.uniform(), 4, derive_seed(trial, {3}));
    auto const y = random_kspace<double>(nc, m, derive_seed(trial, {4}));
    auto const Ax = apply_forward(x, maps, m);
    auto const AHy = apply_adjoint(y, maps);
    double const err = std::abs(inner(Ax, y) - inner(x, AHy)) / (norm(Ax) * norm(y));
    CHECK(err < 1e-10);
  }
}

TEST_CASE("rss_normalize") {
  SUBCASE("single coil collapses to unit magnitude") {
    CoilMaps<double> c(1, 4, 4);
    for (auto &v : c.coils[0].data) v = 3.0;
    auto const r = rss_normalize(c);
    for (auto const &v : r.maps.coils[0].data) CHECK(v == std::complex<double>(1.0, 0.0));
    CHECK(r.clamped_pixels == 0);
  }
  SUBCASE("two equal coils become 1/sqrt(2)") {
    CoilMaps<double> c(2, 4, 4);
    for (auto &coil : c.coils) {
      for (auto &v : coil.data) v = 1.0;
    }
    auto const r = rss_normalize(c);
    for (auto const &coil : r.maps.coils) {
      for (auto const &v : coil.data) CHECK(std::abs(v.real() - 1 / std::sqrt(2.0)) < 1e-15);
    }
  }
  SUBCASE("idempotent and unit RSS") {
    auto const raw = random_maps<double>(4, 16, 16, 11, false);
    auto const once = rss_normalize(raw).maps;
    auto const twice = rss_normalize(once).maps;
    for (int k = 0; k < 4; ++k) CHECK(max_abs_diff(once.coils[k], twice.coils[k]) < 1e-12);
    for (std::size_t i = 0; i < once.coils[0].size(); ++i) {
      double ss = 0;
      for (auto const &c : once.coils) ss += std::norm(c.data[i]);
      CHECK(std::abs(ss - 1.0) < 1e-12);
    }
  }
  SUBCASE("single precision path meets 1e-6") {
    auto const once = rss_normalize(random_maps<float>(8, 32, 32, 12, false)).maps;
    for (std::size_t i = 0; i < once.coils[0].size(); ++i) {
      double ss = 0;
      for (auto const &c : once.coils) ss += std::norm(std::complex<double>(c.data[i]));
      CHECK(std::abs(ss - 1.0) < 1e-6);
    }
  }
  SUBCASE("zero pixels are clamped and counted") {
    CoilMaps<double> c(2, 2, 2);
    c.coils[0](0, 0) = 1.0;
    auto const r = rss_normalize(c);
    CHECK(r.clamped_pixels == 3);
    CHECK(r.maps.coils[0](0, 0) == std::complex<double>(1.0));
    CHECK(r.maps.coils[1](1, 1) == std::complex<double>(0.0));
  }
}

TEST_CASE("make_mask") {
  SUBCASE("R=1 selects everything") {
    auto const m = make_mask(32, 32, 1.0, 4, 1);
    CHECK(m.is_full());
  }
  SUBCASE("ACS block always set") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto const m = make_mask(64, 64, 4.0, 8, seed);
      for (int x = 28; x < 36; ++x) CHECK(m.selected(x));
      CHECK(m.count() >= 8);
    }
  }
  SUBCASE("deterministic per seed") {
    CHECK(make_mask(32, 32, 4.0, 4, 77) == make_mask(32, 32, 4.0, 4, 77));
    CHECK(make_mask(32, 32, 4.0, 4, 77) != make_mask(32, 32, 4.0, 4, 78));
  }
  SUBCASE("mean selected fraction at R=4 over 10,000 seeds") {
    double sum = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) sum += make_mask(64, 64, 4.0, 8, seed).fraction();
    double const mean = sum / 10000;
    CHECK(mean >= 0.24);
    CHECK(mean <= 0.26);
  }
  SUBCASE("infeasible ACS budget falls back to ACS only") {
    auto const m = make_mask(32, 32, 8.0, 8, 3);
    CHECK(m.count() == 8);
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS(make_mask(32, 32, 0.5, 4, 0));
    CHECK_THROWS(make_mask(32, 32, 4.0, 40, 0));
  }
}

TEST_CASE("restrict") {
  auto const y = random_kspace<double>(2, Mask::full(8, 4), 5);
  CHECK(restrict(y, Mask::full(8, 4)) == y);

  auto const m = make_mask(8, 4, 2.0, 0, 1);
  auto const once = restrict(y, m);
  CHECK(restrict(once, m) == once);

  // {0,1} then {1,2} keeps column 1 only.
  auto const a = restrict(restrict(y, columns_mask(8, 4, {0, 1})), columns_mask(8, 4, {1, 2}));
  CHECK(a.mask.columns == std::vector<std::uint8_t>{0, 1, 0, 0});
  for (int k = 0; k < 2; ++k) {
    for (int r = 0; r < 8; ++r) {
      CHECK(a.coils[k](r, 1) == y.coils[k](r, 1));
      CHECK(a.coils[k](r, 0) == std::complex<double>{});
      CHECK(a.coils[k](r, 2) == std::complex<double>{});
    }
  }

  // commutes with complex scaling
  std::complex<double> const s(0.3, -1.7);
  CHECK(restrict(scaled(y, s), m) == scaled(restrict(y, m), s));
}
