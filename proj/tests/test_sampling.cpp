#include "doctest.h"
#include "test_helpers.hpp"

#include <algorithm>
#include <cmath>

#include "cmsm/sampling.hpp"

using namespace cmsm;
using namespace cmsm::test;

namespace {

KSpace<double> constant_kspace(int nc, Mask const &m, std::complex<double> v) {
  KSpace<double> y(nc, m);
  for (auto &c : y.coils) {
    for (int r = 0; r < m.height; ++r) {
      for (int x = 0; x < m.width; ++x) {
        if (m.selected(x)) c(r, x) = v;
      }
    }
  }
  return y;
}

Model<float> small_model(std::uint64_t seed) {
  ModelSpec spec = ModelSpec::defaults(2, 6);
  return Model<float>(spec, seed);
}

KSpace<float> small_measurement(std::uint64_t seed) {
  SimulationSpec sim;
  sim.phantom.height = sim.phantom.width = 16;
  sim.n_coils = 2;
  auto const rec = simulate_record(sim, seed, 0);
  return rec.subsample();
}

SamplerConfig small_sampler() {
  SamplerConfig c;
  c.ensemble = 3;
  c.steps = 6;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("SamplerConfig validation") {
  SamplerConfig c;
  CHECK(c.ensemble == 10);
  CHECK(c.step_size == 2.0);
  CHECK(c.steps == 100);
  CHECK_NOTHROW(c.validate());
  c.ensemble = 0;
  CHECK_THROWS(c.validate());
  c = SamplerConfig{};
  c.step_size = 0;
  CHECK_THROWS(c.validate());
  c = SamplerConfig{};
  c.steps = 1;
  CHECK_THROWS(c.validate());
}

TEST_CASE("build_weight_map") {
  SUBCASE("hand example") {
    auto const wm = build_weight_map({columns_mask(2, 4, {0, 1}), columns_mask(2, 4, {1, 2})});
    for (int y = 0; y < 2; ++y) {
      CHECK(wm(y, 0) == 1.0);
      CHECK(wm(y, 1) == 0.5);
      CHECK(wm(y, 2) == 1.0);
      CHECK(wm(y, 3) == 1.0);
    }
  }
  SUBCASE("single full mask") {
    auto const wm = build_weight_map({Mask::full(4, 8)});
    for (double v : wm.weights) CHECK(v == 1.0);
  }
  SUBCASE("bounds") {
    auto const masks = draw_ensemble_masks(10, 4.0, 4, 32, 32, 3);
    auto const wm = build_weight_map(masks);
    for (double v : wm.weights) {
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
    }
    for (int x = 14; x < 18; ++x) CHECK(wm(0, x) == 0.1);
  }
}

TEST_CASE("combine_weighted") {
  SUBCASE("consistent branches reproduce z exactly on covered coordinates") {
    auto const z = random_kspace<double>(3, Mask::full(16, 16), 5);
    auto const masks = draw_ensemble_masks(7, 3.0, 4, 16, 16, 9);
    std::vector<KSpace<double>> branches;
    for (auto const &m : masks) branches.push_back(restrict(z, m));
    auto const out = combine_weighted(branches, masks, build_weight_map(masks));
    for (int k = 0; k < 3; ++k) {
      for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
          if (out.mask.selected(x)) {
            CHECK(out.coils[k](y, x) == z.coils[k](y, x));
          } else {
            CHECK(out.coils[k](y, x) == std::complex<double>{});
          }
        }
      }
    }
    for (auto const &m : masks) {
      for (int x = 0; x < 16; ++x) {
        if (m.selected(x)) CHECK(out.mask.selected(x));
      }
    }
  }
  SUBCASE("one full branch is the identity") {
    auto const z = random_kspace<double>(2, Mask::full(8, 8), 6);
    std::vector<Mask> const masks{Mask::full(8, 8)};
    CHECK(combine_weighted(std::vector<KSpace<double>>{z}, masks, build_weight_map(masks)) == z);
  }
  SUBCASE("conflicting values are averaged") {
    std::vector<Mask> const masks{columns_mask(2, 4, {0, 1}), columns_mask(2, 4, {1, 2})};
    std::complex<double> const a(1.0, -2.0), b(2.0, 0.5);
    auto const out = combine_weighted(std::vector<KSpace<double>>{constant_kspace(1, masks[0], a), constant_kspace(1, masks[1], b)}, masks, build_weight_map(masks));
    for (int y = 0; y < 2; ++y) {
      CHECK(out.coils[0](y, 0) == a);
      CHECK(out.coils[0](y, 1) == (a + b) / 2.0);
      CHECK(out.coils[0](y, 2) == b);
      CHECK(out.coils[0](y, 3) == std::complex<double>{});
    }
  }
  SUBCASE("mismatched inputs") {
    std::vector<Mask> const masks{Mask::full(8, 8)};
    auto const z = random_kspace<double>(2, Mask::full(8, 8), 6);
    CHECK_THROWS_AS(combine_weighted(std::vector<KSpace<double>>{z, z}, masks, build_weight_map(masks)), ShapeError);
    std::vector<Mask> const twice{Mask::full(8, 8), Mask::full(8, 8)};
    CHECK_THROWS(combine_weighted(std::vector<KSpace<double>>{z, z}, twice, build_weight_map(masks)));
  }
}

TEST_CASE("dc_update") {
  auto const y = random_kspace<double>(2, make_mask(16, 16, 2.0, 4, 1), 1);
  auto const branch_mask = make_mask(16, 16, 2.0, 4, 2);
  auto const s_hat = random_kspace<double>(2, branch_mask, 3);
  Mask const omega = branch_mask.intersect(y.mask);
  REQUIRE(omega.count() > 0);

  SUBCASE("gamma 1 replaces the overlap by the data") {
    auto const out = dc_update(s_hat, y, branch_mask, 1.0);
    for (int k = 0; k < 2; ++k) {
      for (int r = 0; r < 16; ++r) {
        for (int x = 0; x < 16; ++x) CHECK(out.coils[k](r, x) == (omega.selected(x) ? y.coils[k](r, x) : s_hat.coils[k](r, x)));
      }
    }
  }
  SUBCASE("gamma 2 reflects about the data") {
    auto const out = dc_update(s_hat, y, branch_mask, 2.0);
    for (int k = 0; k < 2; ++k) {
      for (int r = 0; r < 16; ++r) {
        for (int x = 0; x < 16; ++x) {
          auto const expected = omega.selected(x) ? 2.0 * y.coils[k](r, x) - s_hat.coils[k](r, x) : s_hat.coils[k](r, x);
          CHECK(std::abs(out.coils[k](r, x) - expected) < 1e-12);
        }
      }
    }
  }
  SUBCASE("empty overlap leaves the input alone") {
    auto const y0 = restrict(y, columns_mask(16, 16, {0}));
    CHECK(dc_update(restrict(s_hat, columns_mask(16, 16, {5, 6})), y0, columns_mask(16, 16, {5, 6}), 2.0) ==
          restrict(s_hat, columns_mask(16, 16, {5, 6})));
  }
  SUBCASE("data-consistent input is a fixed point for any gamma") {
    auto consistent = s_hat;
    for (int k = 0; k < 2; ++k) {
      for (int r = 0; r < 16; ++r) {
        for (int x = 0; x < 16; ++x) {
          if (omega.selected(x)) consistent.coils[k](r, x) = y.coils[k](r, x);
        }
      }
    }
    for (double g : {0.5, 1.0, 2.0, 3.7}) CHECK(dc_update(consistent, y, branch_mask, g) == consistent);
  }
}

TEST_CASE("draw_ensemble_masks") {
  CHECK(draw_ensemble_masks(1, 4.0, 4, 32, 32, 1).size() == 1);
  auto const masks = draw_ensemble_masks(10, 4.0, 4, 32, 32, 2);
  CHECK(masks.size() == 10);
  for (auto const &m : masks) {
    for (int x = 14; x < 18; ++x) CHECK(m.selected(x));
    CHECK(m.acs_width == 4);
  }
  CHECK(draw_ensemble_masks(10, 4.0, 4, 32, 32, 2) == masks);
  int distinct = 0;
  for (std::size_t i = 1; i < masks.size(); ++i) distinct += masks[i] != masks[0];
  CHECK(distinct > 0);
}

TEST_CASE("ensemble union coverage matches the column law") {
  // Columns outside the ACS are kept independently with p = (W/R - acs)/(W - acs).
  int const w = 32, acs = 4, members = 10;
  for (double r : {2.0, 3.0, 4.0}) {
    CAPTURE(r);
    double const p = (w / r - acs) / (w - acs);
    double const expected = (acs + (w - acs) * (1 - std::pow(1 - p, members))) / w;
    double mean = 0;
    int const trials = 2000;
    for (int t = 0; t < trials; ++t) {
      std::vector<int> covered(w, 0);
      for (auto const &m : draw_ensemble_masks(members, r, acs, 4, w, std::uint64_t(t))) {
        for (int x = 0; x < w; ++x) covered[x] |= m.selected(x);
      }
      mean += double(std::count(covered.begin(), covered.end(), 1)) / w / trials;
    }
    CHECK(std::abs(mean - expected) < 0.01);
  }
}

TEST_CASE("ancestral_step") {
  auto const z_tilde = random_kspace<double>(2, Mask::full(16, 16), 1);
  auto const z_t = random_kspace<double>(2, Mask::full(16, 16), 2);
  SUBCASE("sigma_prev zero returns the estimate") { CHECK(ancestral_step(z_t, z_tilde, 0.5, 0.0, 3) == z_tilde); }
  SUBCASE("invalid noise levels") {
    CHECK_THROWS_AS(ancestral_step(z_t, z_tilde, 0.5, 0.5, 3), std::invalid_argument);
    CHECK_THROWS_AS(ancestral_step(z_t, z_tilde, 0.5, 0.7, 3), std::invalid_argument);
  }
  SUBCASE("deterministic") { CHECK(ancestral_step(z_t, z_tilde, 1.0, 0.5, 9) == ancestral_step(z_t, z_tilde, 1.0, 0.5, 9)); }
  SUBCASE("residual standard deviation") {
    double const st = 1.0, sp = 0.6;
    KSpace<double> zero(8, Mask::full(128, 128));
    auto const out = ancestral_step(zero, zero, st, sp, 5);
    double ss = 0;
    std::size_t n = 0;
    for (auto const &c : out.coils) {
      for (auto const &v : c.data) {
        ss += std::norm(v);
        n += 2;
      }
    }
    double const expected = sp * std::sqrt(1 - sp * sp / (st * st));
    CHECK(std::abs(std::sqrt(ss / double(n)) / expected - 1) < 0.01);
  }
  SUBCASE("marginal consistency") {
    double const st = 2.0, sp = 0.8;
    KSpace<double> star(8, Mask::full(128, 128));
    for (auto &c : star.coils) {
      for (auto &v : c.data) v = {0.3, -0.1};
    }
    KSpace<double> noisy = star;
    Rng rng(4);
    for (auto &c : noisy.coils) {
      for (auto &v : c.data) v += rng.complex_normal(st);
    }
    auto const out = ancestral_step(noisy, star, st, sp, 6);
    double ss = 0;
    std::size_t n = 0;
    for (int k = 0; k < 8; ++k) {
      for (std::size_t i = 0; i < out.coils[k].size(); ++i) {
        ss += std::norm(out.coils[k].data[i] - star.coils[k].data[i]);
        n += 2;
      }
    }
    CHECK(std::abs(std::sqrt(ss / double(n)) / sp - 1) < 0.01);
  }
}

TEST_CASE("estimate_csm_inference") {
  auto const model = small_model(3);
  auto const y = small_measurement(4);
  auto const maps = estimate_csm_inference(acs_region(y), model);
  for (std::size_t i = 0; i < maps.coils[0].size(); ++i) {
    double ss = 0;
    for (auto const &c : maps.coils) ss += std::norm(std::complex<double>(c.data[i]));
    CHECK(std::abs(ss - 1) < 1e-6);
  }
  CHECK(estimate_csm_inference(acs_region(y), model) == maps);
  KSpace<float> empty(2, Mask(16, 16, 0));
  CHECK_THROWS_AS(estimate_csm_inference(empty, model), std::invalid_argument);
}

TEST_CASE("reconstruct") {
  auto const model = small_model(5);
  auto const y = small_measurement(6);
  auto const cfg = small_sampler();
  auto const a = reconstruct(y, model, cfg);
  auto const b = reconstruct(y, model, cfg);
  CHECK(a.image == b.image);
  CHECK(a.maps == b.maps);
  CHECK(all_finite(a.image));

  auto threaded = cfg;
  threaded.threads = 3;
  CHECK(reconstruct(y, model, threaded).image == a.image);

  auto other = cfg;
  other.seed = 12;
  CHECK(reconstruct(y, model, other).image != a.image);

  auto identity = model;
  identity.zero_parameters();
  auto const id = reconstruct(y, identity, cfg);
  CHECK(id.final_data_error < id.initial_data_error);

  Model<float> four(ModelSpec::defaults(4, 6), 1);
  CHECK_THROWS_AS(reconstruct(y, four, cfg), ShapeError);
}
