#include "doctest.h"
#include "test_helpers.hpp"

#include <filesystem>
#include <functional>

#include "cmsm/autodiff.hpp"
#include "cmsm/checkpoint.hpp"
#include "cmsm/models.hpp"

using namespace cmsm;
using namespace cmsm::test;

namespace {

// Re Σ conj(w) ⊙ z: a real linear functional whose gradient w.r.t. z is w.
double probe(Image<double> const &w, Image<double> const &z) { return inner(w, z).real(); }

double probe(CoilMaps<double> const &w, CoilMaps<double> const &z) {
  double s = 0;
  for (int k = 0; k < w.n_coils(); ++k) s += probe(w.coils[k], z.coils[k]);
  return s;
}

std::vector<double> random_direction(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> d(n);
  for (auto &v : d) v = rng.normal();
  return d;
}

// Central-difference directional derivative of f along d over every parameter.
double fd_params(Model<double> &model, std::function<double()> const &f, std::vector<std::vector<double>> const &dirs,
                 double h = 1e-5) {
  auto shift = [&](double s) {
    for (std::size_t i = 0; i < model.params().size(); ++i) {
      auto &p = model.params()[i];
      for (std::size_t j = 0; j < p.size(); ++j) p.values[j] += s * dirs[i][j];
    }
  };
  shift(h);
  double const up = f();
  shift(-2 * h);
  double const down = f();
  shift(h);
  return (up - down) / (2 * h);
}

std::vector<std::vector<double>> param_directions(Model<double> const &model, std::uint64_t seed) {
  std::vector<std::vector<double>> dirs;
  for (std::size_t i = 0; i < model.params().size(); ++i) dirs.push_back(random_direction(model.params()[i].size(), seed + i));
  return dirs;
}

double analytic_along(Model<double> const &model, std::vector<std::vector<double>> const &dirs) {
  double s = 0;
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    auto const &p = model.params()[i];
    for (std::size_t j = 0; j < p.size(); ++j) s += p.grad[j] * dirs[i][j];
  }
  return s;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

ModelSpec tiny_spec(int n_coils) {
  ModelSpec spec = ModelSpec::defaults(n_coils, 6);
  return spec;
}

std::vector<Image<double>> random_coil_images(int nc, int h, int w, std::uint64_t seed) {
  std::vector<Image<double>> out;
  for (int k = 0; k < nc; ++k) out.push_back(random_image<double>(h, w, seed + k));
  return out;
}

std::filesystem::path temp_path(std::string const &name) {
  return std::filesystem::temp_directory_path() / ("cmsm_test_" + name);
}

}  // namespace

TEST_CASE("ConvNetSpec validation") {
  CHECK_NOTHROW(ConvNetSpec::chain({3, 8, 2}, true).validate());
  ConvNetSpec broken = ConvNetSpec::chain({3, 8, 2}, false);
  broken.layers[1].in_channels = 5;
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
  ConvNetSpec even = ConvNetSpec::chain({3, 2}, false);
  even.layers[0].kernel = 2;
  CHECK_THROWS_AS(even.validate(), std::invalid_argument);
}

TEST_CASE("conv layer matches a direct zero-padded convolution") {
  for (int dil : {1, 2, 3}) {
    CAPTURE(dil);
    ConvNetSpec spec = ConvNetSpec::chain({2, 3}, false, {dil});
    ParamStore<double> store;
    ConvNet<double> net(spec, store, "t");
    net.init(store, 5);
    for (auto &v : store.at("t.conv0.bias").values) v = 0.25;
    Tensor<double> in(2, 5, 6);
    Rng rng(1);
    for (auto &v : in.data) v = rng.normal();
    auto const out = net.forward(store, in, nullptr);
    auto const &wt = store.at("t.conv0.weight").values;
    for (int o = 0; o < 3; ++o) {
      for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 6; ++x) {
          double s = 0.25;
          for (int i = 0; i < 2; ++i) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                int const yy = y + (ky - 1) * dil, xx = x + (kx - 1) * dil;
                if (yy < 0 || yy >= 5 || xx < 0 || xx >= 6) continue;
                s += wt[((o * 2 + i) * 3 + ky) * 3 + kx] * in.channel(i)[yy * 6 + xx];
              }
            }
          }
          CHECK(std::abs(out.channel(o)[y * 6 + x] - s) < 1e-12);
        }
      }
    }
  }
  CHECK_THROWS_AS(ConvNetSpec::chain({2, 3}, false, {0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(ConvNetSpec::chain({2, 3, 4}, false, {1}), std::invalid_argument);
}

TEST_CASE("global context adds a uniform function of channel means") {
  ConvNetSpec spec = ConvNetSpec::chain({2, 1}, false);
  spec.layers[0].global_context = true;
  ParamStore<double> store;
  ConvNet<double> net(spec, store, "t");
  CHECK(store.at("t.conv0.context").shape == std::vector<int>{1, 2});
  Tensor<double> in(2, 4, 5);
  Rng rng(3);
  for (auto &v : in.data) v = rng.normal();
  double mean0 = 0, mean1 = 0;
  for (std::size_t p = 0; p < in.plane(); ++p) {
    mean0 += in.channel(0)[p] / double(in.plane());
    mean1 += in.channel(1)[p] / double(in.plane());
  }
  auto &wt = store.at("t.conv0.weight").values;
  std::fill(wt.begin(), wt.end(), 0.0);
  store.at("t.conv0.bias").values = {0.5};
  store.at("t.conv0.context").values = {-1.0, 2.0};
  auto const out = net.forward(store, in, nullptr);
  for (std::size_t p = 0; p < out.plane(); ++p) CHECK(std::abs(out.channel(0)[p] - (0.5 - mean0 + 2.0 * mean1)) < 1e-12);
}

TEST_CASE("ConvNet gradients match finite differences") {
  ConvNetSpec spec = ConvNetSpec::chain({2, 4, 3}, false, {2, 1});
  spec.layers[1].global_context = true;
  ParamStore<double> store;
  ConvNet<double> net(spec, store, "t");
  net.init(store, 3);
  for (auto &p : store) {
    if (p.name.ends_with("bias")) {
      Rng rng(4);
      for (auto &v : p.values) v = 0.1 * rng.normal();
    }
  }
  Tensor<double> in(2, 6, 5), w(3, 6, 5);
  Rng rng(2);
  for (auto &v : in.data) v = rng.normal();
  for (auto &v : w.data) v = rng.normal();
  auto loss = [&](Tensor<double> const &input) {
    auto const out = net.forward(store, input, nullptr);
    double s = 0;
    for (std::size_t i = 0; i < out.data.size(); ++i) s += w.data[i] * out.data[i];
    return s;
  };
  ConvTape<double> tape;
  net.forward(store, in, &tape);
  store.zero_grad();
  auto const gin = net.backward(store, tape, w);

  double const h = 1e-5;
  auto const din = random_direction(in.data.size(), 8);
  Tensor<double> up = in, down = in;
  double analytic = 0;
  for (std::size_t i = 0; i < din.size(); ++i) {
    up.data[i] += h * din[i];
    down.data[i] -= h * din[i];
    analytic += gin.data[i] * din[i];
  }
  CHECK(rel_err((loss(up) - loss(down)) / (2 * h), analytic) < 1e-4);

  for (auto &p : store) {
    auto const d = random_direction(p.size(), 9);
    double an = 0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      an += p.grad[j] * d[j];
      p.values[j] += h * d[j];
    }
    double const lu = loss(in);
    for (std::size_t j = 0; j < p.size(); ++j) p.values[j] -= 2 * h * d[j];
    double const ld = loss(in);
    for (std::size_t j = 0; j < p.size(); ++j) p.values[j] += h * d[j];
    CHECK(rel_err((lu - ld) / (2 * h), an) < 1e-4);
  }

  ConvTape<double> empty;
  CHECK_THROWS_AS(net.backward(store, empty, w), TapeError);
}

TEST_CASE("He-uniform initialization is seeded and bounded") {
  Model<double> a(ModelSpec::defaults(4), 7), b(ModelSpec::defaults(4), 7), c(ModelSpec::defaults(4), 8);
  CHECK(a.params() == b.params());
  CHECK(!(a.params() == c.params()));
  auto const &w = a.params().at("denoiser.conv1.weight");
  double const bound = std::sqrt(6.0 / (32 * 9));
  for (double v : w.values) CHECK(std::abs(v) <= bound);
  for (double v : a.params().at("csm.conv0.bias").values) CHECK(v == 0.0);
}

TEST_CASE("denoiser with all-zero weights is the identity") {
  Model<double> model(ModelSpec::defaults(4), 1);
  model.zero_parameters();
  auto const x = random_image<double>(32, 32, 3);
  for (double sigma : {0.01, 0.5, 10.0}) CHECK(denoiser_forward(x, sigma, model) == x);
  Model<float> mf(ModelSpec::defaults(4), 1);
  mf.zero_parameters();
  auto const xf = random_image<float>(16, 16, 3);
  CHECK(denoiser_forward(xf, 1.0f, mf) == xf);
}

TEST_CASE("denoiser gradients match finite differences") {
  Model<double> model(tiny_spec(2), 11);
  auto const x = random_image<double>(8, 8, 1);
  auto const w = random_image<double>(8, 8, 2);
  for (double sigma : {0.05, 2.0}) {
    DenoiserTape<double> tape;
    denoiser_forward(x, sigma, model, &tape);
    model.params().zero_grad();
    auto const gx = denoiser_backward(model, tape, w);
    auto const dirs = param_directions(model, 100);
    double const fd = fd_params(model, [&] { return probe(w, denoiser_forward(x, sigma, model)); }, dirs);
    CHECK(rel_err(fd, analytic_along(model, dirs)) < 1e-4);

    auto const dx = random_image<double>(8, 8, 3);
    double const h = 1e-5;
    auto xu = x, xd = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xu.data[i] += h * dx.data[i];
      xd.data[i] -= h * dx.data[i];
    }
    double const fdx = (probe(w, denoiser_forward(xu, sigma, model)) - probe(w, denoiser_forward(xd, sigma, model))) / (2 * h);
    CHECK(rel_err(fdx, probe(gx, dx)) < 1e-4);
  }
  DenoiserTape<double> empty;
  CHECK_THROWS_AS(denoiser_backward(model, empty, w), TapeError);
  CHECK_THROWS_AS(denoiser_forward(x, 0.0, model), std::invalid_argument);
}

TEST_CASE("denoiser output depends on sigma") {
  Model<double> model(tiny_spec(2), 12);
  auto const x = random_image<double>(8, 8, 1);
  CHECK(max_abs_diff(denoiser_forward(x, 0.1, model), denoiser_forward(x, 1.0, model)) > 1e-6);
}

TEST_CASE("csm_forward") {
  Model<float> model(ModelSpec::defaults(4), 3);
  std::vector<Image<float>> imgs;
  for (int k = 0; k < 4; ++k) imgs.push_back(random_image<float>(32, 32, 20 + k));
  auto const maps = csm_forward(imgs, model);
  for (std::size_t i = 0; i < maps.coils[0].size(); ++i) {
    double ss = 0;
    for (auto const &c : maps.coils) ss += std::norm(std::complex<double>(c.data[i]));
    CHECK(std::abs(ss - 1) < 1e-6);
  }
  CHECK(csm_forward(imgs, model) == maps);
  imgs.pop_back();
  CHECK_THROWS_AS(csm_forward(imgs, model), ShapeError);
}

TEST_CASE("csm_forward is invariant to data scale") {
  Model<double> model(tiny_spec(2), 5);
  auto imgs = random_coil_images(2, 8, 8, 40);
  auto const a = csm_forward(imgs, model);
  for (auto &img : imgs) {
    for (auto &v : img.data) v *= 37.0;
  }
  auto const b = csm_forward(imgs, model);
  for (int k = 0; k < 2; ++k) CHECK(max_abs_diff(a.coils[k], b.coils[k]) < 1e-12);
}

TEST_CASE("csm gradients through RSS normalization match finite differences") {
  Model<double> model(tiny_spec(2), 13);
  auto const imgs = random_coil_images(2, 8, 8, 30);
  auto const w = random_maps<double>(2, 8, 8, 31, false);
  CsmTape<double> tape;
  csm_forward(imgs, model, &tape);
  model.params().zero_grad();
  csm_backward(model, tape, w);
  auto const dirs = param_directions(model, 200);
  double const fd = fd_params(model, [&] { return probe(w, csm_forward(imgs, model)); }, dirs);
  CHECK(rel_err(fd, analytic_along(model, dirs)) < 1e-4);
  for (auto const &p : model.params()) {
    if (!Model<double>::is_csm_param(p.name)) {
      for (double g : p.grad) CHECK(g == 0.0);
    }
  }
}

TEST_CASE("complex op gradients") {
  double const h = 1e-6;
  auto const a = random_image<double>(4, 4, 1), b = random_image<double>(4, 4, 2);
  auto const w = random_image<double>(4, 4, 3), da = random_image<double>(4, 4, 4), db = random_image<double>(4, 4, 5);
  auto perturb = [](Image<double> x, Image<double> const &d, double s) {
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += s * d.data[i];
    return x;
  };
  auto product = [](Image<double> const &x, Image<double> const &y, bool conj_first) {
    Image<double> out(x.height, x.width);
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = (conj_first ? std::conj(x.data[i]) : x.data[i]) * y.data[i];
    return out;
  };
  for (bool conj_first : {false, true}) {
    Image<double> ga(4, 4), gb(4, 4);
    if (conj_first) {
      ad::conj_multiply_backward(a, b, w, &ga, &gb);
    } else {
      ad::multiply_backward(a, b, w, &ga, &gb);
    }
    double const fa = (probe(w, product(perturb(a, da, h), b, conj_first)) - probe(w, product(perturb(a, da, -h), b, conj_first))) / (2 * h);
    double const fb = (probe(w, product(a, perturb(b, db, h), conj_first)) - probe(w, product(a, perturb(b, db, -h), conj_first))) / (2 * h);
    CHECK(rel_err(fa, probe(ga, da)) < 1e-4);
    CHECK(rel_err(fb, probe(gb, db)) < 1e-4);
  }
  auto const x = random_image<double>(8, 4, 6), wx = random_image<double>(8, 4, 7), dx = random_image<double>(8, 4, 8);
  double const ff = (probe(wx, fft2_unitary(perturb(x, dx, h))) - probe(wx, fft2_unitary(perturb(x, dx, -h)))) / (2 * h);
  CHECK(rel_err(ff, probe(ad::fft2_unitary_backward(wx), dx)) < 1e-4);
  double const fi = (probe(wx, ifft2_unitary(perturb(x, dx, h))) - probe(wx, ifft2_unitary(perturb(x, dx, -h)))) / (2 * h);
  CHECK(rel_err(fi, probe(ad::ifft2_unitary_backward(wx), dx)) < 1e-4);
}

TEST_CASE("rss_normalize backward matches finite differences") {
  auto const raw = random_maps<double>(3, 4, 4, 50, false);
  auto const w = random_maps<double>(3, 4, 4, 51, false);
  auto const d = random_maps<double>(3, 4, 4, 52, false);
  auto const g = ad::rss_normalize_backward(raw, w);
  double const h = 1e-6;
  auto shifted = [&](double s) {
    auto r = raw;
    for (int k = 0; k < 3; ++k) {
      for (std::size_t i = 0; i < r.coils[k].size(); ++i) r.coils[k].data[i] += s * d.coils[k].data[i];
    }
    return probe(w, rss_normalize(r).maps);
  };
  CHECK(rel_err((shifted(h) - shifted(-h)) / (2 * h), probe(g, d)) < 1e-4);
}

TEST_CASE("closed-form gradients") {
  std::vector<double> const x{1.5, -2.0, 0.0, 3.25};
  CHECK(ad::squared_norm_grad(x) == std::vector<double>{3.0, -4.0, 0.0, 6.5});
  auto const p = random_image<double>(16, 8, 9);
  auto const g = ad::fft2_unitary_backward(ad::squared_norm_grad(fft2_unitary(p)));
  Image<double> two_p = p;
  for (auto &v : two_p.data) v *= 2.0;
  CHECK(max_abs_diff(g, two_p) < 1e-12);
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Model<double> model(tiny_spec(2), 1);
    auto const before = model.params();
    AdamState<double> st(AdamConfig{}, model.params());
    model.params().zero_grad();
    adam_step(model.params(), st);
    CHECK(model.params() == before);
  }
  SUBCASE("first step on p^2 from 1 with lr 0.1") {
    ParamStore<double> s;
    s.add("p", {1});
    s[0].values[0] = 1.0;
    AdamState<double> st(AdamConfig{0.1}, s);
    s[0].grad[0] = 2 * s[0].values[0];
    adam_step(s, st);
    CHECK(std::abs(s[0].values[0] - 0.9) < 1e-6);
    CHECK(st.step == 1);
  }
  SUBCASE("deterministic") {
    auto run = [] {
      Model<float> model(tiny_spec(2), 4);
      AdamState<float> st(AdamConfig{}, model.params());
      for (int it = 0; it < 3; ++it) {
        for (auto &p : model.params()) {
          for (std::size_t j = 0; j < p.size(); ++j) p.grad[j] = std::sin(float(j + it)) * p.values[j] + 0.01f;
        }
        adam_step(model.params(), st);
      }
      return model.params();
    };
    CHECK(run() == run());
  }
}

TEST_CASE("ParamStore rejects duplicates and bad shapes") {
  ParamStore<float> s;
  s.add("a", {2, 3});
  CHECK(s.total_values() == 6);
  CHECK_THROWS_AS(s.add("a", {1}), std::invalid_argument);
  CHECK_THROWS_AS(s.add("b", {0}), std::invalid_argument);
  CHECK_THROWS_AS(s.at("missing"), std::out_of_range);
}

TEST_CASE("checkpoint round trip") {
  Model<float> model(ModelSpec::defaults(4), 21);
  AdamState<float> adam(AdamConfig{2e-3}, model.params());
  for (auto &p : model.params()) {
    for (std::size_t j = 0; j < p.size(); ++j) p.grad[j] = 0.01f * float(j % 7) - 0.02f;
  }
  adam_step(model.params(), adam);
  auto const ckpt = make_checkpoint(model, &adam, 1234);
  auto const path = temp_path("model.cmsm");
  save_checkpoint(ckpt, path);
  auto const loaded = load_checkpoint(path);
  CHECK(loaded == ckpt);
  CHECK(encode_checkpoint(loaded) == encode_checkpoint(ckpt));

  auto const st = restore_checkpoint(loaded);
  CHECK(st.iteration == 1234);
  CHECK(st.model.spec() == model.spec());
  for (std::size_t i = 0; i < model.params().size(); ++i) CHECK(st.model.params()[i].values == model.params()[i].values);
  REQUIRE(st.adam.has_value());
  CHECK(st.adam->step == adam.step);
  CHECK(st.adam->m == adam.m);
  CHECK(st.adam->v == adam.v);
  CHECK(st.adam->config.learning_rate == doctest::Approx(2e-3));

  auto const bare = restore_checkpoint(make_checkpoint(model));
  CHECK(!bare.adam.has_value());

  ModelSpec varied = ModelSpec::defaults(2, 4);
  varied.denoiser = ConvNetSpec::chain({3, 4, 4, 2}, true, {1, 2, 1});
  varied.csm.layers.back().global_context = true;
  Model<float> other(varied, 4);
  auto const back = restore_checkpoint(decode_checkpoint(encode_checkpoint(make_checkpoint(other))));
  CHECK(back.model.spec() == varied);
  for (std::size_t i = 0; i < other.params().size(); ++i) CHECK(back.model.params()[i].values == other.params()[i].values);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint errors") {
  Model<float> model(tiny_spec(2), 1);
  auto const bytes = encode_checkpoint(make_checkpoint(model));
  auto b = bytes;
  b[3] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(b), BadMagicError);
  b = bytes;
  b[4] = 2;
  CHECK_THROWS_AS(decode_checkpoint(b), VersionError);
  b = bytes;
  b.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(b), TruncatedError);

  Checkpoint partial = make_checkpoint(model);
  partial.tensors.pop_back();
  CHECK_THROWS_AS(restore_checkpoint(partial), DataError);
}
