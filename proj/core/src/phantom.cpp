#include "cmsm/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cmsm {

namespace {

constexpr int kSupersample = 4;

Ellipse random_ellipse(PhantomSpec const &spec, Rng &rng) {
  Ellipse e;
  e.center_x = rng.uniform(-0.45, 0.45);
  e.center_y = rng.uniform(-0.45, 0.45);
  e.semi_x = rng.uniform(0.12, 0.55);
  e.semi_y = rng.uniform(0.12, 0.55);
  e.angle = rng.uniform(0.0, std::numbers::pi);
  e.intensity = rng.uniform(spec.intensity_min, spec.intensity_max);
  return e;
}

// Fraction of the pixel (sub-sampled on a kSupersample² grid) inside the ellipse.
double coverage(Ellipse const &e, double px0, double py0, double pixel) {
  double const c = std::cos(e.angle), s = std::sin(e.angle);
  int inside = 0;
  for (int sy = 0; sy < kSupersample; ++sy) {
    for (int sx = 0; sx < kSupersample; ++sx) {
      double const px = px0 + (sx + 0.5) * pixel / kSupersample - e.center_x;
      double const py = py0 + (sy + 0.5) * pixel / kSupersample - e.center_y;
      double const u = (c * px + s * py) / e.semi_x;
      double const v = (-s * px + c * py) / e.semi_y;
      if (u * u + v * v <= 1.0) ++inside;
    }
  }
  return double(inside) / (kSupersample * kSupersample);
}

}  // namespace

void validate(PhantomSpec const &spec) {
  if (spec.n_ellipses < 1 && spec.fixed_ellipses.empty()) throw std::invalid_argument("phantom: n_ellipses must be >= 1");
  if (!is_power_of_two(spec.height) || !is_power_of_two(spec.width)) {
    throw SizeError("phantom: height and width must be powers of two");
  }
  if (spec.intensity_max < spec.intensity_min) throw std::invalid_argument("phantom: empty intensity range");
  if (spec.phase_scale < 0) throw std::invalid_argument("phantom: phase_scale must be non-negative");
}

template <std::floating_point Real>
Image<Real> gen_phantom(PhantomSpec const &spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(derive_seed(seed, {1}));
  std::vector<Ellipse> ellipses = spec.fixed_ellipses;
  if (ellipses.empty()) {
    for (int i = 0; i < spec.n_ellipses; ++i) ellipses.push_back(random_ellipse(spec, rng));
  }

  int const h = spec.height, w = spec.width;
  std::vector<double> magnitude(static_cast<std::size_t>(h) * w, 0.0);
  double const px = 2.0 / w, py = 2.0 / h;
  for (auto const &e : ellipses) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double const f = coverage(e, -1.0 + x * px, -1.0 + y * py, std::max(px, py));
        magnitude[static_cast<std::size_t>(y) * w + x] += f * e.intensity;
      }
    }
  }

  // Smooth phase: a few plane waves with wavelength ~ phase_scale pixels.
  std::vector<double> phase(magnitude.size(), 0.0);
  if (spec.phase_scale > 0) {
    Rng prng(derive_seed(seed, {2}));
    for (int j = 0; j < 3; ++j) {
      double const dir = prng.uniform(0.0, 2.0 * std::numbers::pi);
      double const k = 2.0 * std::numbers::pi / spec.phase_scale * prng.uniform(0.5, 1.0);
      double const amp = prng.uniform(-0.6, 0.6);
      double const off = prng.uniform(0.0, 2.0 * std::numbers::pi);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          phase[static_cast<std::size_t>(y) * w + x] += amp * std::sin(k * (std::cos(dir) * x + std::sin(dir) * y) + off);
        }
      }
    }
  }

  double peak = 0;
  for (double m : magnitude) peak = std::max(peak, std::abs(m));
  if (peak == 0) peak = 1;
  Image<Real> img(h, w);
  for (std::size_t i = 0; i < img.size(); ++i) {
    double const m = magnitude[i] / peak;
    img.data[i] = phase[i] == 0.0 ? std::complex<Real>(Real(m), 0) : std::complex<Real>(std::polar(m, phase[i]));
  }
  return img;
}

template <std::floating_point Real>
CoilMaps<Real> gen_coilmaps(int n_coils, int height, int width, std::uint64_t seed, double lobe_width) {
  if (n_coils < 1) throw std::invalid_argument("gen_coilmaps: n_coils must be >= 1");
  Rng rng(derive_seed(seed, {3}));
  CoilMaps<Real> maps(n_coils, height, width);
  double const sigma = lobe_width * 2.0;  // in normalized [-1, 1] units
  for (int k = 0; k < n_coils; ++k) {
    double const angle = 2.0 * std::numbers::pi * k / n_coils + rng.uniform(-0.2, 0.2);
    double const radius = rng.uniform(0.9, 1.1);
    double const cx = radius * std::cos(angle), cy = radius * std::sin(angle);
    double const a0 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    double const ax = rng.uniform(-0.5, 0.5), ay = rng.uniform(-0.5, 0.5), axy = rng.uniform(-0.3, 0.3);
    auto &c = maps.coils[static_cast<std::size_t>(k)];
    for (int y = 0; y < height; ++y) {
      double const v = -1.0 + (y + 0.5) * 2.0 / height;
      for (int x = 0; x < width; ++x) {
        double const u = -1.0 + (x + 0.5) * 2.0 / width;
        double const d2 = (u - cx) * (u - cx) + (v - cy) * (v - cy);
        double const mag = std::exp(-d2 / (2.0 * sigma * sigma));
        double const ph = a0 + ax * u + ay * v + axy * u * v;
        c(y, x) = std::complex<Real>(std::polar(mag, ph));
      }
    }
  }
  return rss_normalize(maps).maps;
}

std::vector<TrainingView> training_views(std::vector<DatasetRecord> const &records) {
  std::vector<TrainingView> views;
  views.reserve(records.size());
  for (auto const &r : records) views.emplace_back(r);
  return views;
}

DatasetRecord simulate_record(SimulationSpec const &spec, std::uint64_t seed, std::uint64_t index) {
  auto const &p = spec.phantom;
  DatasetRecord r;
  r.ground_truth = gen_phantom<float>(p, derive_seed(seed, {index, 10}));
  r.true_maps = gen_coilmaps<float>(spec.n_coils, p.height, p.width, derive_seed(seed, {index, 11}), spec.lobe_width);
  r.z = synthesize_kspace(r.ground_truth, r.true_maps, spec.eta, derive_seed(seed, {index, 12}));
  r.mask = make_mask(p.height, p.width, spec.acceleration, spec.acs_width, derive_seed(seed, {index, 13}));
  r.eta = static_cast<float>(spec.eta);
  return r;
}

template Image<float> gen_phantom<float>(PhantomSpec const &, std::uint64_t);
template Image<double> gen_phantom<double>(PhantomSpec const &, std::uint64_t);
template CoilMaps<float> gen_coilmaps<float>(int, int, int, std::uint64_t, double);
template CoilMaps<double> gen_coilmaps<double>(int, int, int, std::uint64_t, double);

}  // namespace cmsm
