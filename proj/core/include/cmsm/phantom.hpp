#pragma once

#include <cstdint>
#include <vector>

#include "cmsm/operators.hpp"
#include "cmsm/rng.hpp"
#include "cmsm/types.hpp"

namespace cmsm {

/// Ellipse in normalized coordinates: the image spans [-1, 1] on both axes.
struct Ellipse {
  double center_x = 0, center_y = 0;
  double semi_x = 0.5, semi_y = 0.5;
  double angle = 0;  // radians
  double intensity = 1;
};

struct PhantomSpec {
  int height = 32;
  int width = 32;
  int n_ellipses = 6;
  double intensity_min = 0.2;
  double intensity_max = 1.0;
  double phase_scale = 32.0;  // correlation length of the phase field in pixels; 0 disables phase
  /// When non-empty these ellipses are drawn instead of random ones.
  std::vector<Ellipse> fixed_ellipses;
};

void validate(PhantomSpec const &spec);

/// Sum of anti-aliased ellipses times a smooth unit-modulus phase field,
/// normalized so the largest magnitude is 1. Pure function of (spec, seed).
template <std::floating_point Real>
Image<Real> gen_phantom(PhantomSpec const &spec, std::uint64_t seed);

/// Default Gaussian lobe width as a fraction of the image height.
inline constexpr double kDefaultLobeWidth = 0.6;

/// Smooth complex coil maps: one Gaussian lobe per coil centered near the image
/// border with a low-order polynomial phase, then RSS-normalized.
template <std::floating_point Real>
CoilMaps<Real> gen_coilmaps(int n_coils, int height, int width, std::uint64_t seed,
                            double lobe_width = kDefaultLobeWidth);

/// Fully sampled noisy k-space: apply_forward with a full mask plus circular complex
/// Gaussian noise with standard deviation `eta` per real component.
template <std::floating_point Real>
KSpace<Real> synthesize_kspace(Image<Real> const &x, CoilMaps<Real> const &maps, double eta, std::uint64_t seed) {
  if (eta < 0) throw std::invalid_argument("synthesize_kspace: eta must be non-negative");
  KSpace<Real> z = apply_forward(x, maps, Mask::full(x.height, x.width));
  if (eta == 0) return z;
  Rng rng(seed);
  for (auto &c : z.coils) {
    for (auto &v : c.data) v += std::complex<Real>(rng.complex_normal(eta));
  }
  return z;
}

template <std::floating_point Real>
struct TrainingSample {
  KSpace<Real> s;      // subsampled measurement
  KSpace<Real> s_acs;  // its ACS block only
};

/// ACS-only restriction of a measurement.
template <std::floating_point Real>
KSpace<Real> acs_region(KSpace<Real> const &y) {
  return restrict(y, Mask::acs_only(y.height(), y.width(), y.mask.acs_width));
}

template <std::floating_point Real>
TrainingSample<Real> make_training_sample(KSpace<Real> const &z, double acceleration, int acs_width, std::uint64_t seed) {
  TrainingSample<Real> t;
  t.s = restrict(z, make_mask(z.height(), z.width(), acceleration, acs_width, seed));
  t.s_acs = acs_region(t.s);
  return t;
}

/// One simulated scan. Stored in single precision (the dataset file format).
struct DatasetRecord {
  Image<float> ground_truth;
  CoilMaps<float> true_maps;
  KSpace<float> z;  // fully sampled, noisy
  Mask mask;        // training subsampling pattern; s = restrict(z, mask)
  float eta = 0;

  [[nodiscard]] KSpace<float> subsample() const { return restrict(z, mask); }
  bool operator==(DatasetRecord const &) const = default;
};

/// What the training path is allowed to see of a record: the subsampled
/// measurement and its ACS block. Holds copies, no reference back to the record.
class TrainingView {
public:
  explicit TrainingView(DatasetRecord const &record)
      : s_(record.subsample()), s_acs_(acs_region(s_)) {}
  TrainingView(KSpace<float> s) : s_(std::move(s)), s_acs_(acs_region(s_)) {}

  [[nodiscard]] KSpace<float> const &s() const { return s_; }
  [[nodiscard]] KSpace<float> const &s_acs() const { return s_acs_; }

private:
  KSpace<float> s_;
  KSpace<float> s_acs_;
};

[[nodiscard]] std::vector<TrainingView> training_views(std::vector<DatasetRecord> const &records);

struct SimulationSpec {
  PhantomSpec phantom;
  int n_coils = 4;
  double eta = 0.01;
  double acceleration = 4.0;
  int acs_width = 4;
  double lobe_width = kDefaultLobeWidth;
};

/// Record `index` of a dataset generated from `seed`; each record draws its own sub-seeds.
[[nodiscard]] DatasetRecord simulate_record(SimulationSpec const &spec, std::uint64_t seed, std::uint64_t index);

/// Mean over coils and pixels of squared forward differences (no wrap).
template <std::floating_point Real>
double gradient_energy(CoilMaps<Real> const &maps) {
  if (maps.n_coils() == 0) return 0;
  double s = 0;
  int const h = maps.height(), w = maps.width();
  for (auto const &c : maps.coils) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (y + 1 < h) s += std::norm(std::complex<double>(c(y + 1, x) - c(y, x)));
        if (x + 1 < w) s += std::norm(std::complex<double>(c(y, x + 1) - c(y, x)));
      }
    }
  }
  return s / (double(h) * w * maps.n_coils());
}

}  // namespace cmsm
