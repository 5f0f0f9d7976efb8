#pragma once

#include <cstdint>
#include <vector>

#include "cmsm/models.hpp"
#include "cmsm/parallel.hpp"
#include "cmsm/phantom.hpp"
#include "cmsm/training.hpp"

namespace cmsm {

struct SamplerConfig {
  int ensemble = 10;               // w, subsampling operators per step
  double step_size = 2.0;          // γ of the data-consistency update
  int steps = 100;                 // T
  double mask_acceleration = 4.0;  // acceleration of the ensemble masks (training law by default)
  std::uint64_t seed = 0;
  int threads = 1;
  /// Re-estimate the maps every K steps from the current iterate's ACS block; 0 = never.
  int csm_refresh_every = 0;

  void validate() const;
};

/// Per-coordinate weights on the full k-space grid.
struct WeightMap {
  int height = 0, width = 0;
  std::vector<double> weights;  // row-major, every entry in (0, 1]

  [[nodiscard]] double operator()(int y, int x) const { return weights[static_cast<std::size_t>(y) * width + x]; }
};

/// Ĉ from the ACS block of the acquired data, unit RSS per pixel.
template <std::floating_point Real>
CoilMaps<Real> estimate_csm_inference(KSpace<Real> const &y_acs, Model<Real> const &model) {
  if (y_acs.mask.count() == 0 || y_acs.mask.acs_width == 0) throw std::invalid_argument("estimate_csm_inference: empty ACS");
  return csm_forward(coil_images(acs_region(y_acs)), model);
}

/// w independent masks from the make_mask law; all contain the ACS block.
[[nodiscard]] std::vector<Mask> draw_ensemble_masks(int w, double acceleration, int acs_width, int height, int width,
                                                    std::uint64_t seed);

/// On Ω = S_i ∩ H: s̃ = ŝ − γ(ŝ − y); elsewhere s̃ = ŝ. γ = 1 replaces ŝ by y on Ω.
template <std::floating_point Real>
KSpace<Real> dc_update(KSpace<Real> const &s_hat, KSpace<Real> const &y, Mask const &branch_mask, double gamma) {
  if (s_hat.n_coils() != y.n_coils() || !s_hat.mask.same_grid(y.mask) || !branch_mask.same_grid(y.mask)) {
    throw ShapeError("dc_update: shape mismatch");
  }
  KSpace<Real> out = s_hat;
  Mask const overlap = branch_mask.intersect(y.mask);
  Real const g = Real(gamma);
  for (int k = 0; k < out.n_coils(); ++k) {
    auto &o = out.coils[k];
    auto const &yk = y.coils[k];
    for (int r = 0; r < o.height; ++r) {
      for (int x = 0; x < o.width; ++x) {
        if (!overlap.selected(x)) continue;
        if (gamma == 1.0) {
          o(r, x) = yk(r, x);
        } else {
          o(r, x) -= g * (o(r, x) - yk(r, x));
        }
      }
    }
  }
  return out;
}

/// 1 / max(number of masks selecting the coordinate, 1).
[[nodiscard]] WeightMap build_weight_map(std::vector<Mask> const &masks);

/// W ⊙ Σ_i S_iᴴ s̃_i, reduced in branch order. Output mask is the union of the
/// branch masks; uncovered coordinates are zero. Evaluated as a running mean over the
/// covering branches, so branches that agree reproduce their common value bit-exactly.
/// `wmap` must be build_weight_map(masks).
template <std::floating_point Real>
KSpace<Real> combine_weighted(std::vector<KSpace<Real>> const &branches, std::vector<Mask> const &masks, WeightMap const &wmap) {
  if (branches.empty() || branches.size() != masks.size()) throw ShapeError("combine_weighted: branch/mask count mismatch");
  int const nc = branches.front().n_coils();
  int const h = masks.front().height, w = masks.front().width;
  if (wmap.height != h || wmap.width != w) throw ShapeError("combine_weighted: weight map shape mismatch");
  Mask cover(h, w, masks.front().acs_width);
  std::vector<int> count(static_cast<std::size_t>(w), 0);
  for (auto const &m : masks) {
    if (!m.same_grid(cover)) throw ShapeError("combine_weighted: mask shape mismatch");
    cover.acs_width = std::min(cover.acs_width, m.acs_width);
    for (int x = 0; x < w; ++x) {
      if (m.selected(x)) {
        cover.columns[x] = 1;
        ++count[x];
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (wmap(y, x) != 1.0 / std::max(count[x], 1)) throw std::invalid_argument("combine_weighted: weight map does not match the masks");
    }
  }
  KSpace<Real> out(nc, cover);
  std::vector<int> seen(static_cast<std::size_t>(w), 0);
  for (std::size_t i = 0; i < branches.size(); ++i) {
    auto const &b = branches[i];
    if (b.n_coils() != nc || b.height() != h || b.width() != w) throw ShapeError("combine_weighted: branch shape mismatch");
    for (int x = 0; x < w; ++x) {
      if (!masks[i].selected(x)) continue;
      Real const inv = Real(1) / Real(++seen[x]);
      for (int k = 0; k < nc; ++k) {
        auto &o = out.coils[k];
        auto const &v = b.coils[k];
        for (int r = 0; r < h; ++r) o(r, x) += (v(r, x) - o(r, x)) * inv;
      }
    }
  }
  return out;
}

/// Variance-exploding posterior transition
///   z_{t-1} = z̃ + (σ_prev²/σ_t²)(z_t − z̃) + σ_prev·sqrt(1 − σ_prev²/σ_t²)·n
/// with n circular complex Gaussian on the full grid. σ_prev = 0 returns z̃ exactly.
template <std::floating_point Real>
KSpace<Real> ancestral_step(KSpace<Real> const &z_t, KSpace<Real> const &z_tilde, double sigma_t, double sigma_prev,
                            std::uint64_t seed) {
  if (!(sigma_prev < sigma_t) || sigma_prev < 0) throw std::invalid_argument("ancestral_step: need 0 <= sigma_prev < sigma_t");
  if (z_t.n_coils() != z_tilde.n_coils() || !z_t.mask.same_grid(z_tilde.mask)) throw ShapeError("ancestral_step: shape mismatch");
  KSpace<Real> out = z_tilde;
  out.mask = Mask::full(z_t.height(), z_t.width());
  if (sigma_prev == 0) return out;
  double const ratio = (sigma_prev * sigma_prev) / (sigma_t * sigma_t);
  double const noise = sigma_prev * std::sqrt(1.0 - ratio);
  Rng rng(seed);
  Real const r = Real(ratio);
  for (int k = 0; k < out.n_coils(); ++k) {
    auto &o = out.coils[k];
    auto const &zt = z_t.coils[k];
    for (std::size_t i = 0; i < o.size(); ++i) {
      o.data[i] += r * (zt.data[i] - o.data[i]) + std::complex<Real>(rng.complex_normal(noise));
    }
  }
  return out;
}

template <std::floating_point Real>
struct Reconstruction {
  Image<Real> image;    // coil-combined complex image
  CoilMaps<Real> maps;  // Ĉ used for the combination
  double initial_data_error = 0;  // mean |z_T − y| on acquired coordinates
  double final_data_error = 0;    // mean |z_0 − y| on acquired coordinates
};

template <std::floating_point Real>
double mean_abs_error_on_mask(KSpace<Real> const &z, KSpace<Real> const &y) {
  double s = 0;
  std::size_t n = 0;
  for (int k = 0; k < y.n_coils(); ++k) {
    for (int r = 0; r < y.height(); ++r) {
      for (int x = 0; x < y.width(); ++x) {
        if (!y.mask.selected(x)) continue;
        s += std::abs(std::complex<double>(z.coils[k](r, x) - y.coils[k](r, x)));
        ++n;
      }
    }
  }
  return n ? s / double(n) : 0.0;
}

/// Conditional sampling from acquired data y (zero-filled, with its acquisition mask).
template <std::floating_point Real>
Reconstruction<Real> reconstruct(KSpace<Real> const &y, Model<Real> const &model, SamplerConfig const &config) {
  config.validate();
  if (y.n_coils() != model.spec().n_coils) throw ShapeError("reconstruct: coil count does not match the model");
  NoiseSchedule schedule = model.spec().schedule;
  schedule.steps = config.steps;
  int const h = y.height(), w = y.width();
  int const acs = y.mask.acs_width;

  Reconstruction<Real> out;
  out.maps = estimate_csm_inference(acs_region(y), model);

  KSpace<Real> z(y.n_coils(), Mask::full(h, w));
  {
    Rng rng(derive_seed(config.seed, {0}));
    for (auto &c : z.coils) {
      for (auto &v : c.data) v = std::complex<Real>(rng.complex_normal(schedule.sigma_max));
    }
  }
  out.initial_data_error = mean_abs_error_on_mask(z, y);

  std::vector<KSpace<Real>> branches(static_cast<std::size_t>(config.ensemble));
  for (int t = schedule.steps - 1; t >= 0; --t) {
    auto const ut = static_cast<std::uint64_t>(t);
    double const sigma_t = schedule.sigma(t);
    double const sigma_prev = t > 0 ? schedule.sigma(t - 1) : 0.0;
    if (config.csm_refresh_every > 0 && t != schedule.steps - 1 && (schedule.steps - 1 - t) % config.csm_refresh_every == 0) {
      KSpace<Real> acs_data = restrict(z, Mask::acs_only(h, w, acs));
      acs_data.mask.acs_width = acs;
      out.maps = estimate_csm_inference(dc_update(acs_data, y, acs_data.mask, 1.0), model);
    }
    auto const masks = draw_ensemble_masks(config.ensemble, config.mask_acceleration, acs, h, w, derive_seed(config.seed, {1, ut}));
    parallel_for(config.ensemble, config.threads, [&](int i) {
      KSpace<Real> const s_i = restrict(z, masks[i]);
      KSpace<Real> const s_hat = predict_measurement(s_i, Real(sigma_t), model, out.maps);
      branches[i] = dc_update(s_hat, y, masks[i], config.step_size);
    });
    KSpace<Real> const z_tilde = combine_weighted(branches, masks, build_weight_map(masks));
    z = ancestral_step(z, z_tilde, sigma_t, sigma_prev, derive_seed(config.seed, {2, ut}));
  }
  out.final_data_error = mean_abs_error_on_mask(z, y);
  out.image = apply_adjoint(z, out.maps);
  return out;
}

}  // namespace cmsm
