#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cmsm/models.hpp"
#include "cmsm/phantom.hpp"
#include "cmsm/rng.hpp"
#include "cmsm/schedule.hpp"

namespace cmsm {

/// s_t = s + σ n with circular complex Gaussian n (std σ per real component), added
/// only on mask-selected coordinates so s_t stays a valid masked measurement.
template <std::floating_point Real>
KSpace<Real> perturb(KSpace<Real> const &s, double sigma, std::uint64_t seed) {
  KSpace<Real> out = s;
  if (sigma == 0) return out;
  Rng rng(seed);
  for (auto &c : out.coils) {
    for (int y = 0; y < c.height; ++y) {
      for (int x = 0; x < c.width; ++x) {
        if (s.mask.selected(x)) c(y, x) += std::complex<Real>(rng.complex_normal(sigma));
      }
    }
  }
  return out;
}

/// ŝ = S F Ĉ D_θ(F^H Ĉ^H s_t; σ), restricted to s_t's mask.
template <std::floating_point Real>
KSpace<Real> predict_measurement(KSpace<Real> const &s_t, Real sigma, Model<Real> const &model, CoilMaps<Real> const &maps) {
  Image<Real> const combined = apply_adjoint(s_t, maps);
  Image<Real> const denoised = denoiser_forward(combined, sigma, model);
  return apply_forward(denoised, maps, s_t.mask);
}

/// Number of complex entries a measurement's mask selects across all coils.
template <std::floating_point Real>
std::size_t selected_entries(KSpace<Real> const &s) {
  return static_cast<std::size_t>(s.n_coils()) * s.height() * s.mask.count();
}

/// Mean squared error between s and the prediction over the selected coordinates.
template <std::floating_point Real>
double msm_loss(KSpace<Real> const &s, KSpace<Real> const &s_t, Real sigma, Model<Real> const &model, CoilMaps<Real> const &maps) {
  if (s.mask != s_t.mask) throw ShapeError("msm_loss: s and s_t must share a mask");
  std::size_t const m = selected_entries(s);
  if (m == 0) throw std::invalid_argument("msm_loss: empty mask");
  KSpace<Real> const pred = predict_measurement(s_t, sigma, model, maps);
  double sum = 0;
  for (int k = 0; k < s.n_coils(); ++k) {
    for (std::size_t i = 0; i < s.coils[k].size(); ++i) {
      sum += std::norm(std::complex<double>(s.coils[k].data[i] - pred.coils[k].data[i]));
    }
  }
  return sum / double(m);
}

/// Forward-difference gradient energy of the maps, averaged over pixels and coils.
template <std::floating_point Real>
double csm_smoothness_loss(CoilMaps<Real> const &maps) {
  return gradient_energy(maps);
}

struct LossTerms {
  double msm = 0;
  double csm = 0;
  double total = 0;
};

/// Intermediates of one total_loss evaluation.
template <std::floating_point Real>
struct LossTape {
  CsmTape<Real> csm;
  DenoiserTape<Real> denoiser;
  CoilMaps<Real> maps;                 // Ĉ
  std::vector<Image<Real>> st_images;  // F^H s_t per coil
  Image<Real> denoised;                // D_θ output
  KSpace<Real> residual;               // ŝ − s on the mask
  double lambda = 0;
  std::size_t selected = 0;
  bool recorded = false;
};

/// L_total = L_MSM(s, ŝ(s_t; Ĉ)) + λ·L_CSM(Ĉ) with Ĉ = csm_forward(F^H s_acs).
/// Passing a tape records what backward() needs.
template <std::floating_point Real>
LossTerms total_loss(KSpace<Real> const &s, KSpace<Real> const &s_acs, KSpace<Real> const &s_t, Real sigma,
                     Model<Real> const &model, double lambda, LossTape<Real> *tape = nullptr) {
  if (lambda < 0) throw std::invalid_argument("total_loss: lambda must be non-negative");
  if (s.mask != s_t.mask) throw ShapeError("total_loss: s and s_t must share a mask");
  std::size_t const m = selected_entries(s);
  if (m == 0) throw std::invalid_argument("total_loss: empty mask");

  LossTape<Real> local;
  LossTape<Real> &tp = tape ? *tape : local;
  tp.recorded = false;
  tp.maps = csm_forward(coil_images(s_acs), model, tape ? &tp.csm : nullptr);
  tp.st_images = coil_images(s_t);
  Image<Real> combined(s.height(), s.width());
  for (int k = 0; k < s.n_coils(); ++k) {
    auto const &c = tp.maps.coils[k];
    auto const &a = tp.st_images[k];
    for (std::size_t i = 0; i < combined.size(); ++i) combined.data[i] += std::conj(c.data[i]) * a.data[i];
  }
  tp.denoised = denoiser_forward(combined, sigma, model, tape ? &tp.denoiser : nullptr);
  tp.residual = apply_forward(tp.denoised, tp.maps, s.mask);
  double sum = 0;
  for (int k = 0; k < s.n_coils(); ++k) {
    auto &r = tp.residual.coils[k];
    for (std::size_t i = 0; i < r.size(); ++i) {
      r.data[i] -= s.coils[k].data[i];
      sum += std::norm(std::complex<double>(r.data[i]));
    }
    apply_mask_inplace(r, s.mask);
  }
  LossTerms L;
  L.msm = sum / double(m);
  L.csm = csm_smoothness_loss(tp.maps);
  L.total = L.msm + lambda * L.csm;
  tp.lambda = lambda;
  tp.selected = m;
  tp.recorded = tape != nullptr;
  return L;
}

/// Reverse pass of total_loss: accumulates `scale`·∂L_total into the gradients of
/// both θ and φ (the shared Ĉ carries gradient into φ from both loss terms).
template <std::floating_point Real>
void backward(LossTape<Real> const &tape, Model<Real> &model, Real scale = Real(1)) {
  if (!tape.recorded) throw TapeError("backward: total_loss was not recorded on this tape");
  int const nc = tape.maps.n_coils();
  int const h = tape.maps.height(), w = tape.maps.width();
  Real const msm_factor = scale * Real(2.0 / double(tape.selected));

  CoilMaps<Real> g_maps(nc, h, w);
  Image<Real> g_denoised(h, w);
  for (int k = 0; k < nc; ++k) {
    Image<Real> g_s = tape.residual.coils[k];
    for (auto &v : g_s.data) v *= msm_factor;
    Image<Real> const g_u = ad::fft2_unitary_backward(g_s);  // u_k = Ĉ_k ⊙ x
    ad::multiply_backward(tape.maps.coils[k], tape.denoised, g_u, &g_maps.coils[k], &g_denoised);
  }
  Image<Real> const g_combined = denoiser_backward(model, tape.denoiser, g_denoised);
  for (int k = 0; k < nc; ++k) {
    // combined = Σ_k conj(Ĉ_k) ⊙ F^H s_t,k
    ad::conj_multiply_backward(tape.maps.coils[k], tape.st_images[k], g_combined, &g_maps.coils[k],
                               static_cast<Image<Real> *>(nullptr));
  }
  if (tape.lambda > 0) {
    Real const f = scale * Real(2.0 * tape.lambda / (double(h) * w * nc));
    for (int k = 0; k < nc; ++k) {
      auto const &c = tape.maps.coils[k];
      auto &g = g_maps.coils[k];
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (y + 1 < h) {
            auto const d = f * (c(y + 1, x) - c(y, x));
            g(y + 1, x) += d;
            g(y, x) -= d;
          }
          if (x + 1 < w) {
            auto const d = f * (c(y, x + 1) - c(y, x));
            g(y, x + 1) += d;
            g(y, x) -= d;
          }
        }
      }
    }
  }
  csm_backward(model, tape.csm, g_maps);
}

struct TrainConfig {
  double lambda = 1000.0;
  double learning_rate = 1e-3;
  std::int64_t iterations = 5000;
  int batch_size = 1;
  NoiseSchedule schedule;           // σ drawn log-uniform on [σ_min, σ_max]
  std::uint64_t seed = 0;
  std::int64_t log_every = 100;
  std::int64_t checkpoint_every = 1000;

  void validate() const;
};

struct TrainLogRow {
  std::int64_t iteration = 0;
  double msm = 0, csm = 0, total = 0, sigma = 0;
};

struct TrainHooks {
  /// Called with each logged row.
  std::function<void(TrainLogRow const &)> on_log;
  /// Called every checkpoint_every iterations and after the last one, with the
  /// number of completed iterations.
  std::function<void(std::int64_t, Model<float> const &, AdamState<float> const &)> on_checkpoint;
};

/// Per-iteration losses, batch-averaged.
using TrainHistory = std::vector<TrainLogRow>;

/// Joint Adam training of θ and φ. Runs iterations [start_iteration, config.iterations);
/// every random draw is derived from (config.seed, iteration), so a resumed run
/// continues exactly where a checkpoint left off. The data is a span of
/// TrainingView: the training path cannot reach ground-truth images or true maps.
/// Throws NumericError on a non-finite loss.
TrainHistory train(std::span<TrainingView const> data, TrainConfig const &config, Model<float> &model,
                   AdamState<float> &adam, std::int64_t start_iteration = 0, TrainHooks const &hooks = {});

}  // namespace cmsm
