#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cmsm/autodiff.hpp"
#include "cmsm/conv.hpp"
#include "cmsm/operators.hpp"
#include "cmsm/params.hpp"
#include "cmsm/schedule.hpp"

namespace cmsm {

/// Architecture of both networks plus the noise schedule they were trained for.
struct ModelSpec {
  int n_coils = 4;
  ConvNetSpec denoiser;
  ConvNetSpec csm;
  NoiseSchedule schedule;

  /// Denoiser 3→32→32→32→2 (residual), CSM net 2n→32→32→2n.
  static ModelSpec defaults(int n_coils, int width = 32);
  void validate() const;

  bool operator==(ModelSpec const &) const = default;
};

/// Denoiser D_θ and CSM predictor f_φ sharing one parameter store.
/// Parameter names are prefixed "denoiser." and "csm.".
template <std::floating_point Real>
class Model {
public:
  Model() = default;
  explicit Model(ModelSpec spec, std::uint64_t seed = 0) : spec_(std::move(spec)) {
    spec_.validate();
    denoiser_ = ConvNet<Real>(spec_.denoiser, params_, "denoiser");
    csm_ = ConvNet<Real>(spec_.csm, params_, "csm");
    denoiser_.init(params_, derive_seed(seed, {101}));
    csm_.init(params_, derive_seed(seed, {102}));
  }

  [[nodiscard]] ModelSpec const &spec() const { return spec_; }
  [[nodiscard]] ParamStore<Real> &params() { return params_; }
  [[nodiscard]] ParamStore<Real> const &params() const { return params_; }
  [[nodiscard]] ConvNet<Real> const &denoiser_net() const { return denoiser_; }
  [[nodiscard]] ConvNet<Real> const &csm_net() const { return csm_; }

  /// True for parameters of the CSM predictor (φ), false for the denoiser (θ).
  [[nodiscard]] static bool is_csm_param(std::string const &name) { return name.rfind("csm.", 0) == 0; }

  void zero_parameters() {
    for (auto &p : params_) std::fill(p.values.begin(), p.values.end(), Real(0));
  }

private:
  ModelSpec spec_;
  ParamStore<Real> params_;
  ConvNet<Real> denoiser_;
  ConvNet<Real> csm_;
};

// ---- denoiser ---------------------------------------------------------------

template <std::floating_point Real>
struct DenoiserTape {
  ConvTape<Real> net;
  Real c_in = 0, c_out = 0;
  int height = 0, width = 0;
  bool recorded = false;
};

/// Input scale 1/sqrt(1+σ²) keeps the network input O(1) at every noise level;
/// the correction is scaled back by sqrt(1+σ²).
template <std::floating_point Real>
Real denoiser_input_scale(Real sigma) { return Real(1) / std::sqrt(Real(1) + sigma * sigma); }

/// D_θ(x; σ): channels (Re x, Im x) scaled by the input scale plus a constant log σ
/// channel go through the conv net; with the residual flag the scaled network output is
/// added to x, so all-zero weights give the identity map.
template <std::floating_point Real>
Image<Real> denoiser_forward(Image<Real> const &x, Real sigma, Model<Real> const &model, DenoiserTape<Real> *tape = nullptr) {
  if (!(sigma > 0)) throw std::invalid_argument("denoiser_forward: sigma must be positive");
  auto const &net = model.denoiser_net();
  Real const c_in = denoiser_input_scale(sigma);
  Real const c_out = Real(1) / c_in;
  Tensor<Real> in(3, x.height, x.width);
  Real const log_sigma = std::log(sigma);
  for (std::size_t i = 0; i < x.size(); ++i) {
    in.channel(0)[i] = c_in * x.data[i].real();
    in.channel(1)[i] = c_in * x.data[i].imag();
    in.channel(2)[i] = log_sigma;
  }
  ConvTape<Real> *net_tape = tape ? &tape->net : nullptr;
  Tensor<Real> out = net.forward(model.params(), in, net_tape);
  if (tape) {
    tape->c_in = c_in;
    tape->c_out = c_out;
    tape->height = x.height;
    tape->width = x.width;
    tape->recorded = true;
  }
  Image<Real> y(x.height, x.width);
  bool const residual = model.spec().denoiser.residual;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::complex<Real> const d(out.channel(0)[i], out.channel(1)[i]);
    y.data[i] = (residual ? x.data[i] : std::complex<Real>{}) + c_out * d;
  }
  return y;
}

/// Accumulates θ gradients; returns the gradient w.r.t. the noisy input x.
template <std::floating_point Real>
Image<Real> denoiser_backward(Model<Real> &model, DenoiserTape<Real> const &tape, Image<Real> const &grad_out) {
  if (!tape.recorded) throw TapeError("denoiser_backward: no recorded forward pass");
  Tensor<Real> g(2, tape.height, tape.width);
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    g.channel(0)[i] = tape.c_out * grad_out.data[i].real();
    g.channel(1)[i] = tape.c_out * grad_out.data[i].imag();
  }
  Tensor<Real> gin = model.denoiser_net().backward(model.params(), tape.net, std::move(g));
  Image<Real> gx(tape.height, tape.width);
  bool const residual = model.spec().denoiser.residual;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    gx.data[i] = (residual ? grad_out.data[i] : std::complex<Real>{}) +
                 tape.c_in * std::complex<Real>(gin.channel(0)[i], gin.channel(1)[i]);
  }
  return gx;
}

// ---- CSM predictor ----------------------------------------------------------

template <std::floating_point Real>
struct CsmTape {
  ConvTape<Real> net;
  CoilMaps<Real> raw;  // network output before RSS normalization
  bool recorded = false;
};

/// Ĉ = rss_normalize(f_φ(F^H s_ACS)). Input images are scaled by the inverse of their
/// peak RSS magnitude, so the prediction does not depend on the data scale.
template <std::floating_point Real>
CoilMaps<Real> csm_forward(std::vector<Image<Real>> const &acs_images, Model<Real> const &model, CsmTape<Real> *tape = nullptr) {
  int const nc = model.spec().n_coils;
  if (static_cast<int>(acs_images.size()) != nc) {
    throw ShapeError("csm_forward: expected " + std::to_string(nc) + " coil images, got " + std::to_string(acs_images.size()));
  }
  int const h = acs_images.front().height, w = acs_images.front().width;
  for (auto const &img : acs_images) {
    if (img.height != h || img.width != w) throw ShapeError("csm_forward: coil image shape mismatch");
  }
  std::size_t const n = static_cast<std::size_t>(h) * w;
  Real peak = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Real ss = 0;
    for (auto const &img : acs_images) ss += std::norm(img.data[i]);
    peak = std::max(peak, std::sqrt(ss));
  }
  Real const scale = peak > Real(0) ? Real(1) / peak : Real(1);
  Tensor<Real> in(2 * nc, h, w);
  for (int k = 0; k < nc; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      in.channel(2 * k)[i] = scale * acs_images[k].data[i].real();
      in.channel(2 * k + 1)[i] = scale * acs_images[k].data[i].imag();
    }
  }
  Tensor<Real> out = model.csm_net().forward(model.params(), in, tape ? &tape->net : nullptr);
  bool const residual = model.spec().csm.residual;
  CoilMaps<Real> raw(nc, h, w);
  for (int k = 0; k < nc; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      std::complex<Real> v(out.channel(2 * k)[i], out.channel(2 * k + 1)[i]);
      if (residual) v += std::complex<Real>(in.channel(2 * k)[i], in.channel(2 * k + 1)[i]);
      raw.coils[k].data[i] = v;
    }
  }
  auto normalized = rss_normalize(raw).maps;
  if (tape) {
    tape->raw = std::move(raw);
    tape->recorded = true;
  }
  return normalized;
}

/// Accumulates φ gradients from the gradient w.r.t. the normalized maps.
template <std::floating_point Real>
void csm_backward(Model<Real> &model, CsmTape<Real> const &tape, CoilMaps<Real> const &grad_maps) {
  if (!tape.recorded) throw TapeError("csm_backward: no recorded forward pass");
  CoilMaps<Real> const g_raw = ad::rss_normalize_backward(tape.raw, grad_maps);
  int const nc = g_raw.n_coils();
  Tensor<Real> g(2 * nc, g_raw.height(), g_raw.width());
  for (int k = 0; k < nc; ++k) {
    for (std::size_t i = 0; i < g_raw.coils[k].size(); ++i) {
      g.channel(2 * k)[i] = g_raw.coils[k].data[i].real();
      g.channel(2 * k + 1)[i] = g_raw.coils[k].data[i].imag();
    }
  }
  (void)model.csm_net().backward(model.params(), tape.net, std::move(g));
}

}  // namespace cmsm
