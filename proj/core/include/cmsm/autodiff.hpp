#pragma once

// Reverse-mode rules for the complex pieces of the training graph.
//
// Convention: for a real loss L of complex z, the gradient is
//   g = ∂L/∂Re z + i ∂L/∂Im z,
// so dL = Re(conj(g) dz). Under it a complex-linear map w = A z pulls back
// as g_z = A^H g_w.

#include <complex>
#include <vector>

#include "cmsm/fft.hpp"
#include "cmsm/operators.hpp"

namespace cmsm::ad {

/// ∇ of ‖x‖² for a real array.
template <std::floating_point Real>
std::vector<Real> squared_norm_grad(std::vector<Real> const &x) {
  std::vector<Real> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = Real(2) * x[i];
  return g;
}

/// ∇ of ‖z‖² for a complex image.
template <std::floating_point Real>
Image<Real> squared_norm_grad(Image<Real> const &z) {
  Image<Real> g = z;
  for (auto &v : g.data) v *= Real(2);
  return g;
}

/// Pull back through w = fft2_unitary(p).
template <std::floating_point Real>
Image<Real> fft2_unitary_backward(Image<Real> const &grad_w) {
  return ifft2_unitary(grad_w);
}

/// Pull back through w = ifft2_unitary(p).
template <std::floating_point Real>
Image<Real> ifft2_unitary_backward(Image<Real> const &grad_w) {
  return fft2_unitary(grad_w);
}

/// w = a ⊙ b: accumulates g_a += g_w ⊙ conj(b) and g_b += g_w ⊙ conj(a) (either may be null).
template <std::floating_point Real>
void multiply_backward(Image<Real> const &a, Image<Real> const &b, Image<Real> const &grad_w, Image<Real> *grad_a,
                       Image<Real> *grad_b) {
  for (std::size_t i = 0; i < grad_w.size(); ++i) {
    if (grad_a) grad_a->data[i] += grad_w.data[i] * std::conj(b.data[i]);
    if (grad_b) grad_b->data[i] += grad_w.data[i] * std::conj(a.data[i]);
  }
}

/// w = conj(a) ⊙ b: accumulates g_a += conj(g_w) ⊙ b and g_b += g_w ⊙ a.
template <std::floating_point Real>
void conj_multiply_backward(Image<Real> const &a, Image<Real> const &b, Image<Real> const &grad_w, Image<Real> *grad_a,
                            Image<Real> *grad_b) {
  for (std::size_t i = 0; i < grad_w.size(); ++i) {
    if (grad_a) grad_a->data[i] += std::conj(grad_w.data[i]) * b.data[i];
    if (grad_b) grad_b->data[i] += grad_w.data[i] * a.data[i];
  }
}

/// Pull back through rss_normalize: c_k = r_k / ρ with ρ = sqrt(Σ_j |r_j|²).
/// Clamped pixels (ρ below the floor) treat ρ as the constant floor.
template <std::floating_point Real>
CoilMaps<Real> rss_normalize_backward(CoilMaps<Real> const &raw, CoilMaps<Real> const &grad_out) {
  CoilMaps<Real> g(raw.n_coils(), raw.height(), raw.width());
  std::size_t const n = raw.coils.empty() ? 0 : raw.coils.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    Real ss = 0;
    for (auto const &c : raw.coils) ss += std::norm(c.data[i]);
    Real const rho = std::sqrt(ss);
    if (rho < Real(kRssFloor)) {
      for (int k = 0; k < raw.n_coils(); ++k) g.coils[k].data[i] = grad_out.coils[k].data[i] / Real(kRssFloor);
      continue;
    }
    Real alpha = 0;
    for (int k = 0; k < raw.n_coils(); ++k) alpha += std::real(std::conj(grad_out.coils[k].data[i]) * raw.coils[k].data[i]);
    Real const inv = Real(1) / rho;
    Real const inv3 = inv * inv * inv;
    for (int k = 0; k < raw.n_coils(); ++k) {
      g.coils[k].data[i] = grad_out.coils[k].data[i] * inv - raw.coils[k].data[i] * (alpha * inv3);
    }
  }
  return g;
}

}  // namespace cmsm::ad
