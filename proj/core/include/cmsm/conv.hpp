#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cmsm/errors.hpp"
#include "cmsm/params.hpp"
#include "cmsm/rng.hpp"

namespace cmsm {

enum class Activation { relu, identity };

struct ConvLayerSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  Activation activation = Activation::relu;
  int dilation = 1;
  /// Adds a learned linear function of the per-channel spatial means of the input,
  /// the same at every pixel (an out × in "context" matrix, no kernel).
  bool global_context = false;

  bool operator==(ConvLayerSpec const &) const = default;
};

struct ConvNetSpec {
  std::vector<ConvLayerSpec> layers;
  bool residual = false;

  /// 3×3 layers through the given channel counts, relu between layers and
  /// identity on the last one. `dilations` is empty (all 1) or one per layer.
  static ConvNetSpec chain(std::vector<int> const &channels, bool residual, std::vector<int> const &dilations = {});

  [[nodiscard]] int in_channels() const { return layers.empty() ? 0 : layers.front().in_channels; }
  [[nodiscard]] int out_channels() const { return layers.empty() ? 0 : layers.back().out_channels; }
  /// Throws std::invalid_argument on a broken channel chain, even kernel or dilation < 1.
  void validate() const;

  bool operator==(ConvNetSpec const &) const = default;
};

/// Channel-major real feature map (C × H × W).
template <std::floating_point Real>
struct Tensor {
  int channels = 0, height = 0, width = 0;
  std::vector<Real> data;

  Tensor() = default;
  Tensor(int c, int h, int w) : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, Real(0)) {}

  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  [[nodiscard]] Real *channel(int c) { return data.data() + plane() * c; }
  [[nodiscard]] Real const *channel(int c) const { return data.data() + plane() * c; }
};

/// Activations recorded during a forward pass, consumed by backward.
template <std::floating_point Real>
struct ConvTape {
  std::vector<Tensor<Real>> inputs;   // input of each layer
  std::vector<Tensor<Real>> outputs;  // post-activation output of each layer
  bool recorded = false;
};

namespace detail {

template <std::floating_point Real>
void conv_forward(Tensor<Real> const &in, Real const *weight, Real const *bias, int kernel, int dilation, Tensor<Real> &out) {
  int const h = in.height, w = in.width, pad = kernel / 2;
  for (int o = 0; o < out.channels; ++o) {
    Real *dst_plane = out.channel(o);
    std::fill(dst_plane, dst_plane + out.plane(), bias[o]);
    for (int i = 0; i < in.channels; ++i) {
      Real const *src_plane = in.channel(i);
      Real const *wk = weight + (static_cast<std::size_t>(o) * in.channels + i) * kernel * kernel;
      for (int ky = 0; ky < kernel; ++ky) {
        int const dy = (ky - pad) * dilation;
        int const y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        for (int kx = 0; kx < kernel; ++kx) {
          int const dx = (kx - pad) * dilation;
          int const x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          Real const wv = wk[ky * kernel + kx];
          for (int y = y0; y < y1; ++y) {
            Real const *src = src_plane + static_cast<std::size_t>(y + dy) * w + dx;
            Real *dst = dst_plane + static_cast<std::size_t>(y) * w;
            for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
          }
        }
      }
    }
  }
}

// grad_out is the gradient w.r.t. the pre-activation conv output.
template <std::floating_point Real>
void conv_backward(Tensor<Real> const &in, Real const *weight, int kernel, int dilation, Tensor<Real> const &grad_out,
                   Real *grad_weight, Real *grad_bias, Tensor<Real> *grad_in) {
  int const h = in.height, w = in.width, pad = kernel / 2;
  for (int o = 0; o < grad_out.channels; ++o) {
    Real const *g_plane = grad_out.channel(o);
    Real gb = 0;
    for (std::size_t p = 0; p < grad_out.plane(); ++p) gb += g_plane[p];
    grad_bias[o] += gb;
    for (int i = 0; i < in.channels; ++i) {
      Real const *src_plane = in.channel(i);
      std::size_t const wofs = (static_cast<std::size_t>(o) * in.channels + i) * kernel * kernel;
      for (int ky = 0; ky < kernel; ++ky) {
        int const dy = (ky - pad) * dilation;
        int const y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        for (int kx = 0; kx < kernel; ++kx) {
          int const dx = (kx - pad) * dilation;
          int const x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          Real const wv = weight[wofs + ky * kernel + kx];
          Real acc = 0;
          Real *gin_plane = grad_in ? grad_in->channel(i) : nullptr;
          for (int y = y0; y < y1; ++y) {
            Real const *src = src_plane + static_cast<std::size_t>(y + dy) * w + dx;
            Real const *g = g_plane + static_cast<std::size_t>(y) * w;
            for (int x = x0; x < x1; ++x) acc += g[x] * src[x];
            if (gin_plane) {
              Real *gi = gin_plane + static_cast<std::size_t>(y + dy) * w + dx;
              for (int x = x0; x < x1; ++x) gi[x] += wv * g[x];
            }
          }
          grad_weight[wofs + ky * kernel + kx] += acc;
        }
      }
    }
  }
}

template <std::floating_point Real>
std::vector<Real> channel_means(Tensor<Real> const &x) {
  std::vector<Real> m(static_cast<std::size_t>(x.channels), Real(0));
  for (int c = 0; c < x.channels; ++c) {
    Real const *src = x.channel(c);
    for (std::size_t p = 0; p < x.plane(); ++p) m[c] += src[p];
    m[c] /= Real(x.plane());
  }
  return m;
}

}  // namespace detail

/// Plain stack of zero-padded convolutions. Parameters live in a ParamStore; the
/// net only remembers where its weights are.
template <std::floating_point Real>
class ConvNet {
public:
  ConvNet() = default;
  ConvNet(ConvNetSpec spec, ParamStore<Real> &store, std::string const &prefix) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
      auto const &L = spec_.layers[l];
      std::string const base = prefix + ".conv" + std::to_string(l);
      weight_.push_back(store.add(base + ".weight", {L.out_channels, L.in_channels, L.kernel, L.kernel}));
      bias_.push_back(store.add(base + ".bias", {L.out_channels}));
      context_.push_back(L.global_context ? store.add(base + ".context", {L.out_channels, L.in_channels}) : kNone);
    }
  }

  [[nodiscard]] ConvNetSpec const &spec() const { return spec_; }

  /// He-uniform weights, zero biases.
  void init(ParamStore<Real> &store, std::uint64_t seed) const {
    Rng rng(seed);
    for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
      auto const &L = spec_.layers[l];
      double const bound = std::sqrt(6.0 / (double(L.in_channels) * L.kernel * L.kernel));
      for (auto &v : store[weight_[l]].values) v = Real(rng.uniform(-bound, bound));
      if (context_[l] != kNone) {
        double const cb = std::sqrt(6.0 / double(L.in_channels));
        for (auto &v : store[context_[l]].values) v = Real(rng.uniform(-cb, cb));
      }
      std::fill(store[bias_[l]].values.begin(), store[bias_[l]].values.end(), Real(0));
    }
  }

  Tensor<Real> forward(ParamStore<Real> const &store, Tensor<Real> const &in, ConvTape<Real> *tape) const {
    if (in.channels != spec_.in_channels()) throw ShapeError("ConvNet: input channel mismatch");
    if (tape) {
      tape->inputs.clear();
      tape->outputs.clear();
      tape->recorded = true;
    }
    Tensor<Real> x = in;
    for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
      auto const &L = spec_.layers[l];
      Tensor<Real> y(L.out_channels, in.height, in.width);
      detail::conv_forward(x, store[weight_[l]].values.data(), store[bias_[l]].values.data(), L.kernel, L.dilation, y);
      if (context_[l] != kNone) {
        auto const means = detail::channel_means(x);
        auto const &v = store[context_[l]].values;
        for (int o = 0; o < L.out_channels; ++o) {
          Real add = 0;
          for (int c = 0; c < L.in_channels; ++c) add += v[static_cast<std::size_t>(o) * L.in_channels + c] * means[c];
          Real *dst = y.channel(o);
          for (std::size_t p = 0; p < y.plane(); ++p) dst[p] += add;
        }
      }
      if (L.activation == Activation::relu) {
        for (auto &v : y.data) v = v > Real(0) ? v : Real(0);
      }
      if (tape) {
        tape->inputs.push_back(std::move(x));
        tape->outputs.push_back(y);
      }
      x = std::move(y);
    }
    return x;
  }

  /// Accumulates parameter gradients; returns the gradient w.r.t. the input.
  Tensor<Real> backward(ParamStore<Real> &store, ConvTape<Real> const &tape, Tensor<Real> grad) const {
    if (!tape.recorded || tape.inputs.size() != spec_.layers.size()) {
      throw TapeError("ConvNet::backward: no recorded forward pass");
    }
    for (std::size_t l = spec_.layers.size(); l-- > 0;) {
      auto const &L = spec_.layers[l];
      if (L.activation == Activation::relu) {
        auto const &out = tape.outputs[l].data;
        for (std::size_t i = 0; i < grad.data.size(); ++i) {
          if (!(out[i] > Real(0))) grad.data[i] = 0;
        }
      }
      auto const &in = tape.inputs[l];
      Tensor<Real> grad_in(in.channels, in.height, in.width);
      detail::conv_backward(in, store[weight_[l]].values.data(), L.kernel, L.dilation, grad, store[weight_[l]].grad.data(),
                            store[bias_[l]].grad.data(), &grad_in);
      if (context_[l] != kNone) {
        auto const means = detail::channel_means(in);
        auto const &v = store[context_[l]].values;
        auto &gv = store[context_[l]].grad;
        for (int o = 0; o < L.out_channels; ++o) {
          Real const *g = grad.channel(o);
          Real total = 0;
          for (std::size_t p = 0; p < grad.plane(); ++p) total += g[p];
          for (int c = 0; c < L.in_channels; ++c) {
            std::size_t const idx = static_cast<std::size_t>(o) * L.in_channels + c;
            gv[idx] += total * means[c];
            Real const share = v[idx] * total / Real(in.plane());
            Real *gi = grad_in.channel(c);
            for (std::size_t p = 0; p < in.plane(); ++p) gi[p] += share;
          }
        }
      }
      grad = std::move(grad_in);
    }
    return grad;
  }

private:
  static constexpr std::size_t kNone = std::size_t(-1);
  ConvNetSpec spec_;
  std::vector<std::size_t> weight_;
  std::vector<std::size_t> bias_;
  std::vector<std::size_t> context_;
};

}  // namespace cmsm
