#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmsm {

template <std::floating_point Real>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<Real> values;
  std::vector<Real> grad;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  bool operator==(Param const &) const = default;
};

/// Ordered, uniquely named set of real parameter arrays with paired gradients.
template <std::floating_point Real>
class ParamStore {
public:
  std::size_t add(std::string name, std::vector<int> shape) {
    if (index_of(name) != npos) throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw std::invalid_argument("ParamStore: non-positive dimension in '" + name + "'");
      n *= static_cast<std::size_t>(d);
    }
    params_.push_back({std::move(name), std::move(shape), std::vector<Real>(n, Real(0)), std::vector<Real>(n, Real(0))});
    return params_.size() - 1;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  [[nodiscard]] std::size_t index_of(std::string const &name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name == name) return i;
    }
    return npos;
  }

  [[nodiscard]] Param<Real> &operator[](std::size_t i) { return params_[i]; }
  [[nodiscard]] Param<Real> const &operator[](std::size_t i) const { return params_[i]; }
  [[nodiscard]] Param<Real> &at(std::string const &name) {
    auto i = index_of(name);
    if (i == npos) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
    return params_[i];
  }
  [[nodiscard]] Param<Real> const &at(std::string const &name) const {
    return const_cast<ParamStore *>(this)->at(name);
  }

  [[nodiscard]] std::size_t size() const { return params_.size(); }
  [[nodiscard]] std::size_t total_values() const {
    std::size_t n = 0;
    for (auto const &p : params_) n += p.size();
    return n;
  }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad() {
    for (auto &p : params_) std::fill(p.grad.begin(), p.grad.end(), Real(0));
  }

  bool operator==(ParamStore const &) const = default;

private:
  std::vector<Param<Real>> params_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <std::floating_point Real>
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;

  AdamState() = default;
  AdamState(AdamConfig c, ParamStore<Real> const &params) : config(c) {
    for (auto const &p : params) {
      m.emplace_back(p.size(), Real(0));
      v.emplace_back(p.size(), Real(0));
    }
  }
  bool operator==(AdamState const &) const = default;
};

/// One bias-corrected Adam update using the gradients currently in `params`.
template <std::floating_point Real>
void adam_step(ParamStore<Real> &params, AdamState<Real> &state) {
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state does not match parameters");
  ++state.step;
  auto const &c = state.config;
  double const bc1 = 1.0 - std::pow(c.beta1, double(state.step));
  double const bc2 = 1.0 - std::pow(c.beta2, double(state.step));
  Real const b1 = Real(c.beta1), b2 = Real(c.beta2);
  Real const step = Real(c.learning_rate / bc1);
  Real const inv_bc2 = Real(1.0 / bc2);
  Real const eps = Real(c.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto &p = params[i];
    auto &m = state.m[i];
    auto &v = state.v[i];
    if (m.size() != p.size()) throw std::invalid_argument("adam_step: moment shape mismatch for " + p.name);
    for (std::size_t j = 0; j < p.size(); ++j) {
      Real const g = p.grad[j];
      m[j] = b1 * m[j] + (Real(1) - b1) * g;
      v[j] = b2 * v[j] + (Real(1) - b2) * g * g;
      p.values[j] -= step * m[j] / (std::sqrt(v[j] * inv_bc2) + eps);
    }
  }
}

}  // namespace cmsm
