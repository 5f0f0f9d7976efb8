#include "cmsm/baselines.hpp"

#include <cmath>
#include <sstream>

namespace cmsm {

namespace {

using C = std::complex<double>;

// Forward differences, zero on the last row/column.
void gradient(Image<double> const &u, Image<double> &gx, Image<double> &gy) {
  int const h = u.height, w = u.width;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      gx(y, x) = x + 1 < w ? u(y, x + 1) - u(y, x) : C{};
      gy(y, x) = y + 1 < h ? u(y + 1, x) - u(y, x) : C{};
    }
  }
}

// Negative adjoint of gradient().
Image<double> divergence(Image<double> const &px, Image<double> const &py) {
  int const h = px.height, w = px.width;
  Image<double> d(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      C v{};
      if (x + 1 < w) v += px(y, x);
      if (x > 0) v -= px(y, x - 1);
      if (y + 1 < h) v += py(y, x);
      if (y > 0) v -= py(y - 1, x);
      d(y, x) = v;
    }
  }
  return d;
}

}  // namespace

double total_variation(Image<double> const &x) {
  Image<double> gx(x.height, x.width), gy(x.height, x.width);
  gradient(x, gx, gy);
  double tv = 0;
  for (std::size_t i = 0; i < x.size(); ++i) tv += std::sqrt(std::norm(gx.data[i]) + std::norm(gy.data[i]));
  return tv;
}

double tv_objective(KSpace<double> const &y, CoilMaps<double> const &maps, Image<double> const &x, double lambda) {
  KSpace<double> r = apply_forward(x, maps, y.mask);
  double data = 0;
  for (int k = 0; k < y.n_coils(); ++k) {
    for (std::size_t i = 0; i < r.coils[k].size(); ++i) data += std::norm(r.coils[k].data[i] - y.coils[k].data[i]);
  }
  return 0.5 * data + lambda * total_variation(x);
}

Image<double> tv_prox(Image<double> const &v, double weight, int iterations, std::vector<Image<double>> &dual) {
  int const h = v.height, w = v.width;
  if (dual.size() != 2 || !dual[0].same_shape(v)) dual = {Image<double>(h, w), Image<double>(h, w)};
  if (weight <= 0) return v;
  constexpr double tau = 0.125;
  auto &px = dual[0];
  auto &py = dual[1];
  Image<double> gx(h, w), gy(h, w), t(h, w);
  for (int it = 0; it < iterations; ++it) {
    Image<double> const d = divergence(px, py);
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = d.data[i] - v.data[i] / weight;
    gradient(t, gx, gy);
    for (std::size_t i = 0; i < t.size(); ++i) {
      double const mag = std::sqrt(std::norm(gx.data[i]) + std::norm(gy.data[i]));
      double const denom = 1.0 + tau * mag;
      px.data[i] = (px.data[i] + tau * gx.data[i]) / denom;
      py.data[i] = (py.data[i] + tau * gy.data[i]) / denom;
    }
  }
  Image<double> const d = divergence(px, py);
  Image<double> u(h, w);
  for (std::size_t i = 0; i < u.size(); ++i) u.data[i] = v.data[i] - weight * d.data[i];
  return u;
}

TvResult tv_reconstruct(KSpace<double> const &y, CoilMaps<double> const &maps, TvOptions const &opt) {
  if (!(opt.lambda > 0)) throw std::invalid_argument("tv_reconstruct: lambda must be > 0");
  if (opt.iterations < 1 || opt.inner_iterations < 1 || !(opt.step > 0)) {
    throw std::invalid_argument("tv_reconstruct: invalid iteration settings");
  }
  TvResult res;
  Image<double> x = zero_filled(y, maps);
  std::vector<Image<double>> dual;
  res.objective.push_back(tv_objective(y, maps, x, opt.lambda));
  int increases = 0;
  for (int it = 0; it < opt.iterations; ++it) {
    KSpace<double> r = apply_forward(x, maps, y.mask);
    for (int k = 0; k < y.n_coils(); ++k) {
      for (std::size_t i = 0; i < r.coils[k].size(); ++i) r.coils[k].data[i] -= y.coils[k].data[i];
    }
    Image<double> const g = apply_adjoint(r, maps);
    Image<double> v(x.height, x.width);
    for (std::size_t i = 0; i < v.size(); ++i) v.data[i] = x.data[i] - opt.step * g.data[i];
    Image<double> x_new = tv_prox(v, opt.step * opt.lambda, opt.inner_iterations, dual);

    double diff = 0, base = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      diff += std::norm(x_new.data[i] - x.data[i]);
      base += std::norm(x.data[i]);
    }
    x = std::move(x_new);
    double const f = tv_objective(y, maps, x, opt.lambda);
    if (!std::isfinite(f)) throw NumericError("tv_reconstruct: non-finite objective at iteration " + std::to_string(it));
    increases = f > res.objective.back() ? increases + 1 : 0;
    res.objective.push_back(f);
    res.iterations = it + 1;
    if (increases >= 10) {
      std::ostringstream msg;
      msg << "tv_reconstruct: objective increased for 10 consecutive iterations (iteration " << it << ", objective " << f << ")";
      throw NumericError(msg.str());
    }
    if (base > 0 && std::sqrt(diff / base) < opt.tolerance) break;
  }
  res.image = std::move(x);
  return res;
}

}  // namespace cmsm
