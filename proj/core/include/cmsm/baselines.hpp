#pragma once

#include <vector>

#include "cmsm/operators.hpp"

namespace cmsm {

/// Adjoint of the zero-filled measurements.
template <std::floating_point Real>
Image<Real> zero_filled(KSpace<Real> const &y, CoilMaps<Real> const &maps) {
  return apply_adjoint(y, maps);
}

struct TvOptions {
  double lambda = 0.002;
  int iterations = 200;     // outer proximal-gradient iterations
  int inner_iterations = 10;  // Chambolle dual iterations per prox
  double step = 1.0;        // gradient step; ‖A‖ ≤ 1 for unit-RSS maps
  double tolerance = 1e-6;  // relative change that ends the outer loop
};

struct TvResult {
  Image<double> image;
  std::vector<double> objective;  // value after each outer iteration, objective[0] at the start
  int iterations = 0;
};

/// Isotropic total variation of a complex image with forward differences.
[[nodiscard]] double total_variation(Image<double> const &x);

/// ½‖y − A x‖² + λ·TV(x).
[[nodiscard]] double tv_objective(KSpace<double> const &y, CoilMaps<double> const &maps, Image<double> const &x, double lambda);

/// argmin_u ½‖u − v‖² + weight·TV(u) by Chambolle's dual projection; `dual` (2 planes,
/// x then y differences) warm-starts the iteration and is updated in place.
[[nodiscard]] Image<double> tv_prox(Image<double> const &v, double weight, int iterations, std::vector<Image<double>> &dual);

/// Proximal-gradient TV reconstruction starting from the zero-filled image.
/// Throws NumericError if the objective increases 10 outer steps in a row.
[[nodiscard]] TvResult tv_reconstruct(KSpace<double> const &y, CoilMaps<double> const &maps, TvOptions const &options = {});

}  // namespace cmsm
