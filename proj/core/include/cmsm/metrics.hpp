#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cmsm/types.hpp"

namespace cmsm {

/// Magnitude of each pixel, in double precision.
template <std::floating_point Real>
std::vector<double> magnitude(Image<Real> const &img) {
  std::vector<double> m(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) m[i] = std::abs(std::complex<double>(img.data[i]));
  return m;
}

/// PSNR of magnitude images, peak = max |reference|. Identical images give +inf.
/// Throws std::invalid_argument for an all-zero reference.
[[nodiscard]] double psnr(std::vector<double> const &reference, std::vector<double> const &estimate);

struct SsimOptions {
  int window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Single-scale SSIM of magnitude images over the valid (fully windowed) region,
/// dynamic range = max |reference|.
[[nodiscard]] double ssim(std::vector<double> const &reference, std::vector<double> const &estimate, int height, int width,
                          SsimOptions const &options = {});

template <std::floating_point Real>
double psnr(Image<Real> const &reference, Image<Real> const &estimate) {
  if (!reference.same_shape(estimate)) throw ShapeError("psnr: shape mismatch");
  return psnr(magnitude(reference), magnitude(estimate));
}

template <std::floating_point Real>
double ssim(Image<Real> const &reference, Image<Real> const &estimate, SsimOptions const &options = {}) {
  if (!reference.same_shape(estimate)) throw ShapeError("ssim: shape mismatch");
  return ssim(magnitude(reference), magnitude(estimate), reference.height, reference.width, options);
}

struct MetricReport {
  std::string method;
  double acceleration = 0;
  std::uint64_t seed = 0;
  double psnr_db = 0;
  double ssim = 0;
};

/// "method,R,seed,psnr_db,ssim" header plus one line per report.
[[nodiscard]] std::string metrics_csv(std::vector<MetricReport> const &reports);
/// Parses what metrics_csv writes; throws DataError on malformed rows.
[[nodiscard]] std::vector<MetricReport> parse_metrics_csv(std::string const &text);

}  // namespace cmsm
