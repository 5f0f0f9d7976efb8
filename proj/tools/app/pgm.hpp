#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cmsm/binary_io.hpp"
#include "cmsm/metrics.hpp"
#include "cmsm/types.hpp"

namespace cmsm::app {

/// Binary 16-bit PGM: P5 header, maxval 65535, big-endian samples scaled so
/// the largest value maps to 65535. An all-zero image stays zero.
[[nodiscard]] std::vector<std::uint8_t> pgm_bytes(std::vector<double> const &values, int height, int width);

template <std::floating_point Real>
void write_pgm(std::filesystem::path const &path, Image<Real> const &image) {
  io::write_file_atomic(path, pgm_bytes(magnitude(image), image.height, image.width));
}

}  // namespace cmsm::app
