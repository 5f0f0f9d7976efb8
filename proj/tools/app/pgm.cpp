#include "pgm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cmsm::app {

std::vector<std::uint8_t> pgm_bytes(std::vector<double> const &values, int height, int width) {
  if (height < 1 || width < 1 || values.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("pgm: size does not match shape");
  }
  std::string const header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + 2 * values.size());
  double const peak = *std::max_element(values.begin(), values.end());
  double const scale = peak > 0 ? 65535.0 / peak : 0.0;
  for (double v : values) {
    auto const q = static_cast<std::uint16_t>(std::clamp(std::lround(v * scale), 0L, 65535L));
    out.push_back(static_cast<std::uint8_t>(q >> 8));
    out.push_back(static_cast<std::uint8_t>(q & 0xff));
  }
  return out;
}

}  // namespace cmsm::app
