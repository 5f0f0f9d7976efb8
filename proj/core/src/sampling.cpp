#include "cmsm/sampling.hpp"

namespace cmsm {

void SamplerConfig::validate() const {
  if (ensemble < 1) throw std::invalid_argument("SamplerConfig: ensemble size must be >= 1");
  if (!(step_size > 0)) throw std::invalid_argument("SamplerConfig: step size must be > 0");
  if (steps < 2) throw std::invalid_argument("SamplerConfig: need at least 2 steps");
  if (mask_acceleration < 1) throw std::invalid_argument("SamplerConfig: mask acceleration must be >= 1");
  if (csm_refresh_every < 0) throw std::invalid_argument("SamplerConfig: csm_refresh_every must be >= 0");
}

std::vector<Mask> draw_ensemble_masks(int w, double acceleration, int acs_width, int height, int width, std::uint64_t seed) {
  if (w < 1) throw std::invalid_argument("draw_ensemble_masks: w must be >= 1");
  std::vector<Mask> masks;
  masks.reserve(static_cast<std::size_t>(w));
  for (int i = 0; i < w; ++i) {
    masks.push_back(make_mask(height, width, acceleration, acs_width, derive_seed(seed, {static_cast<std::uint64_t>(i)})));
  }
  return masks;
}

WeightMap build_weight_map(std::vector<Mask> const &masks) {
  if (masks.empty()) throw std::invalid_argument("build_weight_map: no masks");
  WeightMap wm{masks.front().height, masks.front().width, {}};
  std::vector<int> count(static_cast<std::size_t>(wm.width), 0);
  for (auto const &m : masks) {
    if (!m.same_grid(masks.front())) throw ShapeError("build_weight_map: mask shape mismatch");
    for (int x = 0; x < wm.width; ++x) count[x] += m.selected(x) ? 1 : 0;
  }
  wm.weights.resize(static_cast<std::size_t>(wm.height) * wm.width);
  for (int y = 0; y < wm.height; ++y) {
    for (int x = 0; x < wm.width; ++x) wm.weights[static_cast<std::size_t>(y) * wm.width + x] = 1.0 / std::max(count[x], 1);
  }
  return wm;
}

}  // namespace cmsm
