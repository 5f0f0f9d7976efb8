#include "cmsm/types.hpp"

#include <algorithm>

namespace cmsm {

Mask Mask::full(int h, int w) {
  Mask m(h, w, w);
  std::fill(m.columns.begin(), m.columns.end(), 1);
  return m;
}

Mask Mask::acs_only(int h, int w, int acs) {
  Mask m(h, w, acs);
  for (int x = m.acs_begin(); x < m.acs_end(); ++x) m.columns[static_cast<std::size_t>(x)] = 1;
  return m;
}

int Mask::count() const {
  return static_cast<int>(std::count_if(columns.begin(), columns.end(), [](auto b) { return b != 0; }));
}

Mask Mask::intersect(Mask const &o) const {
  if (!same_grid(o)) throw ShapeError("mask intersection: grid mismatch");
  Mask m(height, width, std::min(acs_width, o.acs_width));
  for (int x = 0; x < width; ++x) {
    m.columns[static_cast<std::size_t>(x)] = (selected(x) && o.selected(x)) ? 1 : 0;
  }
  return m;
}

}  // namespace cmsm
