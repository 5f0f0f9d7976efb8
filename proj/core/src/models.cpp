#include "cmsm/models.hpp"

namespace cmsm {

ModelSpec ModelSpec::defaults(int n_coils, int width) {
  ModelSpec s;
  s.n_coils = n_coils;
  s.denoiser = ConvNetSpec::chain({3, width, width, width, 2}, true);
  s.csm = ConvNetSpec::chain({2 * n_coils, width, width, 2 * n_coils}, false);
  return s;
}

void ModelSpec::validate() const {
  if (n_coils < 1) throw std::invalid_argument("ModelSpec: n_coils must be >= 1");
  denoiser.validate();
  csm.validate();
  if (denoiser.in_channels() != 3 || denoiser.out_channels() != 2) {
    throw std::invalid_argument("ModelSpec: denoiser must map 3 channels to 2");
  }
  if (csm.in_channels() != 2 * n_coils || csm.out_channels() != 2 * n_coils) {
    throw std::invalid_argument("ModelSpec: CSM net must map 2*n_coils channels to 2*n_coils");
  }
  schedule.validate();
}

}  // namespace cmsm
