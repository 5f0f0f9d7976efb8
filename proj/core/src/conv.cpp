#include "cmsm/conv.hpp"

#include <stdexcept>

namespace cmsm {

ConvNetSpec ConvNetSpec::chain(std::vector<int> const &channels, bool residual, std::vector<int> const &dilations) {
  if (channels.size() < 2) throw std::invalid_argument("ConvNetSpec::chain: need at least two channel counts");
  if (!dilations.empty() && dilations.size() + 1 != channels.size()) {
    throw std::invalid_argument("ConvNetSpec::chain: one dilation per layer");
  }
  ConvNetSpec spec;
  spec.residual = residual;
  for (std::size_t i = 0; i + 1 < channels.size(); ++i) {
    bool const last = i + 2 == channels.size();
    spec.layers.push_back({channels[i], channels[i + 1], 3, last ? Activation::identity : Activation::relu,
                           dilations.empty() ? 1 : dilations[i]});
  }
  return spec;
}

void ConvNetSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("ConvNetSpec: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto const &L = layers[i];
    if (L.in_channels <= 0 || L.out_channels <= 0) throw std::invalid_argument("ConvNetSpec: non-positive channels");
    if (L.kernel <= 0 || L.kernel % 2 == 0) throw std::invalid_argument("ConvNetSpec: kernel must be odd");
    if (L.dilation < 1) throw std::invalid_argument("ConvNetSpec: dilation must be >= 1");
    if (i > 0 && layers[i - 1].out_channels != L.in_channels) {
      throw std::invalid_argument("ConvNetSpec: layer " + std::to_string(i) + " input channels do not match previous output");
    }
  }
}

}  // namespace cmsm
