#include "locogan/model.hpp"

namespace locogan {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
  }
  return "none";
}

Activation parse_activation(const std::string& text) {
  if (text == "none") return Activation::none;
  if (text == "relu") return Activation::relu;
  if (text == "leaky_relu") return Activation::leaky_relu;
  if (text == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + text + "'");
}

std::vector<LayerSpec> NetworkConfig::stack() const {
  std::vector<LayerSpec> s;
  s.reserve(layers.size());
  for (const auto& l : layers) s.push_back(l.spec);
  return s;
}

bool NetworkConfig::uses_spectral_norm() const {
  return std::any_of(layers.begin(), layers.end(), [](const LayerPlan& p) { return p.spectral_norm; });
}

void NetworkConfig::validate() const {
  if (layers.empty()) throw ConfigMismatch("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerPlan& p = layers[l];
    if (!p.spec.valid()) throw ConfigMismatch("layer " + std::to_string(l + 1) + " has invalid geometry");
    if (p.coord_channels < 0 || p.coord_channels >= p.spec.in_channels)
      throw ConfigMismatch("layer " + std::to_string(l + 1) + " has an invalid coordinate channel count");
    if (l > 0 && layers[l - 1].spec.out_channels + p.coord_channels != p.spec.in_channels)
      throw ConfigMismatch("layer " + std::to_string(l + 1) + " expects " + std::to_string(p.spec.in_channels) +
                           " inputs but receives " +
                           std::to_string(layers[l - 1].spec.out_channels + p.coord_channels));
  }
}

NetworkConfig generator_config(const LatentSpec& spec, const std::vector<int>& widths, int image_channels) {
  const int coords = spec.coords.channels();
  NetworkConfig cfg;
  int in = spec.value_channels();
  for (int width : widths) {
    cfg.layers.push_back({{in + coords, width, 4, 2, 3, true}, coords, true, false, Activation::relu});
    in = width;
  }
  cfg.layers.push_back({{in + coords, image_channels, 4, 1, 3, true}, coords, false, false, Activation::tanh});
  return cfg;
}

NetworkConfig discriminator_config(int coord_channels, const std::vector<int>& widths, int image_channels,
                                   bool spectral) {
  NetworkConfig cfg;
  int in = image_channels + coord_channels;
  bool first = true;
  for (int width : widths) {
    cfg.layers.push_back({{in, width, 4, 2, 1, false}, first ? coord_channels : 0, false, spectral,
                          Activation::leaky_relu});
    in = width;
    first = false;
  }
  cfg.layers.push_back({{in, 1, 4, 1, 0, false}, first ? coord_channels : 0, false, false, Activation::none});
  return cfg;
}

}  // namespace locogan
