#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "locogan/commands.hpp"

namespace support {

using namespace locogan;

/// Default generator geometry (default widths, default latent).
inline std::vector<LayerSpec> reference_stack() { return generator_config(LatentSpec{}).stack(); }

inline LatentSpec small_spec(CoordinateMode mode = CoordinateMode::linear) {
  LatentSpec s{2, 2, {}};
  if (mode != CoordinateMode::linear) s.coords = CoordinateSpec::periodic(mode, 128, 128, 64);
  return s;
}

/// Reference kernel geometry with narrow layers; cheap enough for unit tests.
inline TrainConfig small_config(CoordinateMode mode = CoordinateMode::linear, int width = 8) {
  TrainConfig c;
  c.latent = small_spec(mode);
  c.generator = generator_config(c.latent, {width, width, width, width}, 3);
  c.discriminator = discriminator_config(c.latent.coords.channels(), {width, width, width, width}, 3, true);
  c.batch_size = 2;
  c.total_steps = 3;
  c.seed = 5;
  return c;
}

/// Fresh directory under the system temp path.
inline std::filesystem::path scratch(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto p = std::filesystem::temp_directory_path() /
                 ("locogan_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Synthetic texture: diagonal stripes times a checker, plus noise, in [-1, 1].
inline Grid<float> stripes(int h, int w, int period, double noise, std::uint64_t seed) {
  Rng rng(seed);
  Grid<float> g(3, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double s = std::sin(2 * 3.14159265358979 * x / period);
      const double c = ((x / (period / 2) + y / (period / 2)) % 2) ? 0.4 : -0.4;
      for (int ch = 0; ch < 3; ++ch)
        g.at(ch, y, x) = float(std::clamp(0.5 * s + c * (ch == 1 ? -1 : 1) + noise * rng.normal(), -1.0, 1.0));
    }
  return g;
}

/// Toy pair: a 4x4 latent through two 8-channel transposed layers to 16x16,
/// judged by a three-layer discriminator down to 1x1.
struct ToyPair {
  LatentSpec spec;
  Weights<double> gen;
  Weights<double> disc;
  std::vector<LatentImage> latents;
  std::vector<CropWindow> windows;
  std::vector<Grid<double>> real;
  std::vector<Grid<double>> coords;
};

inline ToyPair toy_pair(std::uint64_t seed, int batch = 2) {
  ToyPair t;
  t.spec = LatentSpec{2, 2, {CoordinateMode::linear, 16, 16, 0.0}};
  NetworkConfig g, d;
  g.layers.push_back({{4 + 2, 8, 4, 2, 1, true}, 2, true, false, Activation::relu});
  g.layers.push_back({{8 + 2, 3, 4, 2, 1, true}, 2, false, false, Activation::tanh});
  d.layers.push_back({{3 + 2, 8, 4, 2, 1, false}, 2, false, true, Activation::leaky_relu});
  d.layers.push_back({{8, 8, 4, 2, 1, false}, 0, false, true, Activation::leaky_relu});
  d.layers.push_back({{8, 1, 4, 1, 0, false}, 0, false, false, Activation::none});
  Rng rng(seed);
  t.gen = build_generator<double>(g, t.spec, rng);
  t.disc = build_discriminator<double>(d, 2, rng);
  // Default init is tiny; widen it so gradients are well above rounding.
  auto widen = [&](Weights<double>& w) {
    w.visit_parameters([&](const std::string&, auto& p) {
      for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] += 0.25 * rng.normal();
    });
  };
  widen(t.gen);
  widen(t.disc);
  const FootprintMap fp = receptive_footprint(g.stack());
  for (int b = 0; b < batch; ++b) {
    const CropWindow w = make_crop_window(0, 0, 16, 16, fp, 0);
    t.windows.push_back(w);
    t.latents.push_back(sample_latent(t.spec, w.latent_h, w.latent_w, w.frame, rng));
    Grid<double> r(3, 16, 16);
    for (Eigen::Index i = 0; i < r.values.size(); ++i) r.values.data()[i] = std::tanh(rng.normal());
    t.real.push_back(r);
    t.coords.push_back(make_coordinate_grid(t.spec.coords, w, 16, 16));
  }
  return t;
}

struct GradientCheck {
  int checked = 0;
  double max_relative = 0;
  std::string worst;
};

/// Analytic gradients of the discriminator loss (w.r.t. discriminator
/// parameters) and generator loss (w.r.t. generator parameters) against
/// central differences at `count` random parameters.
inline GradientCheck toy_gradient_check(std::uint64_t seed, int count, double h = 1e-6) {
  ToyPair t = toy_pair(seed);
  const auto grads = loss_gradients<double>(t.gen, t.disc, t.latents, t.windows, t.real, t.coords);

  struct Slot {
    double* value;
    double analytic;
    bool generator;
    std::string name;
  };
  std::vector<Slot> slots;
  auto collect = [&](Weights<double>& w, const Weights<double>& g, bool is_gen) {
    std::vector<const double*> gp;
    const_cast<Weights<double>&>(g).visit_parameters([&](const std::string&, auto& p) {
      for (Eigen::Index i = 0; i < p.size(); ++i) gp.push_back(p.data() + i);
    });
    std::size_t k = 0;
    w.visit_parameters([&](const std::string& name, auto& p) {
      for (Eigen::Index i = 0; i < p.size(); ++i, ++k)
        slots.push_back({p.data() + i, *gp[k], is_gen, (is_gen ? "G." : "D.") + name + "[" + std::to_string(i) + "]"});
    });
  };
  collect(t.gen, grads.g_grad, true);
  collect(t.disc, grads.d_grad, false);

  Rng pick(seed ^ 0x5eed);
  GradientCheck out;
  for (int c = 0; c < count; ++c) {
    const Slot& s = slots[std::size_t(pick.uniform_int(0, int(slots.size()) - 1))];
    const double keep = *s.value;
    auto loss = [&] {
      const auto r = loss_gradients<double>(t.gen, t.disc, t.latents, t.windows, t.real, t.coords);
      return s.generator ? r.g_loss : r.d_loss;
    };
    *s.value = keep + h;
    const double lp = loss();
    *s.value = keep - h;
    const double lm = loss();
    *s.value = keep;
    const double numeric = (lp - lm) / (2 * h);
    const double rel = std::abs(s.analytic - numeric) / std::max({std::abs(s.analytic), std::abs(numeric), 1e-6});
    if (rel >= out.max_relative) {
      out.max_relative = rel;
      out.worst = s.name;
    }
    ++out.checked;
  }
  return out;
}

}  // namespace support
