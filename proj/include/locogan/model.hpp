#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "locogan/geometry.hpp"
#include "locogan/latent.hpp"
#include "locogan/layers.hpp"
#include "locogan/parallel.hpp"
#include "locogan/random.hpp"

namespace locogan {

enum class Activation { none, relu, leaky_relu, tanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);

/// One layer of a network: geometry plus what happens around the convolution.
struct LayerPlan {
  LayerSpec spec;
  /// Coordinate channels concatenated to this layer's input (already counted in spec.in_channels).
  int coord_channels = 0;
  bool batch_norm = false;
  bool spectral_norm = false;
  Activation activation = Activation::none;
  friend bool operator==(const LayerPlan&, const LayerPlan&) = default;
};

struct NetworkConfig {
  std::vector<LayerPlan> layers;
  double leaky_slope = 0.2;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;
  double init_std = 0.02;

  std::vector<LayerSpec> stack() const;
  bool uses_spectral_norm() const;
  /// Channel compatibility between consecutive layers.
  void validate() const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Generator stack: transposed convolutions (4,2,3) for each width, then a
/// final (4,1,3) to `image_channels` with tanh. Coordinates join every layer.
NetworkConfig generator_config(const LatentSpec& spec, const std::vector<int>& widths = {1024, 512, 256, 128},
                               int image_channels = 3);

/// Discriminator stack: convolutions (4,2,1) for each width with spectral
/// normalization and leaky rectifiers, then (4,1,0) to one logit.
/// Coordinates join the input only.
NetworkConfig discriminator_config(int coord_channels, const std::vector<int>& widths = {64, 128, 256, 512},
                                   int image_channels = 3, bool spectral = true);

template <typename Scalar>
struct LayerWeights {
  Matrix<Scalar> kernel;
  Vector<Scalar> bias;
  Vector<Scalar> gamma;
  Vector<Scalar> beta;
  Vector<Scalar> running_mean;
  Vector<Scalar> running_var;
  /// Power-iteration vectors of the spectral norm (left and right).
  Vector<Scalar> sn_u;
  Vector<Scalar> sn_v;
};

template <typename Scalar>
struct Weights {
  NetworkConfig config;
  std::vector<LayerWeights<Scalar>> layers;

  /// Visits trainable tensors as (name, tensor) in a fixed order.
  template <typename F>
  void visit_parameters(F&& f) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      f(p + "kernel", layers[l].kernel);
      f(p + "bias", layers[l].bias);
      if (config.layers[l].batch_norm) {
        f(p + "gamma", layers[l].gamma);
        f(p + "beta", layers[l].beta);
      }
    }
  }
  template <typename F>
  void visit_buffers(F&& f) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      if (config.layers[l].batch_norm) {
        f(p + "running_mean", layers[l].running_mean);
        f(p + "running_var", layers[l].running_var);
      }
      if (config.layers[l].spectral_norm) {
        f(p + "sn_u", layers[l].sn_u);
        f(p + "sn_v", layers[l].sn_v);
      }
    }
  }
  template <typename F>
  void visit_all(F&& f) {
    visit_parameters(f);
    visit_buffers(f);
  }

  /// Same shapes, every tensor zero.
  Weights zeros_like() const {
    Weights z = *this;
    z.visit_all([](const std::string&, auto& t) { t.setZero(); });
    return z;
  }

  template <typename Other>
  Weights<Other> cast() const {
    Weights<Other> w;
    w.config = config;
    for (const auto& l : layers)
      w.layers.push_back({l.kernel.template cast<Other>(), l.bias.template cast<Other>(),
                          l.gamma.template cast<Other>(), l.beta.template cast<Other>(),
                          l.running_mean.template cast<Other>(), l.running_var.template cast<Other>(),
                          l.sn_u.template cast<Other>(), l.sn_v.template cast<Other>()});
    return w;
  }
};

/// Zero-mean normal kernels (deviation cfg.init_std), zero biases, unit
/// normalization scale, zero shift; spectral vectors from one power iteration.
template <typename Scalar>
Weights<Scalar> init_weights(const NetworkConfig& cfg, Rng& rng) {
  cfg.validate();
  Weights<Scalar> w;
  w.config = cfg;
  for (const LayerPlan& plan : cfg.layers) {
    const LayerSpec& s = plan.spec;
    LayerWeights<Scalar> lw;
    lw.kernel.resize(kernel_rows(s), kernel_cols(s));
    for (Eigen::Index j = 0; j < lw.kernel.cols(); ++j)
      for (Eigen::Index i = 0; i < lw.kernel.rows(); ++i) lw.kernel(i, j) = Scalar(cfg.init_std * rng.normal());
    lw.bias = Vector<Scalar>::Zero(s.out_channels);
    if (plan.batch_norm) {
      lw.gamma = Vector<Scalar>::Ones(s.out_channels);
      lw.beta = Vector<Scalar>::Zero(s.out_channels);
      lw.running_mean = Vector<Scalar>::Zero(s.out_channels);
      lw.running_var = Vector<Scalar>::Ones(s.out_channels);
    }
    if (plan.spectral_norm) {
      Vector<Scalar> u(lw.kernel.rows());
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = Scalar(rng.normal());
      auto sn = spectral_normalize<Scalar>(lw.kernel, u, 1);
      lw.sn_u = sn.u;
      lw.sn_v = sn.v;
    }
    w.layers.push_back(std::move(lw));
  }
  return w;
}

/// Checks the channel plan against the latent and initializes the generator.
template <typename Scalar>
Weights<Scalar> build_generator(const NetworkConfig& cfg, const LatentSpec& spec, Rng& rng) {
  if (cfg.layers.empty()) throw ConfigMismatch("generator has no layers");
  const int coords = spec.coords.channels();
  if (cfg.layers.front().spec.in_channels != spec.value_channels() + coords)
    throw ConfigMismatch("generator input channels " + std::to_string(cfg.layers.front().spec.in_channels) +
                         " != latent channels " + std::to_string(spec.value_channels() + coords));
  for (const LayerPlan& p : cfg.layers)
    if (p.coord_channels != coords || !p.spec.transposed)
      throw ConfigMismatch("generator layers must be transposed and take every coordinate channel");
  return init_weights<Scalar>(cfg, rng);
}

template <typename Scalar>
Weights<Scalar> build_discriminator(const NetworkConfig& cfg, int coord_channels, Rng& rng) {
  if (cfg.layers.empty()) throw ConfigMismatch("discriminator has no layers");
  if (cfg.layers.front().coord_channels != coord_channels)
    throw ConfigMismatch("discriminator input takes " + std::to_string(cfg.layers.front().coord_channels) +
                         " coordinate channels, latent provides " + std::to_string(coord_channels));
  if (cfg.layers.back().spec.out_channels != 1) throw ConfigMismatch("discriminator must end in one channel");
  for (const LayerPlan& p : cfg.layers)
    if (p.spec.transposed || p.batch_norm) throw ConfigMismatch("discriminator layers are plain convolutions");
  return init_weights<Scalar>(cfg, rng);
}

/// Advances each spectral layer's power iteration by one step.
template <typename Scalar>
void advance_spectral(Weights<Scalar>& w, int iterations = 1) {
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    if (!w.config.layers[l].spectral_norm) continue;
    auto& lw = w.layers[l];
    auto sn = spectral_normalize<Scalar>(lw.kernel, lw.sn_u, iterations);
    lw.sn_u = sn.u;
    lw.sn_v = sn.v;
  }
}

enum class Mode { train, eval };

/// Activations kept by a forward pass for the matching backward pass.
template <typename Scalar>
struct Tape {
  std::vector<std::vector<Grid<Scalar>>> inputs;   // [layer][example], coordinates included
  std::vector<std::vector<Grid<Scalar>>> xhat;     // normalized pre-activations (batch-norm layers)
  std::vector<std::vector<Grid<Scalar>>> outputs;  // post-activation
  std::vector<Vector<Scalar>> inv_std;
  std::vector<Matrix<Scalar>> kernels;  // effective kernels (after spectral normalization)
  std::vector<Scalar> sigma;
};

/// coords(layer, example, height, width) returns the coordinate channels to
/// append before that layer (called only for layers with coord_channels > 0).
template <typename Scalar>
using CoordinateSource = std::function<Grid<Scalar>(std::size_t, std::size_t, int, int)>;

namespace detail {

template <typename Scalar>
Scalar activate(Activation a, Scalar x, Scalar slope) {
  switch (a) {
    case Activation::relu: return x > Scalar(0) ? x : Scalar(0);
    case Activation::leaky_relu: return x > Scalar(0) ? x : slope * x;
    case Activation::tanh: return std::tanh(x);
    case Activation::none: return x;
  }
  return x;
}

// Derivative expressed through the activation's output.
template <typename Scalar>
Scalar activate_grad(Activation a, Scalar y, Scalar slope) {
  switch (a) {
    case Activation::relu: return y > Scalar(0) ? Scalar(1) : Scalar(0);
    case Activation::leaky_relu: return y > Scalar(0) ? Scalar(1) : slope;
    case Activation::tanh: return Scalar(1) - y * y;
    case Activation::none: return Scalar(1);
  }
  return Scalar(1);
}

template <typename Scalar>
Matrix<Scalar> effective_kernel(const LayerPlan& plan, const LayerWeights<Scalar>& lw, Scalar& sigma) {
  if (!plan.spectral_norm) {
    sigma = Scalar(1);
    return lw.kernel;
  }
  sigma = lw.sn_u.dot(lw.kernel * lw.sn_v);
  return lw.kernel / sigma;
}

}  // namespace detail

/// Batched forward pass. In train mode batch-norm layers use batch statistics
/// and (when `update_running`) refresh the running statistics; eval mode uses
/// the running statistics. Spectral vectors are read, never advanced.
template <typename Scalar>
std::vector<Grid<Scalar>> forward(Weights<Scalar>& w, std::vector<Grid<Scalar>> h, const CoordinateSource<Scalar>& coords,
                                  Mode mode, Tape<Scalar>* tape = nullptr, bool update_running = true) {
  const NetworkConfig& cfg = w.config;
  const std::size_t batch = h.size();
  if (batch == 0) return h;
  stack_sizes(h.front().height, cfg.stack());
  stack_sizes(h.front().width, cfg.stack());
  const Scalar slope = Scalar(cfg.leaky_slope);
  if (tape) *tape = Tape<Scalar>{};

  for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
    const LayerPlan& plan = cfg.layers[l];
    LayerWeights<Scalar>& lw = w.layers[l];
    Scalar sigma;
    const Matrix<Scalar> kernel = detail::effective_kernel(plan, lw, sigma);

    std::vector<Grid<Scalar>> in(batch);
    std::vector<Grid<Scalar>> z(batch);
    parallel_for(batch, [&](std::size_t b) {
      Grid<Scalar>& x = in[b];
      if (plan.coord_channels > 0) {
        const Grid<Scalar> c = coords(l, b, h[b].height, h[b].width);
        if (c.channels() != plan.coord_channels || c.height != h[b].height || c.width != h[b].width)
          throw ShapeMismatch("coordinate grid does not match layer " + std::to_string(l + 1));
        x = Grid<Scalar>(h[b].channels() + plan.coord_channels, h[b].height, h[b].width);
        x.values.topRows(h[b].channels()) = h[b].values;
        x.values.bottomRows(plan.coord_channels) = c.values;
      } else {
        x = std::move(h[b]);
      }
      if (x.channels() != plan.spec.in_channels)
        throw ShapeMismatch("layer " + std::to_string(l + 1) + " expects " + std::to_string(plan.spec.in_channels) +
                            " input channels, got " + std::to_string(x.channels()));
      z[b] = plan.spec.transposed ? conv_transpose_forward(kernel, lw.bias, x, plan.spec)
                                  : conv_forward(kernel, lw.bias, x, plan.spec);
    });

    std::vector<Grid<Scalar>> xhat;
    Vector<Scalar> inv_std;
    if (plan.batch_norm) {
      const int ch = plan.spec.out_channels;
      Vector<Scalar> mean = Vector<Scalar>::Zero(ch), var = Vector<Scalar>::Zero(ch);
      if (mode == Mode::train) {
        double count = 0;
        for (const auto& g : z) {
          mean += g.values.rowwise().sum();
          count += double(g.pixels());
        }
        mean /= Scalar(count);
        for (const auto& g : z) var += (g.values.colwise() - mean).array().square().matrix().rowwise().sum();
        var /= Scalar(count);
        if (update_running) {
          const Scalar m = Scalar(cfg.bn_momentum);
          const Scalar unbiased = count > 1 ? Scalar(count / (count - 1)) : Scalar(1);
          lw.running_mean = (Scalar(1) - m) * lw.running_mean + m * mean;
          lw.running_var = (Scalar(1) - m) * lw.running_var + m * unbiased * var;
        }
      } else {
        mean = lw.running_mean;
        var = lw.running_var;
      }
      inv_std = (var.array() + Scalar(cfg.bn_epsilon)).rsqrt().matrix();
      xhat.resize(batch);
      parallel_for(batch, [&](std::size_t b) {
        xhat[b] = z[b];
        xhat[b].values = (z[b].values.colwise() - mean).array().colwise() * inv_std.array();
        z[b].values = (xhat[b].values.array().colwise() * lw.gamma.array()).colwise() + lw.beta.array();
      });
    }

    parallel_for(batch, [&](std::size_t b) {
      z[b].values = z[b].values.unaryExpr([&](Scalar v) { return detail::activate(plan.activation, v, slope); });
    });
    if (tape) {
      tape->inputs.push_back(std::move(in));
      tape->xhat.push_back(std::move(xhat));
      tape->inv_std.push_back(inv_std);
      tape->outputs.push_back(z);
      tape->kernels.push_back(kernel);
      tape->sigma.push_back(sigma);
    }
    h = std::move(z);
  }
  return h;
}

/// Backward pass over a recorded tape. Adds parameter gradients into `grads`
/// (shaped like the weights) and returns the gradient of the network input
/// without its coordinate channels.
template <typename Scalar>
std::vector<Grid<Scalar>> backward(const Weights<Scalar>& w, const Tape<Scalar>& tape, std::vector<Grid<Scalar>> d,
                                   Weights<Scalar>& grads) {
  const NetworkConfig& cfg = w.config;
  const std::size_t batch = d.size();
  const Scalar slope = Scalar(cfg.leaky_slope);
  for (std::size_t l = cfg.layers.size(); l-- > 0;) {
    const LayerPlan& plan = cfg.layers[l];
    const LayerWeights<Scalar>& lw = w.layers[l];
    LayerWeights<Scalar>& gw = grads.layers[l];
    const auto& out = tape.outputs[l];

    parallel_for(batch, [&](std::size_t b) {
      d[b].values = d[b].values.binaryExpr(
          out[b].values, [&](Scalar g, Scalar y) { return g * detail::activate_grad(plan.activation, y, slope); });
    });

    if (plan.batch_norm) {
      const auto& xhat = tape.xhat[l];
      const Vector<Scalar>& inv_std = tape.inv_std[l];
      const int ch = plan.spec.out_channels;
      Vector<Scalar> sum_d = Vector<Scalar>::Zero(ch), sum_dx = Vector<Scalar>::Zero(ch);
      double count = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        sum_d += d[b].values.rowwise().sum();
        sum_dx += d[b].values.cwiseProduct(xhat[b].values).rowwise().sum();
        count += double(d[b].pixels());
      }
      gw.beta += sum_d;
      gw.gamma += sum_dx;
      // dx = gamma * inv_std * (d - mean(d) - xhat * mean(d * xhat)) per channel.
      const Vector<Scalar> mean_d = sum_d / Scalar(count), mean_dx = sum_dx / Scalar(count);
      const Vector<Scalar> scale = lw.gamma.cwiseProduct(inv_std);
      parallel_for(batch, [&](std::size_t b) {
        d[b].values = (((d[b].values.colwise() - mean_d).array() - xhat[b].values.array().colwise() * mean_dx.array())
                           .colwise() *
                       scale.array())
                          .matrix();
      });
    }

    const Matrix<Scalar>& kernel = tape.kernels[l];
    std::vector<Matrix<Scalar>> dk(batch, Matrix<Scalar>::Zero(kernel.rows(), kernel.cols()));
    std::vector<Vector<Scalar>> db(batch, Vector<Scalar>::Zero(plan.spec.out_channels));
    std::vector<Grid<Scalar>> dx(batch);
    parallel_for(batch, [&](std::size_t b) {
      const Grid<Scalar>& x = tape.inputs[l][b];
      if (plan.spec.transposed)
        conv_transpose_backward(kernel, x, d[b], plan.spec, dk[b], db[b], &dx[b]);
      else
        conv_backward(kernel, x, d[b], plan.spec, dk[b], db[b], &dx[b]);
    });
    Matrix<Scalar> dkernel = Matrix<Scalar>::Zero(kernel.rows(), kernel.cols());
    for (std::size_t b = 0; b < batch; ++b) {
      dkernel += dk[b];
      gw.bias += db[b];
    }
    if (plan.spectral_norm)
      gw.kernel += spectral_backward<Scalar>(lw.kernel, lw.sn_u, lw.sn_v, tape.sigma[l], dkernel);
    else
      gw.kernel += dkernel;

    for (std::size_t b = 0; b < batch; ++b) {
      d[b] = std::move(dx[b]);
      if (plan.coord_channels > 0) {
        const Eigen::Index keep = d[b].values.rows() - plan.coord_channels;
        d[b].values = d[b].values.topRows(keep).eval();
      }
    }
  }
  return d;
}

/// Coordinate channels injected before each generator layer, sampled
/// bilinearly from the latent's grid at the footprint centers of that layer.
template <typename Scalar>
Grid<Scalar> layer_coordinates(const FootprintMap& fp, std::size_t layer, const Grid<double>& latent_coords, int h,
                               int w) {
  const AxisMap& lat = fp.latent_map();
  const AxisMap& m = fp.input_maps[layer];
  const double origin = lat.inverse(m(0.0));
  const double step = m.scale / lat.scale;
  return sample_grid(latent_coords, {origin, step, h}, {origin, step, w}).template cast<Scalar>();
}

/// Generator driven by latent images.
template <typename Scalar>
class Generator {
 public:
  Generator() = default;
  explicit Generator(Weights<Scalar> w) : weights_(std::move(w)), footprint_(receptive_footprint(weights_.config.stack())) {}

  Weights<Scalar>& weights() { return weights_; }
  const Weights<Scalar>& weights() const { return weights_; }
  const FootprintMap& footprint() const { return footprint_; }

  /// Raw outputs (size 16n - 63 for the default stack), batched.
  std::vector<Grid<Scalar>> run(const std::vector<LatentImage>& latents, Mode mode, Tape<Scalar>* tape = nullptr,
                                bool update_running = true) {
    std::vector<Grid<Scalar>> values(latents.size());
    for (std::size_t b = 0; b < latents.size(); ++b) {
      const LatentImage& z = latents[b];
      values[b] = Grid<Scalar>(z.spec.value_channels(), z.height, z.width);
      const int ng = z.spec.global_channels;
      if (ng > 0) values[b].values.topRows(ng) = z.global_grid().values.template cast<Scalar>();
      if (z.spec.local_channels > 0)
        values[b].values.bottomRows(z.spec.local_channels) = z.local.values.template cast<Scalar>();
    }
    CoordinateSource<Scalar> coords = [&](std::size_t l, std::size_t b, int h, int w) {
      return layer_coordinates<Scalar>(footprint_, l, latents[b].coords, h, w);
    };
    return forward(weights_, std::move(values), coords, mode, tape, update_running);
  }

  /// Single latent to raw image.
  Grid<Scalar> generate(const LatentImage& latent, Mode mode = Mode::eval) {
    return std::move(run({latent}, mode).front());
  }

 private:
  Weights<Scalar> weights_;
  FootprintMap footprint_;
};

/// Centered (or offset) sub-image.
template <typename Scalar>
Grid<Scalar> crop(const Grid<Scalar>& g, int y, int x, int h, int w) {
  if (y < 0 || x < 0 || y + h > g.height || x + w > g.width) throw ShapeMismatch("crop outside the image");
  Grid<Scalar> out(g.channels(), h, w);
  for (int i = 0; i < h; ++i)
    out.values.middleCols(Eigen::Index(i) * w, w) = g.values.middleCols(Eigen::Index(y + i) * g.width + x, w);
  return out;
}

/// Inverse of crop for gradients: zero image with `g` placed at (y, x).
template <typename Scalar>
Grid<Scalar> uncrop(const Grid<Scalar>& g, int y, int x, int h, int w) {
  Grid<Scalar> out(g.channels(), h, w);
  for (int i = 0; i < g.height; ++i)
    out.values.middleCols(Eigen::Index(y + i) * w + x, g.width) = g.values.middleCols(Eigen::Index(i) * g.width, g.width);
  return out;
}

/// Mean logit over the final spatial map (a single value for 64x64 inputs).
template <typename Scalar>
std::vector<Scalar> discriminator_logits(Weights<Scalar>& w, const std::vector<Grid<Scalar>>& images,
                                         const std::vector<Grid<Scalar>>& coords, Tape<Scalar>* tape = nullptr) {
  if (images.size() != coords.size()) throw ShapeMismatch("one coordinate grid per image is required");
  for (std::size_t b = 0; b < images.size(); ++b)
    if (images[b].height != coords[b].height || images[b].width != coords[b].width)
      throw ShapeMismatch("image and coordinate grid sizes differ");
  CoordinateSource<Scalar> source = [&](std::size_t, std::size_t b, int, int) { return coords[b]; };
  const auto out = forward(w, images, source, Mode::eval, tape, false);
  std::vector<Scalar> logits(out.size());
  for (std::size_t b = 0; b < out.size(); ++b) logits[b] = out[b].values.mean();
  return logits;
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  return z >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-z)) : std::exp(z) / (Scalar(1) + std::exp(z));
}

/// Probabilities in (0, 1), one per image, order preserved. `expected` pins
/// the input size the discriminator was built for (0 disables the check).
template <typename Scalar>
std::vector<Scalar> discriminate(Weights<Scalar>& w, const std::vector<Grid<Scalar>>& images,
                                 const std::vector<Grid<Scalar>>& coords, int expected_h = 0, int expected_w = 0) {
  for (const auto& img : images) {
    if (img.channels() + w.config.layers.front().coord_channels != w.config.layers.front().spec.in_channels)
      throw ShapeMismatch("discriminator input has the wrong channel count");
    if ((expected_h && img.height != expected_h) || (expected_w && img.width != expected_w))
      throw ShapeMismatch("discriminator expects " + std::to_string(expected_h) + "x" + std::to_string(expected_w) +
                          " inputs, got " + std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  auto logits = discriminator_logits(w, images, coords);
  for (auto& z : logits) z = sigmoid(z);
  return logits;
}

}  // namespace locogan
