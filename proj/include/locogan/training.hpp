#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "locogan/latent.hpp"
#include "locogan/model.hpp"
#include "locogan/random.hpp"

namespace locogan {

enum class DatasetMode { folder, pattern };

std::string to_string(DatasetMode mode);
DatasetMode parse_dataset_mode(const std::string& text);

/// Images in [-1, 1] that real crops are drawn from.
struct DatasetSource {
  DatasetMode mode = DatasetMode::folder;
  std::vector<Grid<float>> images;
  int crop_h = 64;
  int crop_w = 64;

  /// Every PNG/JPEG file in `dir` (sorted by name), shorter edge rescaled to `shorter_edge`.
  static DatasetSource from_folder(const std::filesystem::path& dir, int shorter_edge, int crop_h, int crop_w);
  /// One pattern image used at its native resolution.
  static DatasetSource from_pattern(const std::filesystem::path& file, int crop_h, int crop_w);
};

/// Bilinear rescale so the shorter edge equals `shorter_edge`.
Grid<float> rescale_shorter_edge(const Grid<float>& image, int shorter_edge);

struct RealCrop {
  Grid<float> image;
  CropWindow window;
  int source = 0;
};

/// Uniform crop position; the window is expressed in the frame where the
/// coordinate reference extent is centered on the source image.
RealCrop sample_real_crop(const DatasetSource& src, const CoordinateSpec& coords, const FootprintMap& fp, Rng& rng,
                          int padding = 0);

/// -(log d_real + log(1 - d_fake)), batch mean. DomainError outside (0, 1).
double discriminator_loss(double d_real, double d_fake);
double discriminator_loss(std::span<const double> d_real, std::span<const double> d_fake);
/// Non-saturating generator loss -log d_fake, batch mean.
double generator_loss(double d_fake);
double generator_loss(std::span<const double> d_fake);

/// log(1 + exp(x)) without overflow.
double softplus(double x);

struct TrainConfig {
  int batch_size = 16;
  long long total_steps = 1000;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  long long checkpoint_every = 0;
  /// Noise padding (output pixels per side) of every training crop's latent.
  int noise_padding = 16;
  LatentSpec latent;
  NetworkConfig generator;
  NetworkConfig discriminator;
};

template <typename Scalar>
struct AdamState {
  Weights<Scalar> m;
  Weights<Scalar> v;
  long long step = 0;
};

/// One Adam update of every trainable tensor of `w`.
template <typename Scalar>
void adam_update(Weights<Scalar>& w, const Weights<Scalar>& grad, AdamState<Scalar>& st, double lr, double beta1,
                 double beta2, double eps) {
  ++st.step;
  const Scalar b1 = Scalar(beta1), b2 = Scalar(beta2);
  const Scalar c1 = Scalar(1.0 - std::pow(beta1, double(st.step)));
  const Scalar c2 = Scalar(1.0 - std::pow(beta2, double(st.step)));
  const Scalar rate = Scalar(lr), e = Scalar(eps);
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    p.array() -= rate * (m.array() / c1) / ((v.array() / c2).sqrt() + e);
  };
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    auto &pl = w.layers[l], &ml = st.m.layers[l], &vl = st.v.layers[l];
    const auto& gl = grad.layers[l];
    update(pl.kernel, gl.kernel, ml.kernel, vl.kernel);
    update(pl.bias, gl.bias, ml.bias, vl.bias);
    if (w.config.layers[l].batch_norm) {
      update(pl.gamma, gl.gamma, ml.gamma, vl.gamma);
      update(pl.beta, gl.beta, ml.beta, vl.beta);
    }
  }
}

struct MetricsRecord {
  long long step = 0;
  double d_loss = 0;
  double g_loss = 0;
  double d_real = 0;
  double d_fake = 0;
};

std::string format_metrics(const MetricsRecord& r);

struct TrainState {
  Weights<float> generator;
  Weights<float> discriminator;
  AdamState<float> adam_g;
  AdamState<float> adam_d;
  long long step = 0;
  Rng rng;
  /// Exponential moving averages of the losses.
  double ema_d_loss = 0;
  double ema_g_loss = 0;
};

TrainState init_train_state(const TrainConfig& cfg);

/// Gradients of both losses for one batch; used by the training step and by
/// the finite-difference checks.
template <typename Scalar>
struct LossGradients {
  double d_loss = 0;
  double g_loss = 0;
  double d_real = 0;
  double d_fake = 0;
  Weights<Scalar> d_grad;  // of the discriminator loss w.r.t. discriminator parameters
  Weights<Scalar> g_grad;  // of the generator loss w.r.t. generator parameters
};

/// Evaluates both losses on one batch with fixed spectral vectors. The
/// generator runs in train mode (batch statistics) without touching its
/// running statistics unless `update_running` is set.
template <typename Scalar>
LossGradients<Scalar> loss_gradients(Weights<Scalar>& gen, Weights<Scalar>& disc, const std::vector<LatentImage>& latents,
                                     const std::vector<CropWindow>& windows, const std::vector<Grid<Scalar>>& real,
                                     const std::vector<Grid<Scalar>>& coords, bool update_running = false);

/// One discriminator update then one generator update.
MetricsRecord train_step(TrainState& state, const TrainConfig& cfg, const DatasetSource& src);

/// Runs `cfg.total_steps - state.step` steps. `on_checkpoint` fires for the
/// starting state, every `checkpoint_every` steps, and at the end.
void train(TrainState& state, const TrainConfig& cfg, const DatasetSource& src,
           const std::function<void(const MetricsRecord&)>& on_step,
           const std::function<void(const TrainState&)>& on_checkpoint);

}  // namespace locogan
