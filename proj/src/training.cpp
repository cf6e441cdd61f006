#include "locogan/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "locogan/image_io.hpp"

namespace locogan {

std::string to_string(DatasetMode mode) { return mode == DatasetMode::folder ? "folder" : "pattern"; }

DatasetMode parse_dataset_mode(const std::string& text) {
  if (text == "folder") return DatasetMode::folder;
  if (text == "pattern") return DatasetMode::pattern;
  throw ConfigError("unknown dataset mode '" + text + "' (expected folder or pattern)");
}

Grid<float> rescale_shorter_edge(const Grid<float>& image, int shorter_edge) {
  const int shorter = std::min(image.height, image.width);
  if (shorter == shorter_edge) return image;
  const double scale = double(shorter_edge) / shorter;
  const int h = std::max(1, static_cast<int>(std::lround(image.height * scale)));
  const int w = std::max(1, static_cast<int>(std::lround(image.width * scale)));
  return resample_grid(image, h, w);
}

DatasetSource DatasetSource::from_folder(const std::filesystem::path& dir, int shorter_edge, int crop_h, int crop_w) {
  DatasetSource src;
  src.mode = DatasetMode::folder;
  src.crop_h = crop_h;
  src.crop_w = crop_w;
  if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && is_supported_image(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) src.images.push_back(rescale_shorter_edge(decode_image(f), shorter_edge));
  if (src.images.empty()) throw EmptyDataset("no PNG or JPEG images in " + dir.string());
  return src;
}

DatasetSource DatasetSource::from_pattern(const std::filesystem::path& file, int crop_h, int crop_w) {
  DatasetSource src;
  src.mode = DatasetMode::pattern;
  src.crop_h = crop_h;
  src.crop_w = crop_w;
  src.images.push_back(decode_image(file));
  return src;
}

RealCrop sample_real_crop(const DatasetSource& src, const CoordinateSpec& coords, const FootprintMap& fp, Rng& rng,
                          int padding) {
  if (src.images.empty()) throw EmptyDataset("dataset has no images");
  const int index = src.images.size() == 1 ? 0 : rng.uniform_int(0, static_cast<int>(src.images.size()) - 1);
  const Grid<float>& img = src.images[index];
  if (src.crop_h > img.height || src.crop_w > img.width)
    throw CropLargerThanImage("crop " + std::to_string(src.crop_h) + "x" + std::to_string(src.crop_w) +
                              " exceeds image " + std::to_string(img.height) + "x" + std::to_string(img.width));
  const int y = rng.uniform_int(0, img.height - src.crop_h);
  const int x = rng.uniform_int(0, img.width - src.crop_w);
  const int shift_y = (img.height - coords.reference_height) / 2;
  const int shift_x = (img.width - coords.reference_width) / 2;
  RealCrop c;
  c.image = crop(img, y, x, src.crop_h, src.crop_w);
  c.window = make_crop_window(x - shift_x, y - shift_y, src.crop_h, src.crop_w, fp, padding);
  c.source = index;
  return c;
}

namespace {

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("probability " + std::to_string(p) + " outside (0, 1)");
}

}  // namespace

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double discriminator_loss(double d_real, double d_fake) {
  check_probability(d_real);
  check_probability(d_fake);
  return -(std::log(d_real) + std::log1p(-d_fake));
}

double discriminator_loss(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.empty() || d_real.size() != d_fake.size()) throw DomainError("loss batches must be non-empty and equal");
  double sum = 0;
  for (std::size_t i = 0; i < d_real.size(); ++i) sum += discriminator_loss(d_real[i], d_fake[i]);
  return sum / double(d_real.size());
}

double generator_loss(double d_fake) {
  check_probability(d_fake);
  return -std::log(d_fake);
}

double generator_loss(std::span<const double> d_fake) {
  if (d_fake.empty()) throw DomainError("loss batch must be non-empty");
  double sum = 0;
  for (double p : d_fake) sum += generator_loss(p);
  return sum / double(d_fake.size());
}

std::string format_metrics(const MetricsRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld %.6f %.6f %.6f %.6f", r.step, r.d_loss, r.g_loss, r.d_real, r.d_fake);
  return buf;
}

namespace {

template <typename Scalar>
struct FakeBatch {
  std::vector<Grid<Scalar>> crops;
  Tape<Scalar> tape;
};

template <typename Scalar>
FakeBatch<Scalar> generate_fakes(Weights<Scalar>& gen, const std::vector<LatentImage>& latents,
                                 const std::vector<CropWindow>& windows, bool update_running) {
  const FootprintMap fp = receptive_footprint(gen.config.stack());
  std::vector<Grid<Scalar>> values(latents.size());
  for (std::size_t b = 0; b < latents.size(); ++b) {
    const LatentImage& z = latents[b];
    values[b] = Grid<Scalar>(z.spec.value_channels(), z.height, z.width);
    if (z.spec.global_channels > 0)
      values[b].values.topRows(z.spec.global_channels) = z.global_grid().values.template cast<Scalar>();
    if (z.spec.local_channels > 0)
      values[b].values.bottomRows(z.spec.local_channels) = z.local.values.template cast<Scalar>();
  }
  CoordinateSource<Scalar> coords = [&](std::size_t l, std::size_t b, int h, int w) {
    return layer_coordinates<Scalar>(fp, l, latents[b].coords, h, w);
  };
  FakeBatch<Scalar> fb;
  const auto raw = forward(gen, std::move(values), coords, Mode::train, &fb.tape, update_running);
  fb.crops.resize(raw.size());
  for (std::size_t b = 0; b < raw.size(); ++b)
    fb.crops[b] = crop(raw[b], windows[b].offset_y, windows[b].offset_x, windows[b].height, windows[b].width);
  return fb;
}

// Gradient of mean(loss(logit)) w.r.t. the discriminator's output map.
template <typename Scalar>
std::vector<Grid<Scalar>> logit_grads(const Tape<Scalar>& tape, const std::vector<double>& dlogit) {
  const auto& out = tape.outputs.back();
  std::vector<Grid<Scalar>> d(out.size());
  for (std::size_t b = 0; b < out.size(); ++b) {
    d[b] = out[b];
    d[b].values.setConstant(Scalar(dlogit[b] / double(out[b].pixels())));
  }
  return d;
}

struct DiscriminatorStats {
  double loss = 0;
  double d_real = 0;
  double d_fake = 0;
};

template <typename Scalar>
DiscriminatorStats discriminator_pass(Weights<Scalar>& disc, const std::vector<Grid<Scalar>>& real,
                                      const std::vector<Grid<Scalar>>& fake, const std::vector<Grid<Scalar>>& coords,
                                      Weights<Scalar>& grads) {
  const double n = double(real.size());
  Tape<Scalar> tape_real, tape_fake;
  const auto zr = discriminator_logits(disc, real, coords, &tape_real);
  const auto zf = discriminator_logits(disc, fake, coords, &tape_fake);
  DiscriminatorStats st;
  std::vector<double> dr(real.size()), df(fake.size());
  for (std::size_t b = 0; b < real.size(); ++b) {
    const double r = double(zr[b]), f = double(zf[b]);
    st.loss += (softplus(-r) + softplus(f)) / n;
    st.d_real += sigmoid(r) / n;
    st.d_fake += sigmoid(f) / n;
    dr[b] = (sigmoid(r) - 1.0) / n;
    df[b] = sigmoid(f) / n;
  }
  backward(disc, tape_real, logit_grads(tape_real, dr), grads);
  backward(disc, tape_fake, logit_grads(tape_fake, df), grads);
  return st;
}

template <typename Scalar>
double generator_pass(Weights<Scalar>& gen, Weights<Scalar>& disc, const FakeBatch<Scalar>& fakes,
                      const std::vector<CropWindow>& windows, const std::vector<Grid<Scalar>>& coords,
                      Weights<Scalar>& grads) {
  const double n = double(fakes.crops.size());
  Tape<Scalar> tape;
  const auto z = discriminator_logits(disc, fakes.crops, coords, &tape);
  double loss = 0;
  std::vector<double> dz(z.size());
  for (std::size_t b = 0; b < z.size(); ++b) {
    loss += softplus(-double(z[b])) / n;
    dz[b] = (sigmoid(double(z[b])) - 1.0) / n;
  }
  Weights<Scalar> scratch = disc.zeros_like();
  auto d_images = backward(disc, tape, logit_grads(tape, dz), scratch);
  const auto& raw = fakes.tape.outputs.back();
  for (std::size_t b = 0; b < d_images.size(); ++b)
    d_images[b] = uncrop(d_images[b], windows[b].offset_y, windows[b].offset_x, raw[b].height, raw[b].width);
  backward(gen, fakes.tape, std::move(d_images), grads);
  return loss;
}

}  // namespace

template <typename Scalar>
LossGradients<Scalar> loss_gradients(Weights<Scalar>& gen, Weights<Scalar>& disc, const std::vector<LatentImage>& latents,
                                     const std::vector<CropWindow>& windows, const std::vector<Grid<Scalar>>& real,
                                     const std::vector<Grid<Scalar>>& coords, bool update_running) {
  LossGradients<Scalar> out;
  out.d_grad = disc.zeros_like();
  out.g_grad = gen.zeros_like();
  const FakeBatch<Scalar> fakes = generate_fakes(gen, latents, windows, update_running);
  const DiscriminatorStats st = discriminator_pass(disc, real, fakes.crops, coords, out.d_grad);
  out.d_loss = st.loss;
  out.d_real = st.d_real;
  out.d_fake = st.d_fake;
  out.g_loss = generator_pass(gen, disc, fakes, windows, coords, out.g_grad);
  return out;
}

template LossGradients<float> loss_gradients(Weights<float>&, Weights<float>&, const std::vector<LatentImage>&,
                                             const std::vector<CropWindow>&, const std::vector<Grid<float>>&,
                                             const std::vector<Grid<float>>&, bool);
template LossGradients<double> loss_gradients(Weights<double>&, Weights<double>&, const std::vector<LatentImage>&,
                                              const std::vector<CropWindow>&, const std::vector<Grid<double>>&,
                                              const std::vector<Grid<double>>&, bool);

TrainState init_train_state(const TrainConfig& cfg) {
  TrainState st;
  st.rng = Rng(cfg.seed);
  Rng init = st.rng.fork();
  st.generator = build_generator<float>(cfg.generator, cfg.latent, init);
  st.discriminator = build_discriminator<float>(cfg.discriminator, cfg.latent.coords.channels(), init);
  st.adam_g = {st.generator.zeros_like(), st.generator.zeros_like(), 0};
  st.adam_d = {st.discriminator.zeros_like(), st.discriminator.zeros_like(), 0};
  return st;
}

MetricsRecord train_step(TrainState& state, const TrainConfig& cfg, const DatasetSource& src) {
  const FootprintMap fp = receptive_footprint(cfg.generator.stack());
  const int batch = cfg.batch_size;
  std::vector<Grid<float>> real(batch), coords(batch);
  std::vector<CropWindow> windows(batch);
  std::vector<LatentImage> latents(batch);
  for (int b = 0; b < batch; ++b) {
    RealCrop rc = sample_real_crop(src, cfg.latent.coords, fp, state.rng, cfg.noise_padding);
    windows[b] = rc.window;
    real[b] = std::move(rc.image);
    coords[b] = make_coordinate_grid(cfg.latent.coords, rc.window, rc.window.height, rc.window.width).cast<float>();
    latents[b] = sample_latent(cfg.latent, rc.window.latent_h, rc.window.latent_w, rc.window.frame, state.rng);
  }

  advance_spectral(state.discriminator);
  const FakeBatch<float> fakes = generate_fakes(state.generator, latents, windows, true);

  Weights<float> d_grad = state.discriminator.zeros_like();
  const DiscriminatorStats st = discriminator_pass(state.discriminator, real, fakes.crops, coords, d_grad);
  adam_update(state.discriminator, d_grad, state.adam_d, cfg.lr_d, cfg.beta1, cfg.beta2, cfg.adam_epsilon);

  Weights<float> g_grad = state.generator.zeros_like();
  const double g_loss = generator_pass(state.generator, state.discriminator, fakes, windows, coords, g_grad);
  adam_update(state.generator, g_grad, state.adam_g, cfg.lr_g, cfg.beta1, cfg.beta2, cfg.adam_epsilon);

  ++state.step;
  MetricsRecord rec{state.step, st.loss, g_loss, st.d_real, st.d_fake};
  const double k = state.step == 1 ? 1.0 : 0.05;
  state.ema_d_loss += k * (rec.d_loss - state.ema_d_loss);
  state.ema_g_loss += k * (rec.g_loss - state.ema_g_loss);
  return rec;
}

void train(TrainState& state, const TrainConfig& cfg, const DatasetSource& src,
           const std::function<void(const MetricsRecord&)>& on_step,
           const std::function<void(const TrainState&)>& on_checkpoint) {
  if (on_checkpoint) on_checkpoint(state);
  while (state.step < cfg.total_steps) {
    const MetricsRecord rec = train_step(state, cfg, src);
    if (on_step) on_step(rec);
    const bool cadence = cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0;
    if (on_checkpoint && (cadence || state.step == cfg.total_steps)) on_checkpoint(state);
  }
}

}  // namespace locogan
