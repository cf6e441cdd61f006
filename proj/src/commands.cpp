#include "locogan/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "locogan/image_io.hpp"

namespace locogan {

Model Model::from_state(const TrainState& state, const TrainConfig& cfg) {
  Model m;
  m.config = cfg;
  m.generator = Generator<float>(state.generator);
  m.discriminator = state.discriminator;
  m.step = state.step;
  return m;
}

Model Model::load(const std::filesystem::path& checkpoint) {
  TrainConfig cfg;
  const TrainState st = restore_train_state(load_checkpoint(checkpoint), cfg);
  return from_state(st, cfg);
}

Model Model::fresh(const TrainConfig& cfg) { return from_state(init_train_state(cfg), cfg); }

CropWindow Model::window(ImageSize size) const {
  if (size.height < 1 || size.width < 1)
    throw ShapeMismatch("image size " + std::to_string(size.width) + "x" + std::to_string(size.height) +
                        " must be at least 1x1");
  return centered_window(config.latent.coords, size.height, size.width, footprint(), config.noise_padding);
}

LatentImage sample_for_size(const Model& model, ImageSize size, std::uint64_t seed) {
  const CropWindow win = model.window(size);
  Rng rng(seed);
  return sample_latent(model.config.latent, win.latent_h, win.latent_w, win.frame, rng);
}

Grid<float> render(Model& model, const LatentImage& latent, const CropWindow& window) {
  return crop(model.generator.generate(latent, Mode::eval), window.offset_y, window.offset_x, window.height,
              window.width);
}

Grid<float> sample_image(Model& model, ImageSize size, std::uint64_t seed) {
  return render(model, sample_for_size(model, size, seed), model.window(size));
}

namespace {

std::string checkpoint_name(long long step) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "checkpoint_%08lld.ckpt", step);
  return buf;
}

}  // namespace

TrainOutcome cmd_train(const RunConfig& run, const std::optional<std::filesystem::path>& resume,
                       std::ostream* progress) {
  TrainConfig cfg = run.train_config();
  const DatasetSource src = run.dataset();
  const std::filesystem::path dir = run.get("output.dir");
  std::filesystem::create_directories(dir);

  TrainState state;
  if (resume) {
    TrainConfig saved;
    state = restore_train_state(load_checkpoint(*resume), saved);
    if (!(saved.latent == cfg.latent) || !(saved.generator == cfg.generator) ||
        !(saved.discriminator == cfg.discriminator) || saved.seed != cfg.seed)
      throw ConfigMismatch("checkpoint " + resume->string() + " was trained with a different model or seed");
  } else {
    state = init_train_state(cfg);
  }

  TrainOutcome out;
  out.metrics_log = dir / "metrics.log";
  std::ofstream log(out.metrics_log, resume ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write " + out.metrics_log.string());
  const long long start = state.step;

  train(
      state, cfg, src,
      [&](const MetricsRecord& r) {
        log << format_metrics(r) << '\n';
        if (progress && (r.step % 50 == 0 || r.step == cfg.total_steps)) *progress << format_metrics(r) << std::endl;
      },
      [&](const TrainState& s) {
        const std::filesystem::path p = dir / checkpoint_name(s.step);
        save_checkpoint(p, make_checkpoint(s, cfg));
        out.checkpoints.push_back(p);
      });
  log.flush();
  out.steps_run = state.step - start;
  out.final_checkpoint = dir / "final.ckpt";
  std::filesystem::copy_file(out.checkpoints.back(), out.final_checkpoint,
                             std::filesystem::copy_options::overwrite_existing);
  return out;
}

void cmd_sample(const std::filesystem::path& checkpoint, ImageSize size, std::uint64_t seed,
                const std::filesystem::path& out) {
  Model model = Model::load(checkpoint);
  encode_image(out, sample_image(model, size, seed));
}

std::vector<std::filesystem::path> cmd_interpolate(const std::filesystem::path& checkpoint, std::uint64_t seed_a,
                                                   ImageSize size_a, std::uint64_t seed_b, ImageSize size_b, int steps,
                                                   const std::filesystem::path& out_dir) {
  if (steps < 2) throw DomainError("interpolation needs at least 2 steps");
  Model model = Model::load(checkpoint);
  const LatentImage a = sample_for_size(model, size_a, seed_a);
  const LatentImage b = sample_for_size(model, size_b, seed_b);
  std::vector<std::filesystem::path> frames;
  for (int i = 0; i < steps; ++i) {
    const double t = double(i) / double(steps - 1);
    const auto [z, size] =
        interpolate_latents(a, b, t, size_a, size_b, model.footprint(), model.config.noise_padding);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03d.png", i);
    frames.push_back(out_dir / name);
    encode_image(frames.back(), render(model, z, model.window(size)));
  }
  return frames;
}

std::string to_string(TileMode m) { return m == TileMode::strip ? "strip" : "plane"; }

TileMode parse_tile_mode(const std::string& text) {
  if (text == "strip") return TileMode::strip;
  if (text == "plane") return TileMode::plane;
  throw ConfigError("unknown tile mode '" + text + "' (expected strip or plane)");
}

TileResult tile_image(Model& model, const TileOptions& opt) {
  const LatentSpec& spec = model.config.latent;
  const FootprintMap& fp = model.footprint();
  const int stride = static_cast<int>(std::lround(fp.latent_map().scale));
  if (spec.coords.mode == CoordinateMode::linear)
    throw PeriodMismatch("tiling needs a model trained with periodic coordinates");
  const int period = opt.period > 0 ? opt.period : static_cast<int>(std::lround(spec.coords.period_x() / stride));
  const int T = stride * period;
  const bool plane = opt.mode == TileMode::plane;
  const int width = opt.width > 0 ? opt.width : 3 * T;
  const int height = opt.height > 0 ? opt.height : (plane ? 3 * T : T);

  CropWindow win = model.window({height, width});
  Rng rng(opt.seed);
  LatentImage z = sample_tiled(spec, win, period, plane ? TileAxes::xy : TileAxes::x, rng);
  if (opt.semi_periodic) {
    for (int i = 0; i < z.height; ++i)
      for (int j = 0; j < z.width; ++j) {
        const bool first_tile = j < period && (!plane || i < period);
        if (first_tile) continue;
        for (int c = 0; c < z.local.channels(); ++c) z.local.values(c, Eigen::Index(i) * z.width + j) = rng.normal();
      }
  }
  TileResult r;
  r.image = render(model, z, win);
  r.report = seam_report(r.image, T, plane ? T : 0, opt.tolerance);
  return r;
}

SeamReport cmd_tile(const std::filesystem::path& checkpoint, const TileOptions& opt, const std::filesystem::path& out) {
  Model model = Model::load(checkpoint);
  TileResult r = tile_image(model, opt);
  encode_image(out, r.image);
  return r.report;
}

TransplantResult transplant_images(Model& model, ImageSize size, std::uint64_t seed_a, std::uint64_t seed_b,
                                   const LatentRegion& region, ChannelSet channels) {
  const CropWindow win = model.window(size);
  const LatentImage a = sample_for_size(model, size, seed_a);
  const LatentImage b = sample_for_size(model, size, seed_b);
  const LatentImage mixed = transplant(b, a, region, channels);
  return {render(model, a, win), render(model, b, win), render(model, mixed, win)};
}

void cmd_transplant(const std::filesystem::path& checkpoint, ImageSize size, std::uint64_t seed_a,
                    std::uint64_t seed_b, const LatentRegion& region, ChannelSet channels,
                    const std::filesystem::path& out_dir) {
  Model model = Model::load(checkpoint);
  const TransplantResult r = transplant_images(model, size, seed_a, seed_b, region, channels);
  encode_image(out_dir / "a.png", r.a);
  encode_image(out_dir / "b.png", r.b);
  encode_image(out_dir / "transplant.png", r.composite);
}

namespace {

std::vector<int> hidden_widths(const NetworkConfig& cfg) {
  std::vector<int> w;
  for (std::size_t l = 0; l + 1 < cfg.layers.size(); ++l) w.push_back(cfg.layers[l].spec.out_channels);
  return w;
}

CheckResult check_determinism(Model& model, const VerifyOptions& opt) {
  CheckResult r{"determinism", CheckStatus::pass, 0, 1, ""};
  const ImageSize size{64, 64};
  const Grid<float> a = sample_image(model, size, opt.seed + 7);
  const Grid<float> b = sample_image(model, size, opt.seed + 7);
  if (a.values != b.values) {
    r.value += 1;
    r.detail += "repeated seeded samples differ; ";
  }
  const std::string bytes = encode_checkpoint(make_checkpoint(init_train_state(model.config), model.config));
  if (encode_checkpoint(decode_checkpoint(bytes)) != bytes) {
    r.value += 1;
    r.detail += "checkpoint round trip is not byte-identical; ";
  }
  if (r.detail.empty()) r.detail = "seeded sampling repeats exactly; checkpoint round trip is byte-identical";
  r.status = r.value < r.tolerance ? CheckStatus::pass : CheckStatus::fail;
  return r;
}

}  // namespace

VerifyReport run_verify(Model& model, const VerifyOptions& opt) {
  const LatentSpec& spec = model.config.latent;
  const FootprintMap& fp = model.footprint();
  const int stride = static_cast<int>(std::lround(fp.latent_map().scale));
  const int padding = model.config.noise_padding;
  VerifyReport rep;
  Rng rng(opt.seed);

  {
    Rng init(opt.seed + 1);
    Generator<float> narrow(build_generator<float>(narrowed(model.config.generator, opt.shape_width), spec, init));
    CheckResult shape = check_shape_law(narrow, spec, opt.shape_lo, opt.shape_hi);
    const CheckResult own = check_shape_law(model.generator, spec, opt.shape_lo, opt.shape_lo);
    shape.value += own.value;
    shape.detail += "; model forward at n=" + std::to_string(opt.shape_lo) + (own.value == 0 ? " agrees" : " differs");
    shape.status = shape.value < shape.tolerance ? CheckStatus::pass : CheckStatus::fail;
    rep.checks.push_back(shape);
  }
  rep.checks.push_back(check_footprint(model.generator, spec, opt.footprint_latent, opt.footprint_pixels, rng));
  rep.checks.push_back(check_equivariance(model.generator, spec, opt.trials, opt.equivariance_tolerance, rng));
  rep.checks.push_back(check_stitching(model.generator, spec, 64, padding, opt.trials, opt.stitching_tolerance, rng));

  {
    const double px = spec.coords.period_x() / stride;
    const bool own_period = spec.coords.mode != CoordinateMode::linear && px >= 1 && px == std::round(px);
    if (own_period) {
      rep.checks.push_back(check_periodicity(model.generator, spec, int(px), 3, 64, padding,
                                             opt.periodicity_tolerance, rng));
    } else {
      LatentSpec ps = spec;
      ps.coords = CoordinateSpec::periodic(CoordinateMode::periodic_x, spec.coords.reference_height,
                                           spec.coords.reference_width, 4.0 * stride);
      Rng init(opt.seed + 2);
      Generator<float> clone(build_generator<float>(
          generator_config(ps, hidden_widths(model.config.generator),
                           model.config.generator.layers.back().spec.out_channels),
          ps, init));
      CheckResult c = check_periodicity(clone, ps, 4, 3, 64, padding, opt.periodicity_tolerance, rng);
      c.detail += " (random-weight x-periodic clone; the model uses " + to_string(spec.coords.mode) + " coordinates)";
      rep.checks.push_back(c);
    }
  }
  rep.checks.push_back(check_spectral(model.discriminator, opt.spectral_tolerance));
  rep.checks.push_back(check_determinism(model, opt));
  return rep;
}

double generated_patch_distance(Model& model, const DatasetSource& src, int count, int projections, int patch,
                                std::uint64_t seed) {
  if (count < 1) throw EmptySet("patch distance needs at least one crop");
  Rng rng(seed);
  std::vector<Grid<float>> real, fake;
  std::vector<LatentImage> latents;
  std::vector<CropWindow> windows;
  for (int i = 0; i < count; ++i) {
    RealCrop rc = sample_real_crop(src, model.config.latent.coords, model.footprint(), rng, model.config.noise_padding);
    latents.push_back(
        sample_latent(model.config.latent, rc.window.latent_h, rc.window.latent_w, rc.window.frame, rng));
    windows.push_back(rc.window);
    real.push_back(std::move(rc.image));
  }
  const auto raw = model.generator.run(latents, Mode::eval);
  for (std::size_t i = 0; i < raw.size(); ++i)
    fake.push_back(crop(raw[i], windows[i].offset_y, windows[i].offset_x, windows[i].height, windows[i].width));
  if (patch > 0)
    return patch_statistics_distance(extract_patches(real, patch, patch), extract_patches(fake, patch, patch),
                                     projections, seed);
  return patch_statistics_distance(flatten_crops(real), flatten_crops(fake), projections, seed);
}

}  // namespace locogan
