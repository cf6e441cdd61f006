#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "locogan/checkpoint.hpp"
#include "locogan/config.hpp"
#include "locogan/metrics.hpp"
#include "locogan/verify.hpp"

namespace locogan {

/// A generator/discriminator pair with the configuration it was built with.
struct Model {
  TrainConfig config;
  Generator<float> generator;
  Weights<float> discriminator;
  long long step = 0;

  static Model from_state(const TrainState& state, const TrainConfig& cfg);
  static Model load(const std::filesystem::path& checkpoint);
  /// Freshly initialized weights for `cfg` (same draws as training step 0).
  static Model fresh(const TrainConfig& cfg);

  const FootprintMap& footprint() const { return generator.footprint(); }
  /// Window of the requested size centered on the coordinate reference extent.
  CropWindow window(ImageSize size) const;
};

/// Latent for a centered image of `size`, drawn from Rng(seed).
LatentImage sample_for_size(const Model& model, ImageSize size, std::uint64_t seed);

/// Generates `latent` (eval mode) and cuts out `window`.
Grid<float> render(Model& model, const LatentImage& latent, const CropWindow& window);

Grid<float> sample_image(Model& model, ImageSize size, std::uint64_t seed);

struct TrainOutcome {
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path final_checkpoint;
  std::filesystem::path metrics_log;
  long long steps_run = 0;
};

/// Trains from the configuration (or resumes from `resume`), writing
/// checkpoint_<step>.ckpt files, final.ckpt and metrics.log to output.dir.
TrainOutcome cmd_train(const RunConfig& run, const std::optional<std::filesystem::path>& resume = std::nullopt,
                       std::ostream* progress = nullptr);

void cmd_sample(const std::filesystem::path& checkpoint, ImageSize size, std::uint64_t seed,
                const std::filesystem::path& out);

/// Writes frame_000.png ... into `out_dir`; returns the frame paths.
std::vector<std::filesystem::path> cmd_interpolate(const std::filesystem::path& checkpoint, std::uint64_t seed_a,
                                                   ImageSize size_a, std::uint64_t seed_b, ImageSize size_b, int steps,
                                                   const std::filesystem::path& out_dir);

enum class TileMode { strip, plane };

std::string to_string(TileMode m);
TileMode parse_tile_mode(const std::string& text);

struct TileOptions {
  TileMode mode = TileMode::strip;
  /// Latent period; 0 takes the model's coordinate period.
  int period = 0;
  /// Output size; 0 means three periods (and the training crop height for strips).
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
  /// Fresh local noise per tile (shared coordinates and global channels).
  bool semi_periodic = false;
  double tolerance = 0.05;
};

struct TileResult {
  Grid<float> image;
  SeamReport report;
};

TileResult tile_image(Model& model, const TileOptions& opt);
SeamReport cmd_tile(const std::filesystem::path& checkpoint, const TileOptions& opt, const std::filesystem::path& out);

struct TransplantResult {
  Grid<float> a;
  Grid<float> b;
  Grid<float> composite;
};

/// Moves `region` (latent indices) of seed_a's latent into seed_b's.
TransplantResult transplant_images(Model& model, ImageSize size, std::uint64_t seed_a, std::uint64_t seed_b,
                                   const LatentRegion& region, ChannelSet channels);
void cmd_transplant(const std::filesystem::path& checkpoint, ImageSize size, std::uint64_t seed_a,
                    std::uint64_t seed_b, const LatentRegion& region, ChannelSet channels,
                    const std::filesystem::path& out_dir);

struct VerifyOptions {
  std::uint64_t seed = 0;
  int trials = 20;
  int footprint_pixels = 100;
  int footprint_latent = 8;
  int shape_lo = 4;
  int shape_hi = 32;
  /// Width of the clone that runs the shape law across all latent sizes.
  int shape_width = 8;
  double equivariance_tolerance = 1e-4;
  double stitching_tolerance = 1e-4;
  double periodicity_tolerance = 1e-3;
  double spectral_tolerance = 1e-3;
};

VerifyReport run_verify(Model& model, const VerifyOptions& opt);

/// Patch-statistics distance between `count` real crops of the dataset and
/// generated crops at the same windows.
double generated_patch_distance(Model& model, const DatasetSource& src, int count, int projections, int patch,
                                std::uint64_t seed);

}  // namespace locogan
