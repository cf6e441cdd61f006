#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>

#include "locogan/geometry.hpp"
#include "locogan/random.hpp"

namespace locogan {

enum class CoordinateMode { linear, periodic_x, periodic_xy };

std::string to_string(CoordinateMode mode);
CoordinateMode parse_coordinate_mode(const std::string& text);

/// How full-image pixel positions become coordinate channels.
///
/// Pixel i along an axis of the reference extent H maps to the world value
/// 2i/(H-1) - 1, so the reference corners sit exactly at -1 and 1. Periodic
/// modes replace a world value u by (cos(alpha u), sin(alpha u)).
struct CoordinateSpec {
  CoordinateMode mode = CoordinateMode::linear;
  int reference_height = 128;
  int reference_width = 128;
  double alpha = 0.0;

  int channels() const;
  double world_x(double pixel) const;
  double world_y(double pixel) const;
  /// Output-pixel period implied by alpha along x (resp. y); 0 for linear mode.
  double period_x() const;
  double period_y() const;
  void validate() const;

  /// Periodic spec whose coordinates repeat every `period_pixels` output pixels along x.
  static CoordinateSpec periodic(CoordinateMode mode, int ref_h, int ref_w, double period_pixels);

  friend bool operator==(const CoordinateSpec&, const CoordinateSpec&) = default;
};

/// Analytic coordinate channels at pixel positions origin + step * k (full-image frame).
Grid<double> coordinate_grid(const CoordinateSpec& spec, const AxisSampling& ys, const AxisSampling& xs);

struct LatentSpec {
  int global_channels = 16;
  int local_channels = 2;
  CoordinateSpec coords;

  int value_channels() const { return global_channels + local_channels; }
  int total_channels() const { return value_channels() + coords.channels(); }
  void validate() const;
  friend bool operator==(const LatentSpec&, const LatentSpec&) = default;
};

/// Placement of a latent in the full-image frame: latent pixel (i, j) has its
/// output footprint centered at full-image pixel (anchor_y + spacing i, anchor_x + spacing j).
struct LatentFrame {
  double anchor_x = 0.0;
  double anchor_y = 0.0;
  double spacing = 1.0;
  friend bool operator==(const LatentFrame&, const LatentFrame&) = default;
};

/// Noise image fed to the generator.
struct LatentImage {
  LatentSpec spec;
  LatentFrame frame;
  int height = 0;
  int width = 0;
  /// One value per global (master plan) channel.
  Eigen::VectorXd global_values;
  /// Per-pixel global channels; only populated when `edited`.
  Grid<double> global_field;
  bool edited = false;
  Grid<double> local;
  Grid<double> coords;

  /// Global channels as a spatial array, whichever storage is active.
  Grid<double> global_grid() const;
  /// Generator input: global, local, then coordinate channels.
  Grid<double> stacked() const;
  /// Collapses a per-pixel global field back to constants when it is constant.
  void normalize_storage();

  friend bool operator==(const LatentImage& a, const LatentImage& b);
};

/// Output window in the full-image frame, with the latent that renders it.
struct CropWindow {
  int x = 0;
  int y = 0;
  int height = 1;
  int width = 1;
  int latent_h = 1;
  int latent_w = 1;
  /// Position of the window inside the raw generator output.
  int offset_y = 0;
  int offset_x = 0;
  LatentFrame frame;
  /// Smallest latent slack (pixels) between an output pixel's footprint center and the latent edge.
  int margin = 0;
};

/// Window of size h x w at (x, y) rendered by the smallest latent whose raw
/// output also holds `padding` output pixels of noise padding on each side.
CropWindow make_crop_window(int x, int y, int h, int w, const FootprintMap& fp, int padding = 0);

/// Window of size h x w centered on the coordinate reference extent.
CropWindow centered_window(const CoordinateSpec& spec, int h, int w, const FootprintMap& fp, int padding = 0);

/// Coordinates at the window's pixel centers, resampled to target_h x target_w.
Grid<double> make_coordinate_grid(const CoordinateSpec& spec, const CropWindow& window, int target_h, int target_w);

/// Coordinate channels for a latent placed at `frame`.
Grid<double> latent_coordinates(const CoordinateSpec& spec, const LatentFrame& frame, int h, int w);

/// Global values drawn first (one per channel), then local values in raster order.
LatentImage sample_latent(const LatentSpec& spec, int h, int w, const LatentFrame& frame, Rng& rng);

/// Latent for `window`, copying local noise from `field` where the lattices
/// align and drawing fresh noise elsewhere. Throws MarginTooSmall when the
/// latent window does not cover every output pixel's footprint.
LatentImage crop_with_noise_padding(const LatentImage& field, const CropWindow& window,
                                    const FootprintMap& fp, Rng& rng);

enum class TileAxes { x, xy };

/// Repeats the first `period` latent columns (and rows, for xy) across the latent.
LatentImage tile_periodic(const LatentImage& latent, int period, TileAxes axes);

/// Rounds the window's latent up to whole periods (width; height too for xy),
/// samples a latent there and tiles its first period.
LatentImage sample_tiled(const LatentSpec& spec, CropWindow& window, int period, TileAxes axes, Rng& rng);

enum class ChannelSet { global, local, both };

std::string to_string(ChannelSet set);
ChannelSet parse_channel_set(const std::string& text);

struct LatentRegion {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

LatentImage transplant(const LatentImage& dst, const LatentImage& src, const LatentRegion& region, ChannelSet channels);

struct ImageSize {
  int height = 0;
  int width = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Mixes two latents rendered at possibly different image sizes. The target
/// image size interpolates linearly; latents are resampled to the target
/// latent size before mixing and coordinates rebuilt on the centered window.
std::pair<LatentImage, ImageSize> interpolate_latents(const LatentImage& a, const LatentImage& b, double t,
                                                      ImageSize size_a, ImageSize size_b, const FootprintMap& fp,
                                                      int padding = 0);

}  // namespace locogan
