#include "locogan/latent.hpp"

#include <cmath>
#include <numbers>

namespace locogan {

std::string to_string(CoordinateMode mode) {
  switch (mode) {
    case CoordinateMode::linear: return "linear";
    case CoordinateMode::periodic_x: return "periodic_x";
    case CoordinateMode::periodic_xy: return "periodic_xy";
  }
  return "linear";
}

CoordinateMode parse_coordinate_mode(const std::string& text) {
  if (text == "linear") return CoordinateMode::linear;
  if (text == "periodic_x") return CoordinateMode::periodic_x;
  if (text == "periodic_xy") return CoordinateMode::periodic_xy;
  throw ConfigError("unknown coordinate mode '" + text + "'");
}

std::string to_string(ChannelSet set) {
  switch (set) {
    case ChannelSet::global: return "global";
    case ChannelSet::local: return "local";
    case ChannelSet::both: return "both";
  }
  return "both";
}

ChannelSet parse_channel_set(const std::string& text) {
  if (text == "global") return ChannelSet::global;
  if (text == "local") return ChannelSet::local;
  if (text == "both") return ChannelSet::both;
  throw ConfigError("unknown channel set '" + text + "' (expected global, local or both)");
}

int CoordinateSpec::channels() const {
  switch (mode) {
    case CoordinateMode::linear: return 2;
    case CoordinateMode::periodic_x: return 3;
    case CoordinateMode::periodic_xy: return 4;
  }
  return 2;
}

double CoordinateSpec::world_x(double pixel) const {
  return reference_width == 1 ? 0.0 : 2.0 * pixel / (reference_width - 1) - 1.0;
}

double CoordinateSpec::world_y(double pixel) const {
  return reference_height == 1 ? 0.0 : 2.0 * pixel / (reference_height - 1) - 1.0;
}

double CoordinateSpec::period_x() const {
  if (mode == CoordinateMode::linear || alpha <= 0) return 0.0;
  return std::numbers::pi * (reference_width - 1) / alpha;
}

double CoordinateSpec::period_y() const {
  if (mode != CoordinateMode::periodic_xy || alpha <= 0) return 0.0;
  return std::numbers::pi * (reference_height - 1) / alpha;
}

void CoordinateSpec::validate() const {
  if (reference_height < 1 || reference_width < 1)
    throw ConfigError("coordinate reference extent must be at least 1x1");
  if (mode != CoordinateMode::linear && !(alpha > 0))
    throw ConfigError("periodic coordinates need a positive alpha");
}

CoordinateSpec CoordinateSpec::periodic(CoordinateMode mode, int ref_h, int ref_w, double period_pixels) {
  if (!(period_pixels > 0)) throw ConfigError("coordinate period must be positive");
  CoordinateSpec s{mode, ref_h, ref_w, 0.0};
  s.alpha = std::numbers::pi * std::max(ref_w - 1, 1) / period_pixels;
  return s;
}

Grid<double> coordinate_grid(const CoordinateSpec& spec, const AxisSampling& ys, const AxisSampling& xs) {
  Grid<double> g(spec.channels(), ys.count, xs.count);
  for (int i = 0; i < ys.count; ++i) {
    const double wy = spec.world_y(ys.origin + ys.step * i);
    for (int j = 0; j < xs.count; ++j) {
      const double wx = spec.world_x(xs.origin + xs.step * j);
      auto col = g.values.col(Eigen::Index(i) * xs.count + j);
      switch (spec.mode) {
        case CoordinateMode::linear:
          col << wx, wy;
          break;
        case CoordinateMode::periodic_x:
          col << std::cos(spec.alpha * wx), std::sin(spec.alpha * wx), wy;
          break;
        case CoordinateMode::periodic_xy:
          col << std::cos(spec.alpha * wx), std::sin(spec.alpha * wx), std::cos(spec.alpha * wy),
              std::sin(spec.alpha * wy);
          break;
      }
    }
  }
  return g;
}

void LatentSpec::validate() const {
  if (global_channels < 0 || local_channels < 0 || global_channels + local_channels < 1)
    throw ConfigError("latent needs at least one global or local channel");
  coords.validate();
}

Grid<double> LatentImage::global_grid() const {
  if (edited) return global_field;
  Grid<double> g(spec.global_channels, height, width);
  g.values.colwise() = global_values;
  return g;
}

Grid<double> LatentImage::stacked() const {
  Grid<double> g(spec.total_channels(), height, width);
  const int ng = spec.global_channels, nl = spec.local_channels;
  if (ng > 0) {
    if (edited)
      g.values.topRows(ng) = global_field.values;
    else
      g.values.topRows(ng).colwise() = global_values;
  }
  if (nl > 0) g.values.middleRows(ng, nl) = local.values;
  g.values.bottomRows(coords.channels()) = coords.values;
  return g;
}

void LatentImage::normalize_storage() {
  if (!edited) return;
  const auto& v = global_field.values;
  if (v.cols() == 0) return;
  for (Eigen::Index c = 0; c < v.rows(); ++c)
    if (v.row(c).maxCoeff() != v.row(c).minCoeff()) return;
  global_values = v.col(0);
  global_field = Grid<double>();
  edited = false;
}

bool operator==(const LatentImage& a, const LatentImage& b) {
  return a.spec == b.spec && a.frame == b.frame && a.height == b.height && a.width == b.width &&
         a.edited == b.edited && a.global_values == b.global_values &&
         a.global_field.values == b.global_field.values && a.local.values == b.local.values &&
         a.coords.values == b.coords.values;
}

namespace {

// Smallest distance (latent pixels) from an output pixel's footprint center to the latent edge.
double axis_slack(const FootprintMap& fp, int offset, int size, int latent) {
  const double first = fp.latent_map().inverse(offset);
  const double last = fp.latent_map().inverse(offset + size - 1);
  return std::min({first, last, latent - 1 - first, latent - 1 - last});
}

bool axis_covered(const FootprintMap& fp, int offset, int size, int latent) {
  // Intervals are monotone in the output index, so the two ends decide.
  const Interval first = fp.latent_interval(offset);
  const Interval last = fp.latent_interval(offset + size - 1);
  return first.lo >= 0 && last.hi <= latent - 1 && offset >= 0 &&
         offset + size <= stack_output_size(latent, fp.layers);
}

}  // namespace

CropWindow make_crop_window(int x, int y, int h, int w, const FootprintMap& fp, int padding) {
  if (h < 1 || w < 1) throw ShapeMismatch("crop window must be at least 1x1");
  const LatentSolution sh = latent_size_for_target(h, fp.layers, padding);
  const LatentSolution sw = latent_size_for_target(w, fp.layers, padding);
  CropWindow win;
  win.x = x;
  win.y = y;
  win.height = h;
  win.width = w;
  win.latent_h = sh.latent;
  win.latent_w = sw.latent;
  win.offset_y = sh.crop_offset;
  win.offset_x = sw.crop_offset;
  const AxisMap& m = fp.latent_map();
  win.frame = {x - sw.crop_offset + m.offset, y - sh.crop_offset + m.offset, m.scale};
  win.margin = static_cast<int>(std::floor(
      std::min(axis_slack(fp, win.offset_y, h, win.latent_h), axis_slack(fp, win.offset_x, w, win.latent_w)) + 1e-9));
  return win;
}

CropWindow centered_window(const CoordinateSpec& spec, int h, int w, const FootprintMap& fp, int padding) {
  auto floor_half = [](int d) { return d >= 0 ? d / 2 : -((-d + 1) / 2); };
  return make_crop_window(floor_half(spec.reference_width - w), floor_half(spec.reference_height - h), h, w, fp,
                          padding);
}

Grid<double> make_coordinate_grid(const CoordinateSpec& spec, const CropWindow& window, int target_h, int target_w) {
  const Grid<double> g =
      coordinate_grid(spec, {double(window.y), 1.0, window.height}, {double(window.x), 1.0, window.width});
  return resample_grid(g, target_h, target_w);
}

Grid<double> latent_coordinates(const CoordinateSpec& spec, const LatentFrame& frame, int h, int w) {
  return coordinate_grid(spec, {frame.anchor_y, frame.spacing, h}, {frame.anchor_x, frame.spacing, w});
}

LatentImage sample_latent(const LatentSpec& spec, int h, int w, const LatentFrame& frame, Rng& rng) {
  spec.validate();
  if (h < 1 || w < 1) throw ShapeMismatch("latent must be at least 1x1");
  LatentImage z;
  z.spec = spec;
  z.frame = frame;
  z.height = h;
  z.width = w;
  z.global_values.resize(spec.global_channels);
  for (int c = 0; c < spec.global_channels; ++c) z.global_values[c] = rng.normal();
  z.local = Grid<double>(spec.local_channels, h, w);
  for (int c = 0; c < spec.local_channels; ++c)
    for (Eigen::Index p = 0; p < z.local.pixels(); ++p) z.local.values(c, p) = rng.normal();
  z.coords = latent_coordinates(spec.coords, frame, h, w);
  return z;
}

LatentImage crop_with_noise_padding(const LatentImage& field, const CropWindow& window, const FootprintMap& fp,
                                    Rng& rng) {
  if (!axis_covered(fp, window.offset_y, window.height, window.latent_h) ||
      !axis_covered(fp, window.offset_x, window.width, window.latent_w))
    throw MarginTooSmall("latent window " + std::to_string(window.latent_h) + "x" + std::to_string(window.latent_w) +
                         " does not cover the footprint of a " + std::to_string(window.height) + "x" +
                         std::to_string(window.width) + " crop (required margin " + std::to_string(fp.margin) + ")");
  LatentImage z;
  z.spec = field.spec;
  z.frame = window.frame;
  z.height = window.latent_h;
  z.width = window.latent_w;
  z.global_values = field.global_values;
  z.local = Grid<double>(field.spec.local_channels, z.height, z.width);
  for (int c = 0; c < z.local.channels(); ++c)
    for (Eigen::Index p = 0; p < z.local.pixels(); ++p) z.local.values(c, p) = rng.normal();
  if (field.edited) {
    z.edited = true;
    z.global_field = Grid<double>(field.spec.global_channels, z.height, z.width);
    z.global_field.values.colwise() = field.global_values;
  }

  const double dy = (window.frame.anchor_y - field.frame.anchor_y) / field.frame.spacing;
  const double dx = (window.frame.anchor_x - field.frame.anchor_x) / field.frame.spacing;
  const bool aligned = window.frame.spacing == field.frame.spacing && dy == std::floor(dy) && dx == std::floor(dx);
  if (aligned) {
    const int sy = static_cast<int>(dy), sx = static_cast<int>(dx);
    for (int i = 0; i < z.height; ++i) {
      const int u = i + sy;
      if (u < 0 || u >= field.height) continue;
      for (int j = 0; j < z.width; ++j) {
        const int v = j + sx;
        if (v < 0 || v >= field.width) continue;
        z.local.values.col(Eigen::Index(i) * z.width + j) = field.local.values.col(Eigen::Index(u) * field.width + v);
        if (field.edited)
          z.global_field.values.col(Eigen::Index(i) * z.width + j) =
              field.global_field.values.col(Eigen::Index(u) * field.width + v);
      }
    }
  }
  z.normalize_storage();
  z.coords = latent_coordinates(z.spec.coords, z.frame, z.height, z.width);
  return z;
}

LatentImage tile_periodic(const LatentImage& latent, int period, TileAxes axes) {
  const CoordinateSpec& cs = latent.spec.coords;
  const double want = latent.frame.spacing * period;
  auto matches = [&](double have) { return std::abs(have - want) <= 1e-6 * std::max(1.0, want); };
  if (period < 1) throw PeriodMismatch("period must be positive");
  if (cs.mode == CoordinateMode::linear)
    throw PeriodMismatch("tiling needs periodic coordinates, got linear");
  if (!matches(cs.period_x()))
    throw PeriodMismatch("coordinate period " + std::to_string(cs.period_x()) + " px does not match latent period " +
                         std::to_string(period) + " (" + std::to_string(want) + " px)");
  if (latent.width % period != 0) throw PeriodMismatch("period does not divide the latent width");
  if (axes == TileAxes::xy) {
    if (cs.mode != CoordinateMode::periodic_xy) throw PeriodMismatch("plane tiling needs periodic_xy coordinates");
    if (!matches(cs.period_y())) throw PeriodMismatch("vertical coordinate period does not match latent period");
    if (latent.height % period != 0) throw PeriodMismatch("period does not divide the latent height");
  }
  LatentImage out = latent;
  for (int i = 0; i < out.height; ++i) {
    const int u = axes == TileAxes::xy ? i % period : i;
    for (int j = 0; j < out.width; ++j)
      out.local.values.col(Eigen::Index(i) * out.width + j) =
          latent.local.values.col(Eigen::Index(u) * latent.width + j % period);
  }
  return out;
}

LatentImage sample_tiled(const LatentSpec& spec, CropWindow& window, int period, TileAxes axes, Rng& rng) {
  if (period < 1) throw PeriodMismatch("period must be positive");
  auto round_up = [&](int n) { return (n + period - 1) / period * period; };
  window.latent_w = round_up(window.latent_w);
  if (axes == TileAxes::xy) window.latent_h = round_up(window.latent_h);
  return tile_periodic(sample_latent(spec, window.latent_h, window.latent_w, window.frame, rng), period, axes);
}

LatentImage transplant(const LatentImage& dst, const LatentImage& src, const LatentRegion& region,
                       ChannelSet channels) {
  if (dst.height != src.height || dst.width != src.width || !(dst.spec == src.spec))
    throw ShapeMismatch("transplant needs latents of equal shape and spec");
  if (region.width < 0 || region.height < 0 || region.x < 0 || region.y < 0 ||
      region.x + region.width > dst.width || region.y + region.height > dst.height)
    throw RegionOutOfBounds("region " + std::to_string(region.x) + "," + std::to_string(region.y) + "," +
                            std::to_string(region.width) + "," + std::to_string(region.height) +
                            " exceeds latent " + std::to_string(dst.width) + "x" + std::to_string(dst.height));
  LatentImage out = dst;
  const bool take_global = channels != ChannelSet::local;
  const bool take_local = channels != ChannelSet::global;
  Grid<double> src_global;
  if (take_global) {
    out.global_field = dst.global_grid();
    out.edited = true;
    src_global = src.global_grid();
  }
  for (int i = region.y; i < region.y + region.height; ++i)
    for (int j = region.x; j < region.x + region.width; ++j) {
      const Eigen::Index p = Eigen::Index(i) * dst.width + j;
      if (take_global) out.global_field.values.col(p) = src_global.values.col(p);
      if (take_local) out.local.values.col(p) = src.local.values.col(p);
    }
  out.normalize_storage();
  return out;
}

std::pair<LatentImage, ImageSize> interpolate_latents(const LatentImage& a, const LatentImage& b, double t,
                                                      ImageSize size_a, ImageSize size_b, const FootprintMap& fp,
                                                      int padding) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("interpolation weight must lie in [0, 1]");
  if (!(a.spec == b.spec)) throw ConfigMismatch("interpolated latents must share a latent spec");
  const ImageSize target{static_cast<int>(std::lround((1 - t) * size_a.height + t * size_b.height)),
                         static_cast<int>(std::lround((1 - t) * size_a.width + t * size_b.width))};
  const CropWindow win = centered_window(a.spec.coords, target.height, target.width, fp, padding);

  LatentImage out;
  out.spec = a.spec;
  out.frame = win.frame;
  out.height = win.latent_h;
  out.width = win.latent_w;
  const auto la = resample_grid(a.local, out.height, out.width);
  const auto lb = resample_grid(b.local, out.height, out.width);
  out.local = la;
  out.local.values = (1 - t) * la.values + t * lb.values;
  if (a.edited || b.edited) {
    const auto ga = resample_grid(a.global_grid(), out.height, out.width);
    const auto gb = resample_grid(b.global_grid(), out.height, out.width);
    out.global_field = ga;
    out.global_field.values = (1 - t) * ga.values + t * gb.values;
    out.edited = true;
    out.global_values = (1 - t) * a.global_values + t * b.global_values;
    out.normalize_storage();
  } else {
    out.global_values = (1 - t) * a.global_values + t * b.global_values;
  }
  out.coords = latent_coordinates(out.spec.coords, out.frame, out.height, out.width);
  return {out, target};
}

}  // namespace locogan
