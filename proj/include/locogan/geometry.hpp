#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "locogan/errors.hpp"

namespace locogan {

/// One convolution (or transposed convolution) layer of a stack.
/// Channel counts include any coordinate channels concatenated to the input.
struct LayerSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  bool transposed = false;

  bool valid() const {
    return kernel >= 1 && stride >= 1 && padding >= 0 && in_channels >= 1 &&
           out_channels >= 1;
  }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

using LayerStack = std::span<const LayerSpec>;

/// Spatial size after one layer; throws NonPositiveOutput naming layer 1.
long long layer_output_size(long long n, const LayerSpec& layer);

/// Spatial size after the whole stack; NonPositiveOutput names the layer.
long long stack_output_size(long long n, LayerStack layers);

/// Every intermediate size, starting with n itself.
std::vector<long long> stack_sizes(long long n, LayerStack layers);

struct LatentSolution {
  int latent = 0;
  int crop_offset = 0;
  int raw_output = 0;
  friend bool operator==(const LatentSolution&, const LatentSolution&) = default;
};

/// Smallest latent size whose raw output covers `target` plus `padding`
/// output pixels of noise padding on each side, and the offset of the
/// centered target window inside the raw output.
LatentSolution latent_size_for_target(long long target, LayerStack layers, int padding = 0);

/// Affine map from a layer pixel index to a (fractional) output pixel.
struct AxisMap {
  double scale = 1.0;
  double offset = 0.0;

  double operator()(double index) const { return scale * index + offset; }
  double inverse(double position) const { return (position - offset) / scale; }
  /// this(inner(i))
  AxisMap after(const AxisMap& inner) const {
    return {scale * inner.scale, scale * inner.offset + offset};
  }
};

struct Interval {
  long long lo = 0;
  long long hi = -1;
  bool empty() const { return hi < lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Receptive-field bookkeeping for a stack.
///
/// `input_maps[l]` sends pixel j of the input of layer l to the output pixel
/// at the center of its footprint; `input_maps[0]` is the latent map and the
/// last entry (index layers.size()) is the identity on the output.
struct FootprintMap {
  std::vector<LayerSpec> layers;
  std::vector<AxisMap> input_maps;
  /// Latent pixels on either side of an output pixel's footprint center that
  /// may influence it (rounded up).
  int margin = 0;

  const AxisMap& latent_map() const { return input_maps.front(); }

  /// Latent indices influencing output pixel `o`, clipped to [0, latent_size).
  Interval latent_interval(long long o, long long latent_size) const;
  /// Same without clipping (the translation-invariant pattern).
  Interval latent_interval(long long o) const;
  /// Output pixels influenced by latent pixel `i` of a latent of `latent_size`,
  /// clipped to the raw output.
  Interval output_interval(long long i, long long latent_size) const;
};

FootprintMap receptive_footprint(LayerStack layers);

/// Planar multi-channel array: values(c, y * width + x).
template <typename Scalar>
struct Grid {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int height = 0;
  int width = 0;
  Matrix values;

  Grid() = default;
  Grid(int channels, int h, int w) : height(h), width(w), values(Matrix::Zero(channels, Eigen::Index(h) * w)) {}

  int channels() const { return static_cast<int>(values.rows()); }
  Eigen::Index pixels() const { return Eigen::Index(height) * width; }
  Scalar& at(int c, int y, int x) { return values(c, Eigen::Index(y) * width + x); }
  Scalar at(int c, int y, int x) const { return values(c, Eigen::Index(y) * width + x); }

  template <typename Other>
  Grid<Other> cast() const {
    Grid<Other> g;
    g.height = height;
    g.width = width;
    g.values = values.template cast<Other>();
    return g;
  }
};

/// Sampling positions along one axis: index k reads source position origin + step * k.
struct AxisSampling {
  double origin = 0.0;
  double step = 1.0;
  int count = 1;
};

/// Bilinear sampling at arbitrary affine positions; positions outside the
/// source are clamped to its border.
template <typename Scalar>
Grid<Scalar> sample_grid(const Grid<Scalar>& g, const AxisSampling& ys, const AxisSampling& xs) {
  Grid<Scalar> out(g.channels(), ys.count, xs.count);
  auto locate = [](double pos, int size, int& i0, double& t) {
    if (size == 1) {
      i0 = 0;
      t = 0.0;
      return;
    }
    pos = std::clamp(pos, 0.0, double(size - 1));
    i0 = std::min(static_cast<int>(std::floor(pos)), size - 2);
    t = pos - i0;
  };
  for (int oy = 0; oy < ys.count; ++oy) {
    int y0;
    double ty;
    locate(ys.origin + ys.step * oy, g.height, y0, ty);
    const int y1 = g.height == 1 ? 0 : y0 + 1;
    for (int ox = 0; ox < xs.count; ++ox) {
      int x0;
      double tx;
      locate(xs.origin + xs.step * ox, g.width, x0, tx);
      const int x1 = g.width == 1 ? 0 : x0 + 1;
      const Scalar w00 = Scalar((1 - ty) * (1 - tx)), w01 = Scalar((1 - ty) * tx);
      const Scalar w10 = Scalar(ty * (1 - tx)), w11 = Scalar(ty * tx);
      const auto c00 = g.values.col(Eigen::Index(y0) * g.width + x0);
      const auto c01 = g.values.col(Eigen::Index(y0) * g.width + x1);
      const auto c10 = g.values.col(Eigen::Index(y1) * g.width + x0);
      const auto c11 = g.values.col(Eigen::Index(y1) * g.width + x1);
      out.values.col(Eigen::Index(oy) * xs.count + ox) = w00 * c00 + w01 * c01 + w10 * c10 + w11 * c11;
    }
  }
  return out;
}

/// Endpoint-aligned sampling of `count` points across a source axis of `size`.
inline AxisSampling aligned_axis(int size, int count) {
  if (count == 1) return {(size - 1) / 2.0, 0.0, 1};
  return {0.0, double(size - 1) / double(count - 1), count};
}

/// Bilinear resize with corner pixels aligned.
template <typename Scalar>
Grid<Scalar> resample_grid(const Grid<Scalar>& g, int target_h, int target_w) {
  if (g.height < 1 || g.width < 1 || target_h < 1 || target_w < 1)
    throw ShapeMismatch("resample_grid: sizes must be positive");
  if (target_h == g.height && target_w == g.width) return g;
  return sample_grid(g, aligned_axis(g.height, target_h), aligned_axis(g.width, target_w));
}

}  // namespace locogan
