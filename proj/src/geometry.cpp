#include "locogan/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace locogan {
namespace {

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long long ceil_div(long long a, long long b) { return -floor_div(-a, b); }

long long raw_size(long long n, const LayerSpec& l) {
  if (l.transposed) return (n - 1) * l.stride - 2LL * l.padding + l.kernel;
  return floor_div(n + 2LL * l.padding - l.kernel, l.stride) + 1;
}

// Input indices that can reach outputs [lo, hi] of one layer.
Interval back_through(const Interval& out, const LayerSpec& l) {
  if (l.transposed)
    return {ceil_div(out.lo + l.padding - l.kernel + 1, l.stride), floor_div(out.hi + l.padding, l.stride)};
  return {out.lo * l.stride - l.padding, out.hi * l.stride - l.padding + l.kernel - 1};
}

Interval forward_through(const Interval& in, const LayerSpec& l) {
  if (l.transposed)
    return {in.lo * l.stride - l.padding, in.hi * l.stride - l.padding + l.kernel - 1};
  return {ceil_div(in.lo + l.padding - l.kernel + 1, l.stride), floor_div(in.hi + l.padding, l.stride)};
}

Interval clip(Interval v, long long size) {
  return {std::max(v.lo, 0LL), std::min(v.hi, size - 1)};
}

}  // namespace

long long layer_output_size(long long n, const LayerSpec& layer) {
  if (n < 1) throw NonPositiveOutput(1, n);
  const long long out = raw_size(n, layer);
  if (out < 1) throw NonPositiveOutput(1, out);
  return out;
}

std::vector<long long> stack_sizes(long long n, LayerStack layers) {
  std::vector<long long> sizes{n};
  if (n < 1) throw NonPositiveOutput(0, n);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const long long out = raw_size(sizes.back(), layers[i]);
    if (out < 1) throw NonPositiveOutput(static_cast<int>(i) + 1, out);
    sizes.push_back(out);
  }
  return sizes;
}

long long stack_output_size(long long n, LayerStack layers) { return stack_sizes(n, layers).back(); }

LatentSolution latent_size_for_target(long long target, LayerStack layers, int padding) {
  if (target < 1) throw ShapeMismatch("latent_size_for_target: target must be positive");
  if (padding < 0) throw ShapeMismatch("latent_size_for_target: padding must be non-negative");
  if (layers.empty()) return {static_cast<int>(target), 0, static_cast<int>(target)};
  for (long long n = 1;; ++n) {
    long long out;
    try {
      out = stack_output_size(n, layers);
    } catch (const NonPositiveOutput&) {
      continue;
    }
    if (out >= target + 2LL * padding)
      return {static_cast<int>(n), static_cast<int>((out - target) / 2), static_cast<int>(out)};
    if (n > (1LL << 20)) throw ShapeMismatch("latent_size_for_target: stack does not grow");
  }
}

Interval FootprintMap::latent_interval(long long o) const {
  Interval v{o, o};
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) v = back_through(v, *it);
  return v;
}

Interval FootprintMap::latent_interval(long long o, long long latent_size) const {
  const auto sizes = stack_sizes(latent_size, layers);
  Interval v = clip({o, o}, sizes.back());
  for (std::size_t l = layers.size(); l-- > 0;) v = clip(back_through(v, layers[l]), sizes[l]);
  return v;
}

Interval FootprintMap::output_interval(long long i, long long latent_size) const {
  const auto sizes = stack_sizes(latent_size, layers);
  Interval v = clip({i, i}, sizes.front());
  for (std::size_t l = 0; l < layers.size(); ++l) v = clip(forward_through(v, layers[l]), sizes[l + 1]);
  return v;
}

FootprintMap receptive_footprint(LayerStack layers) {
  FootprintMap fp;
  fp.layers.assign(layers.begin(), layers.end());
  fp.input_maps.assign(layers.size() + 1, AxisMap{});
  for (std::size_t l = layers.size(); l-- > 0;) {
    const LayerSpec& s = layers[l];
    const double half = (s.kernel - 1) / 2.0;
    const AxisMap local = s.transposed ? AxisMap{double(s.stride), half - s.padding}
                                       : AxisMap{1.0 / s.stride, (s.padding - half) / s.stride};
    fp.input_maps[l] = fp.input_maps[l + 1].after(local);
  }
  // The interval pattern repeats with the end-to-end integer scale; scan a few periods.
  const long long period = std::max<long long>(1, std::llround(std::abs(fp.latent_map().scale)));
  double widest = 0.0;
  for (long long o = 0; o < 4 * period; ++o) {
    const Interval v = fp.latent_interval(o);
    const double center = fp.latent_map().inverse(double(o));
    widest = std::max({widest, center - double(v.lo), double(v.hi) - center});
  }
  fp.margin = static_cast<int>(std::ceil(widest - 1e-9));
  return fp;
}

}  // namespace locogan
