#include <doctest.h>

#include <set>

#include "support.hpp"

using namespace locogan;
using support::reference_stack;

namespace {

LayerSpec tconv(int k, int s, int p) { return {1, 1, k, s, p, true}; }
LayerSpec conv(int k, int s, int p) { return {1, 1, k, s, p, false}; }

// Index relation of one layer, enumerated tap by tap: which outputs does input i touch?
std::set<long long> touched_by(long long i, const LayerSpec& l, long long n_in) {
  std::set<long long> out;
  const long long n_out = layer_output_size(n_in, l);
  for (int t = 0; t < l.kernel; ++t) {
    if (l.transposed) {
      const long long o = i * l.stride - l.padding + t;
      if (o >= 0 && o < n_out) out.insert(o);
    } else {
      for (long long o = 0; o < n_out; ++o)
        if (o * l.stride - l.padding + t == i) out.insert(o);
    }
  }
  return out;
}

// Outputs of the whole stack reachable from latent pixel i.
std::set<long long> reach(long long i, const std::vector<LayerSpec>& stack, long long n) {
  std::set<long long> cur{i};
  for (const auto& l : stack) {
    std::set<long long> next;
    for (long long j : cur)
      for (long long o : touched_by(j, l, n)) next.insert(o);
    n = layer_output_size(n, l);
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

TEST_CASE("layer output size follows the closed forms") {
  CHECK(layer_output_size(10, tconv(4, 2, 3)) == 16);
  CHECK(layer_output_size(16, tconv(4, 2, 3)) == 28);
  for (int n = 1; n < 20; ++n) CHECK(layer_output_size(n, tconv(1, 1, 0)) == n);
  CHECK(layer_output_size(64, conv(4, 2, 1)) == 32);
  CHECK(layer_output_size(4, conv(4, 1, 0)) == 1);
  CHECK_THROWS_AS(layer_output_size(2, tconv(4, 2, 3)), NonPositiveOutput);
}

TEST_CASE("reference stack sizes") {
  const auto stack = reference_stack();
  CHECK(stack_sizes(10, stack) == std::vector<long long>{10, 16, 28, 52, 100, 97});
  CHECK(stack_output_size(12, stack) == 129);
  for (int n = 4; n <= 32; ++n) CHECK(stack_output_size(n, stack) == 16 * n - 63);
  try {
    stack_output_size(3, stack);
    FAIL("expected NonPositiveOutput");
  } catch (const NonPositiveOutput& e) {
    CHECK(e.layer() == 2);
  }
}

TEST_CASE("discriminator trace") {
  const auto d = discriminator_config(2).stack();
  CHECK(stack_sizes(64, d) == std::vector<long long>{64, 32, 16, 8, 4, 1});
}

TEST_CASE("latent size solver") {
  const auto stack = reference_stack();
  CHECK(latent_size_for_target(128, stack) == LatentSolution{12, 0, 129});
  CHECK(latent_size_for_target(1, stack) == LatentSolution{4, 0, 1});
  // Without padding 64 only needs 8 (65 px); one latent stride of noise padding per side gives 10.
  CHECK(latent_size_for_target(64, stack) == LatentSolution{8, 0, 65});
  CHECK(latent_size_for_target(64, stack, 16) == LatentSolution{10, 16, 97});
  CHECK_THROWS_AS(latent_size_for_target(0, stack), ShapeMismatch);

  SUBCASE("monotone and covering") {
    for (int pad : {0, 16, 23}) {
      int prev = 0;
      for (int t = 1; t <= 400; ++t) {
        const LatentSolution s = latent_size_for_target(t, stack, pad);
        CHECK(s.latent >= prev);
        prev = s.latent;
        CHECK(stack_output_size(s.latent, stack) >= t + 2 * pad);
        CHECK(s.crop_offset == (s.raw_output - t) / 2);
        if (s.latent > 4) CHECK(stack_output_size(s.latent - 1, stack) < t + 2 * pad);
      }
    }
  }
}

TEST_CASE("footprint of the identity layer") {
  const std::vector<LayerSpec> id{tconv(1, 1, 0)};
  const FootprintMap fp = receptive_footprint(id);
  for (int o = 0; o < 10; ++o) CHECK(fp.latent_interval(o, 10) == Interval{o, o});
  CHECK(fp.margin == 0);
}

TEST_CASE("reference footprint against enumerated index relations") {
  const auto stack = reference_stack();
  const FootprintMap fp = receptive_footprint(stack);
  CHECK(fp.latent_map().scale == 16.0);
  CHECK(fp.latent_map().offset == -24.0);
  CHECK(fp.margin == 2);

  for (long long n : {4, 6, 9}) {
    const long long out = stack_output_size(n, stack);
    std::vector<std::set<long long>> deps(out);
    for (long long i = 0; i < n; ++i) {
      const auto r = reach(i, stack, n);
      std::set<long long> expected;
      const Interval oi = fp.output_interval(i, n);
      for (long long o = oi.lo; o <= oi.hi; ++o) expected.insert(o);
      CHECK(r == expected);
      for (long long o : r) deps[o].insert(i);
    }
    long long prev_lo = -1, prev_hi = -1;
    for (long long o = 0; o < out; ++o) {
      const Interval iv = fp.latent_interval(o, n);
      REQUIRE_FALSE(iv.empty());
      CHECK(iv.lo >= prev_lo);
      CHECK(iv.hi >= prev_hi);
      prev_lo = iv.lo;
      prev_hi = iv.hi;
      std::set<long long> analytic;
      for (long long i = iv.lo; i <= iv.hi; ++i) analytic.insert(i);
      CHECK(deps[o] == analytic);
    }
  }
}

TEST_CASE("per-layer maps compose to the end-to-end map") {
  const auto stack = reference_stack();
  const FootprintMap fp = receptive_footprint(stack);
  REQUIRE(fp.input_maps.size() == stack.size() + 1);
  CHECK(fp.input_maps.back().scale == 1.0);
  CHECK(fp.input_maps.back().offset == 0.0);
  for (std::size_t l = 0; l < stack.size(); ++l) {
    const LayerSpec& s = stack[l];
    // Input pixel j of a transposed layer lands at output index s*j - p + (k-1)/2 (kernel center).
    const AxisMap local{double(s.stride), (s.kernel - 1) / 2.0 - s.padding};
    const AxisMap composed = fp.input_maps[l + 1].after(local);
    CHECK(composed.scale == doctest::Approx(fp.input_maps[l].scale));
    CHECK(composed.offset == doctest::Approx(fp.input_maps[l].offset));
  }
}

TEST_CASE("grid resampling") {
  Grid<double> g(1, 1, 2);
  g.values << -1, 1;
  const Grid<double> r = resample_grid(g, 1, 3);
  CHECK(r.values(0, 0) == -1.0);
  CHECK(r.values(0, 1) == 0.0);
  CHECK(r.values(0, 2) == 1.0);

  SUBCASE("same size is the identity") {
    Rng rng(3);
    Grid<double> a(2, 5, 7);
    for (Eigen::Index i = 0; i < a.values.size(); ++i) a.values.data()[i] = rng.normal();
    CHECK(resample_grid(a, 5, 7).values == a.values);
  }
  SUBCASE("constant grids stay constant") {
    Grid<double> c(3, 4, 9);
    c.values.setConstant(0.37);
    for (auto [h, w] : {std::pair{1, 1}, {7, 2}, {13, 31}})
      CHECK((resample_grid(c, h, w).values.array() - 0.37).abs().maxCoeff() < 1e-15);
  }
  SUBCASE("affine grids are reproduced exactly") {
    Grid<double> a(1, 6, 11);
    auto f = [](double y, double x) { return 0.3 * y - 1.7 * x + 0.25; };
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 11; ++x) a.at(0, y, x) = f(y, x);
    for (auto [h, w] : {std::pair{3, 4}, {9, 25}, {6, 2}}) {
      const Grid<double> r = resample_grid(a, h, w);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double sy = h == 1 ? 2.5 : y * 5.0 / (h - 1), sx = w == 1 ? 5.0 : x * 10.0 / (w - 1);
          CHECK(std::abs(r.at(0, y, x) - f(sy, sx)) < 1e-6);
        }
    }
  }
  CHECK_THROWS_AS(resample_grid(g, 0, 3), ShapeMismatch);
}
