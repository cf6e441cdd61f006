#pragma once

#include <string>
#include <vector>

#include "locogan/latent.hpp"
#include "locogan/model.hpp"
#include "locogan/random.hpp"

namespace locogan {

enum class CheckStatus { pass, fail, skipped };

std::string to_string(CheckStatus s);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  /// Measured quantity (max error, mismatch count, ...); compared against `tolerance`.
  double value = 0;
  double tolerance = 0;
  std::string detail;
};

/// Same kernel geometry and coordinate plan, every hidden width set to `width`.
NetworkConfig narrowed(const NetworkConfig& cfg, int width);

/// Latent rows [y, y + h) and columns [x, x + w) of `field`, with the frame
/// moved accordingly and coordinates rebuilt.
LatentImage sub_latent(const LatentImage& field, int y, int x, int h, int w);

/// Analytic output size against a real forward pass for every latent size in
/// [lo, hi], plus 16n - 63 when the stack has the reference geometry.
CheckResult check_shape_law(Generator<float>& gen, const LatentSpec& spec, int lo, int hi);

/// Perturbs every latent pixel of an n x n latent and compares the set of
/// latent pixels that move each sampled output pixel with the analytic interval.
CheckResult check_footprint(Generator<float>& gen, const LatentSpec& spec, int n, int pixels, Rng& rng);

/// One-latent-pixel shifts (alternating x and y) against output shifts of one stride.
CheckResult check_equivariance(Generator<float>& gen, const LatentSpec& spec, int trials, double tol, Rng& rng);

/// Two overlapping crops cut from one latent field must agree on their overlap.
CheckResult check_stitching(Generator<float>& gen, const LatentSpec& spec, int crop, int padding, int trials,
                            double tol, Rng& rng);

/// Generates a strip `periods` periods wide from a tiled latent and measures
/// column-period agreement. The spec must use x-periodic coordinates.
CheckResult check_periodicity(Generator<float>& gen, const LatentSpec& spec, int period, int periods, int height,
                              int padding, double tol, Rng& rng);

/// Largest singular value of W / sigma after iterating the stored power
/// iteration to convergence, against a symmetric eigendecomposition.
CheckResult check_spectral(const Weights<float>& disc, double tol);

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool pass() const;
  std::string to_json() const;
};

}  // namespace locogan
