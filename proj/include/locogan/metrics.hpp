#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "locogan/geometry.hpp"

namespace locogan {

/// Exact one-dimensional transport (W1) distance between two empirical
/// distributions: the integral of |F - G| over the merged support.
double transport_distance_1d(std::vector<double> a, std::vector<double> b);

/// Sliced transport distance between two sets of flattened patches (one per
/// column). Directions are unit Gaussian draws from `seed`; the result is the
/// mean over projections of the 1-D transport distance.
double patch_statistics_distance(const Eigen::MatrixXd& real, const Eigen::MatrixXd& generated, int projections,
                                 std::uint64_t seed);

/// Flattens every crop into one column.
Eigen::MatrixXd flatten_crops(const std::vector<Grid<float>>& crops);

/// All `size` x `size` sub-patches on a `stride` lattice, flattened into columns.
Eigen::MatrixXd extract_patches(const std::vector<Grid<float>>& images, int size, int stride);

struct SeamReport {
  int period_x = 0;
  int period_y = 0;
  double max_x = 0;
  double mean_x = 0;
  double max_y = 0;
  double mean_y = 0;
  double tolerance = 0;
  bool pass = false;

  double max_discrepancy() const { return std::max(max_x, max_y); }
  std::string to_json() const;
};

/// Compares pixel (y, x) with (y, x + period_x) (and (y + period_y, x)) over
/// the whole image; period 0 skips an axis.
SeamReport seam_report(const Grid<float>& image, int period_x, int period_y, double tolerance);

}  // namespace locogan
