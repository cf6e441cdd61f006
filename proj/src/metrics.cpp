#include "locogan/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "locogan/errors.hpp"
#include "locogan/random.hpp"

namespace locogan {

double transport_distance_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw EmptySet("transport distance of an empty set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double x = std::min(a.front(), b.front()), total = 0;
  while (i < a.size() || j < b.size()) {
    const double next = j >= b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
    total += std::abs(double(i) / na - double(j) / nb) * (next - x);
    x = next;
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
  }
  return total;
}

double patch_statistics_distance(const Eigen::MatrixXd& real, const Eigen::MatrixXd& generated, int projections,
                                 std::uint64_t seed) {
  if (real.cols() == 0 || generated.cols() == 0) throw EmptySet("patch sets must be non-empty");
  if (real.rows() != generated.rows()) throw ShapeMismatch("patch sets have different patch sizes");
  if (projections < 1) throw DomainError("at least one projection is required");
  Rng rng(seed);
  double sum = 0;
  Eigen::VectorXd dir(real.rows());
  for (int k = 0; k < projections; ++k) {
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
    dir.normalize();
    const Eigen::VectorXd pa = real.transpose() * dir;
    const Eigen::VectorXd pb = generated.transpose() * dir;
    sum += transport_distance_1d({pa.data(), pa.data() + pa.size()}, {pb.data(), pb.data() + pb.size()});
  }
  return sum / projections;
}

Eigen::MatrixXd flatten_crops(const std::vector<Grid<float>>& crops) {
  if (crops.empty()) throw EmptySet("no crops to flatten");
  const Eigen::Index n = crops.front().values.size();
  Eigen::MatrixXd out(n, Eigen::Index(crops.size()));
  for (std::size_t i = 0; i < crops.size(); ++i) {
    if (crops[i].values.size() != n) throw ShapeMismatch("crops differ in size");
    out.col(Eigen::Index(i)) = crops[i].values.cast<double>().reshaped();
  }
  return out;
}

Eigen::MatrixXd extract_patches(const std::vector<Grid<float>>& images, int size, int stride) {
  std::vector<Grid<float>> patches;
  for (const auto& img : images)
    for (int y = 0; y + size <= img.height; y += stride)
      for (int x = 0; x + size <= img.width; x += stride) {
        Grid<float> p(img.channels(), size, size);
        for (int i = 0; i < size; ++i)
          p.values.middleCols(Eigen::Index(i) * size, size) =
              img.values.middleCols(Eigen::Index(y + i) * img.width + x, size);
        patches.push_back(std::move(p));
      }
  return flatten_crops(patches);
}

std::string SeamReport::to_json() const {
  nlohmann::ordered_json j;
  j["period_x"] = period_x;
  j["period_y"] = period_y;
  j["max_x"] = max_x;
  j["mean_x"] = mean_x;
  j["max_y"] = max_y;
  j["mean_y"] = mean_y;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  return j.dump(2);
}

SeamReport seam_report(const Grid<float>& image, int period_x, int period_y, double tolerance) {
  SeamReport r;
  r.period_x = period_x;
  r.period_y = period_y;
  r.tolerance = tolerance;
  auto axis = [&](int dy, int dx, double& max_d, double& mean_d) {
    double sum = 0;
    long long count = 0;
    for (int y = 0; y + dy < image.height; ++y)
      for (int x = 0; x + dx < image.width; ++x) {
        const double d = (image.values.col(Eigen::Index(y) * image.width + x) -
                          image.values.col(Eigen::Index(y + dy) * image.width + x + dx))
                             .cwiseAbs()
                             .maxCoeff();
        max_d = std::max(max_d, d);
        sum += d;
        ++count;
      }
    if (count == 0) throw ShapeMismatch("image is narrower than one period plus one pixel");
    mean_d = sum / double(count);
  };
  if (period_x > 0) axis(0, period_x, r.max_x, r.mean_x);
  if (period_y > 0) axis(period_y, 0, r.max_y, r.mean_y);
  r.pass = r.max_discrepancy() < tolerance;
  return r;
}

}  // namespace locogan
