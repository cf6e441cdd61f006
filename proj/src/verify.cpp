#include "locogan/verify.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace locogan {

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::skipped: return "skipped";
  }
  return "fail";
}

NetworkConfig narrowed(const NetworkConfig& cfg, int width) {
  NetworkConfig out = cfg;
  for (std::size_t l = 0; l + 1 < out.layers.size(); ++l) {
    out.layers[l].spec.out_channels = width;
    out.layers[l + 1].spec.in_channels = width + out.layers[l + 1].coord_channels;
  }
  return out;
}

LatentImage sub_latent(const LatentImage& field, int y, int x, int h, int w) {
  if (y < 0 || x < 0 || y + h > field.height || x + w > field.width) throw RegionOutOfBounds("sub-latent outside field");
  LatentImage z = field;
  z.height = h;
  z.width = w;
  z.frame.anchor_x += field.frame.spacing * x;
  z.frame.anchor_y += field.frame.spacing * y;
  z.local = crop(field.local, y, x, h, w);
  if (field.edited) z.global_field = crop(field.global_field, y, x, h, w);
  z.coords = latent_coordinates(z.spec.coords, z.frame, h, w);
  return z;
}

namespace {

bool reference_geometry(const NetworkConfig& cfg) {
  if (cfg.layers.size() != 5) return false;
  for (std::size_t l = 0; l < 5; ++l) {
    const LayerSpec& s = cfg.layers[l].spec;
    const int stride = l < 4 ? 2 : 1;
    if (!s.transposed || s.kernel != 4 || s.stride != stride || s.padding != 3) return false;
  }
  return true;
}

LatentFrame unit_frame(const FootprintMap& fp) { return {fp.latent_map().offset, fp.latent_map().offset, fp.latent_map().scale}; }

CheckResult finish(CheckResult r) {
  if (r.status != CheckStatus::skipped) r.status = r.value < r.tolerance ? CheckStatus::pass : CheckStatus::fail;
  return r;
}

}  // namespace

CheckResult check_shape_law(Generator<float>& gen, const LatentSpec& spec, int lo, int hi) {
  CheckResult r{"shape_law", CheckStatus::pass, 0, 1, ""};
  const auto stack = gen.weights().config.stack();
  const bool reference = reference_geometry(gen.weights().config);
  const FootprintMap& fp = gen.footprint();
  Rng rng(1);
  int mismatches = 0;
  for (int n = lo; n <= hi; ++n) {
    const long long analytic = stack_output_size(n, stack);
    const Grid<float> out = gen.generate(sample_latent(spec, n, n, unit_frame(fp), rng));
    const bool ok = out.height == analytic && out.width == analytic && (!reference || analytic == 16LL * n - 63);
    if (!ok) {
      ++mismatches;
      r.detail += "n=" + std::to_string(n) + ": analytic " + std::to_string(analytic) + ", forward " +
                  std::to_string(out.height) + "x" + std::to_string(out.width) + "; ";
    }
  }
  r.value = mismatches;
  if (r.detail.empty())
    r.detail = "latent sizes " + std::to_string(lo) + ".." + std::to_string(hi) +
               (reference ? " follow 16n - 63" : " follow the analytic stack size");
  return finish(r);
}

CheckResult check_footprint(Generator<float>& gen, const LatentSpec& spec, int n, int pixels, Rng& rng) {
  CheckResult r{"footprint", CheckStatus::pass, 0, 1, ""};
  const FootprintMap& fp = gen.footprint();
  const LatentImage base = sample_latent(spec, n, n, unit_frame(fp), rng);
  const Grid<float> ref = gen.generate(base);
  const int size = ref.height;

  std::vector<std::pair<int, int>> probes(pixels);
  for (auto& [y, x] : probes) {
    y = rng.uniform_int(0, size - 1);
    x = rng.uniform_int(0, size - 1);
  }
  // touched[k] = latent pixels whose perturbation moved probe k.
  std::vector<std::set<std::pair<int, int>>> touched(pixels);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      LatentImage z = base;
      const Eigen::Index p = Eigen::Index(i) * n + j;
      for (int c = 0; c < z.local.channels(); ++c) z.local.values(c, p) += 3.0 + rng.normal();
      if (spec.global_channels > 0) {
        z.global_field = z.global_grid();
        z.edited = true;
        for (int c = 0; c < spec.global_channels; ++c) z.global_field.values(c, p) += 3.0 + rng.normal();
      }
      const Grid<float> out = gen.generate(z);
      for (int k = 0; k < pixels; ++k) {
        const auto [y, x] = probes[k];
        const Eigen::Index q = Eigen::Index(y) * size + x;
        if ((out.values.col(q) - ref.values.col(q)).cwiseAbs().maxCoeff() > 0) touched[k].insert({i, j});
      }
    }

  int mismatches = 0;
  for (int k = 0; k < pixels; ++k) {
    const auto [y, x] = probes[k];
    const Interval iy = fp.latent_interval(y, n), ix = fp.latent_interval(x, n);
    std::set<std::pair<int, int>> analytic;
    for (long long i = iy.lo; i <= iy.hi; ++i)
      for (long long j = ix.lo; j <= ix.hi; ++j) analytic.insert({int(i), int(j)});
    if (analytic != touched[k]) {
      ++mismatches;
      if (mismatches <= 3)
        r.detail += "pixel (" + std::to_string(y) + "," + std::to_string(x) + "): analytic " +
                    std::to_string(analytic.size()) + " latent pixels, probe " + std::to_string(touched[k].size()) +
                    "; ";
    }
  }
  r.value = mismatches;
  if (r.detail.empty())
    r.detail = std::to_string(pixels) + " output pixels of a " + std::to_string(n) + "x" + std::to_string(n) +
               " latent match their analytic intervals";
  return finish(r);
}

CheckResult check_equivariance(Generator<float>& gen, const LatentSpec& spec, int trials, double tol, Rng& rng) {
  CheckResult r{"equivariance", CheckStatus::pass, 0, tol, ""};
  const FootprintMap& fp = gen.footprint();
  const int stride = static_cast<int>(std::lround(fp.latent_map().scale));
  for (int t = 0; t < trials; ++t) {
    const int n = rng.uniform_int(5, 7);
    const bool along_x = t % 2 == 0;
    LatentFrame frame = unit_frame(fp);
    frame.anchor_x += stride * rng.uniform_int(-8, 8);
    frame.anchor_y += stride * rng.uniform_int(-8, 8);
    const LatentImage field = sample_latent(spec, n + 1, n + 1, frame, rng);
    const Grid<float> a = gen.generate(sub_latent(field, 0, 0, n, n));
    const Grid<float> b = gen.generate(along_x ? sub_latent(field, 0, 1, n, n) : sub_latent(field, 1, 0, n, n));
    const int dy = along_x ? 0 : stride, dx = along_x ? stride : 0;
    for (int y = 0; y + dy < a.height; ++y)
      for (int x = 0; x + dx < a.width; ++x) {
        const double d = (b.values.col(Eigen::Index(y) * b.width + x) -
                          a.values.col(Eigen::Index(y + dy) * a.width + x + dx))
                             .cwiseAbs()
                             .maxCoeff();
        r.value = std::max(r.value, d);
      }
  }
  r.detail = std::to_string(trials) + " trials, one latent pixel against " + std::to_string(stride) + " output pixels";
  return finish(r);
}

CheckResult check_stitching(Generator<float>& gen, const LatentSpec& spec, int crop_size, int padding, int trials,
                            double tol, Rng& rng) {
  CheckResult r{"stitching", CheckStatus::pass, 0, tol, ""};
  const FootprintMap& fp = gen.footprint();
  const int stride = static_cast<int>(std::lround(fp.latent_map().scale));
  const int reach = std::max(1, (crop_size - 1) / stride);
  for (int t = 0; t < trials; ++t) {
    const int x1 = rng.uniform_int(-crop_size, crop_size), y1 = rng.uniform_int(-crop_size, crop_size);
    int sx = 0, sy = 0;
    while (sx == 0 && sy == 0) {
      sx = rng.uniform_int(-reach, reach);
      sy = rng.uniform_int(-reach, reach);
    }
    const int x2 = x1 + stride * sx, y2 = y1 + stride * sy;
    const int ux = std::min(x1, x2), uy = std::min(y1, y2);
    const CropWindow u = make_crop_window(ux, uy, crop_size + stride * std::abs(sy), crop_size + stride * std::abs(sx),
                                          fp, padding);
    const LatentImage field = sample_latent(spec, u.latent_h, u.latent_w, u.frame, rng);
    const CropWindow w1 = make_crop_window(x1, y1, crop_size, crop_size, fp, padding);
    const CropWindow w2 = make_crop_window(x2, y2, crop_size, crop_size, fp, padding);
    const auto render = [&](const CropWindow& w) {
      return crop(gen.generate(crop_with_noise_padding(field, w, fp, rng)), w.offset_y, w.offset_x, w.height, w.width);
    };
    const Grid<float> a = render(w1), b = render(w2);
    for (int y = std::max(y1, y2); y < std::min(y1, y2) + crop_size; ++y)
      for (int x = std::max(x1, x2); x < std::min(x1, x2) + crop_size; ++x) {
        const double d = (a.values.col(Eigen::Index(y - y1) * crop_size + (x - x1)) -
                          b.values.col(Eigen::Index(y - y2) * crop_size + (x - x2)))
                             .cwiseAbs()
                             .maxCoeff();
        r.value = std::max(r.value, d);
      }
  }
  r.detail = std::to_string(trials) + " pairs of overlapping " + std::to_string(crop_size) + "x" +
             std::to_string(crop_size) + " crops";
  return finish(r);
}

CheckResult check_periodicity(Generator<float>& gen, const LatentSpec& spec, int period, int periods, int height,
                              int padding, double tol, Rng& rng) {
  CheckResult r{"periodicity", CheckStatus::pass, 0, tol, ""};
  const FootprintMap& fp = gen.footprint();
  const int stride = static_cast<int>(std::lround(fp.latent_map().scale));
  const int T = stride * period;
  CropWindow win = centered_window(spec.coords, height, periods * T, fp, padding);
  const LatentImage z = sample_tiled(spec, win, period, TileAxes::x, rng);
  const Grid<float> img = crop(gen.generate(z), win.offset_y, win.offset_x, win.height, win.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x + T < img.width; ++x)
      r.value = std::max(r.value, double((img.values.col(Eigen::Index(y) * img.width + x) -
                                          img.values.col(Eigen::Index(y) * img.width + x + T))
                                             .cwiseAbs()
                                             .maxCoeff()));
  r.detail = std::to_string(periods) + "-period strip " + std::to_string(height) + "x" + std::to_string(periods * T) +
             ", latent period " + std::to_string(period);
  return finish(r);
}

CheckResult check_spectral(const Weights<float>& disc, double tol) {
  CheckResult r{"spectral", CheckStatus::pass, 0, tol, ""};
  int layers = 0;
  for (std::size_t l = 0; l < disc.layers.size(); ++l) {
    if (!disc.config.layers[l].spectral_norm) continue;
    ++layers;
    const Matrix<double> w = disc.layers[l].kernel.cast<double>();
    Vector<double> u = disc.layers[l].sn_u.cast<double>();
    double sigma = 0;
    for (int round = 0; round < 200; ++round) {
      const auto sn = spectral_normalize<double>(w, u, 50);
      u = sn.u;
      const bool settled = std::abs(sn.sigma - sigma) <= 1e-13 * sn.sigma;
      sigma = sn.sigma;
      if (settled) break;
    }
    const Matrix<double> gram = w.rows() <= w.cols() ? Matrix<double>(w * w.transpose()) : Matrix<double>(w.transpose() * w);
    Eigen::SelfAdjointEigenSolver<Matrix<double>> eig(gram, Eigen::EigenvaluesOnly);
    const double top = std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
    r.value = std::max(r.value, std::abs(top / sigma - 1.0));
  }
  if (layers == 0) {
    r.status = CheckStatus::skipped;
    r.detail = "spectral normalization disabled";
    return r;
  }
  r.detail = std::to_string(layers) + " spectral layers iterated to convergence";
  return finish(r);
}

bool VerifyReport::pass() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == CheckStatus::fail; });
}

std::string VerifyReport::to_json() const {
  nlohmann::ordered_json j;
  j["pass"] = pass();
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks)
    j["checks"].push_back({{"name", c.name},
                           {"status", to_string(c.status)},
                           {"value", c.value},
                           {"tolerance", c.tolerance},
                           {"detail", c.detail}});
  return j.dump(2);
}

}  // namespace locogan
