#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "locogan/image_io.hpp"
#include "support.hpp"

using namespace locogan;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) { std::ofstream(p, std::ios::binary) << bytes; }

fs::path small_checkpoint(const fs::path& dir, const TrainConfig& cfg, const std::string& name = "model.ckpt") {
  const fs::path p = dir / name;
  save_checkpoint(p, make_checkpoint(init_train_state(cfg), cfg));
  return p;
}

// Runs the command-line tool, returning the exit status and captured output.
std::pair<int, std::string> run_cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli.log";
  const std::string cmd = std::string(LOCOGAN_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, slurp(log)};
}

// Exhaustive 1-D transport: integrate |F - G| between consecutive merged support points.
double cdf_oracle(std::vector<double> a, std::vector<double> b) {
  std::vector<double> all = a;
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0;
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    const double t = all[i];
    const double fa = double(std::upper_bound(a.begin(), a.end(), t) - a.begin()) / double(a.size());
    const double fb = double(std::upper_bound(b.begin(), b.end(), t) - b.begin()) / double(b.size());
    total += std::abs(fa - fb) * (all[i + 1] - t);
  }
  return total;
}

Eigen::MatrixXd cloud(int dim, int n, double center, Rng& rng) {
  Eigen::MatrixXd m(dim, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = center + rng.normal();
  return m;
}

}  // namespace

TEST_CASE("run configuration") {
  const RunConfig cfg;
  const TrainConfig t = cfg.train_config();
  CHECK(t.latent.global_channels == 16);
  CHECK(t.latent.local_channels == 2);
  CHECK(t.latent.coords.channels() == 2);
  CHECK(t.latent.coords.reference_height == 128);
  CHECK(t.latent.coords.reference_width == 128);
  CHECK(t.batch_size == 16);
  CHECK(t.lr_g == 2e-4);
  CHECK(t.beta1 == 0.5);
  CHECK(t.beta2 == 0.999);
  CHECK(t.noise_padding == 16);
  CHECK(cfg.get_int("crop.height") == 64);
  const CropWindow w = make_crop_window(0, 0, 64, 64, receptive_footprint(t.generator.stack()), t.noise_padding);
  CHECK(w.latent_h == 10);
  CHECK(w.latent_w == 10);
  for (const auto& [key, entry] : RunConfig::schema()) CHECK_FALSE(entry.second.empty());

  const RunConfig parsed = RunConfig::parse("# comment\ntrain.steps = 12  # trailing\n\ncoords.mode=periodic_x\n");
  CHECK(parsed.get_long("train.steps") == 12);
  CHECK(parsed.train_config().latent.coords.mode == CoordinateMode::periodic_x);
  CHECK(RunConfig::parse(parsed.to_text()).values() == parsed.values());

  CHECK_THROWS_AS(RunConfig::parse("train.stpes = 3\n"), ConfigError);
  try {
    RunConfig::parse("bogus.key = 1\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bogus.key") != std::string::npos);
  }
  try {
    (void)cfg.dataset();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("dataset.path") != std::string::npos);
  }
  RunConfig bad;
  CHECK_THROWS_AS(bad.set("train.batch_size", "zero"), ConfigError);
  bad.set("train.lr_g", "-1");
  CHECK_THROWS_AS(bad.train_config(), ConfigError);
}

TEST_CASE("checkpoint container") {
  const auto dir = support::scratch("ckpt");
  const TrainConfig cfg = support::small_config();
  const fs::path p = small_checkpoint(dir, cfg);
  const std::string bytes = slurp(p);

  save_checkpoint(dir / "again.ckpt", load_checkpoint(p));
  CHECK(slurp(dir / "again.ckpt") == bytes);
  CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);

  TrainConfig back;
  const TrainState st = restore_train_state(load_checkpoint(p), back);
  CHECK(back.latent == cfg.latent);
  CHECK(back.seed == cfg.seed);
  CHECK(encode_checkpoint(make_checkpoint(st, back)) == bytes);

  std::string wrong_version = bytes;
  wrong_version[8] = char(7);
  try {
    decode_checkpoint(wrong_version);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("version 7") != std::string::npos);
  }
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), CheckpointError);
  for (std::size_t cut : {std::size_t(3), std::size_t(20), bytes.size() / 2, bytes.size() - 1})
    CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, cut)), CheckpointError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);

  SUBCASE("corrupted array is named") {
    Checkpoint c = load_checkpoint(p);
    auto it = std::find_if(c.arrays.begin(), c.arrays.end(),
                           [](const NamedArray& a) { return a.name.find("layer2.kernel") != std::string::npos; });
    REQUIRE(it != c.arrays.end());
    const std::string name = it->name;
    it->data[5] = std::nanf("");
    save_checkpoint(dir / "corrupt.ckpt", c);
    try {
      Model::load(dir / "corrupt.ckpt");
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find(name) != std::string::npos);
    }
    Checkpoint d = load_checkpoint(p);
    d.arrays.erase(d.arrays.begin() + 1);
    const std::string missing = load_checkpoint(p).arrays[1].name;
    try {
      restore_train_state(d, back);
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find(missing) != std::string::npos);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("image encoding") {
  CHECK(to_byte(-1.0) == 0);
  CHECK(to_byte(1.0) == 255);
  CHECK(to_byte(0.0) == 128);
  CHECK(to_byte(-5.0) == 0);
  CHECK(to_byte(5.0) == 255);
  for (int b = 0; b < 256; ++b) CHECK(to_byte(from_byte(std::uint8_t(b))) == b);

  const auto dir = support::scratch("image");
  Grid<float> one(3, 1, 1);
  one.values << -0.3f, 0.77f, 0.999f;
  encode_image(dir / "one.png", one);
  const Grid<float> back = decode_image(dir / "one.png");
  CHECK(back.height == 1);
  CHECK(back.width == 1);
  CHECK((back.values - one.values).cwiseAbs().maxCoeff() <= 1.0 / 127.5);

  const Grid<float> img = support::stripes(33, 47, 9, 0.3, 4);
  encode_image(dir / "a.png", img);
  encode_image(dir / "b.png", decode_image(dir / "a.png"));
  CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
  CHECK_THROWS_AS(decode_image(dir / "nothing.png"), IoError);
  spit(dir / "fake.png", "not an image");
  CHECK_THROWS(decode_image(dir / "fake.png"));
  CHECK_THROWS(decode_image(dir / "a.gif"));
  fs::remove_all(dir);
}

TEST_CASE("patch statistics distance") {
  Rng rng(17);
  const Eigen::MatrixXd a = cloud(12, 40, 0.0, rng), b = cloud(12, 40, 0.5, rng), c = cloud(12, 40, -0.3, rng);
  CHECK(patch_statistics_distance(a, a, 64, 1) == 0.0);
  Eigen::MatrixXd shuffled = a;
  shuffled.col(0).swap(shuffled.col(7));
  CHECK(patch_statistics_distance(a, shuffled, 64, 1) == 0.0);
  CHECK(patch_statistics_distance(a, b, 64, 1) == patch_statistics_distance(b, a, 64, 1));
  CHECK(patch_statistics_distance(a, c, 64, 1) <= patch_statistics_distance(a, b, 64, 1) + patch_statistics_distance(b, c, 64, 1) + 1e-6);
  CHECK(patch_statistics_distance(a, b, 64, 1) == patch_statistics_distance(a, b, 64, 1));

  SUBCASE("constant shift") {
    const double shift = 0.25;
    const Eigen::MatrixXd moved = a.array() + shift;
    const double d = patch_statistics_distance(a, moved, 64, 3);
    CHECK(d > 0);
    // Each projection moves by shift * |<1, theta>| <= shift * sqrt(dim).
    CHECK(d <= shift * std::sqrt(12.0) + 1e-12);
  }
  SUBCASE("one-dimensional sets against exhaustive transport") {
    // In one dimension every unit direction is +-1, so each projection is the full 1-D distance.
    Eigen::MatrixXd x(1, 100), y(1, 100);
    for (int i = 0; i < 100; ++i) {
      x(0, i) = rng.normal();
      y(0, i) = 6.0 + 2.0 * rng.normal();
    }
    const std::vector<double> xv(x.data(), x.data() + 100), yv(y.data(), y.data() + 100);
    CHECK(std::abs(patch_statistics_distance(x, y, 5, 9) - cdf_oracle(xv, yv)) < 1e-9);
    CHECK(std::abs(transport_distance_1d(xv, yv) - cdf_oracle(xv, yv)) < 1e-9);
    const std::vector<double> odd(yv.begin(), yv.begin() + 37);
    CHECK(std::abs(transport_distance_1d(xv, odd) - cdf_oracle(xv, odd)) < 1e-9);
  }
  SUBCASE("sorted matching is the optimal assignment") {
    std::vector<double> p(7), q(7);
    for (int i = 0; i < 7; ++i) {
      p[i] = rng.normal();
      q[i] = rng.normal() + 1;
    }
    std::vector<int> perm{0, 1, 2, 3, 4, 5, 6};
    double best = 1e300;
    do {
      double cost = 0;
      for (int i = 0; i < 7; ++i) cost += std::abs(p[i] - q[perm[i]]) / 7;
      best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(std::abs(transport_distance_1d(p, q) - best) < 1e-12);
  }
  CHECK_THROWS_AS(patch_statistics_distance(Eigen::MatrixXd(12, 0), a, 4, 1), EmptySet);
  CHECK_THROWS_AS(patch_statistics_distance(a, cloud(11, 40, 0, rng), 4, 1), ShapeMismatch);

  SUBCASE("patch extraction") {
    const Grid<float> g = support::stripes(10, 12, 4, 0.0, 1);
    const Eigen::MatrixXd p = extract_patches({g}, 4, 2);
    CHECK(p.rows() == 3 * 16);
    CHECK(p.cols() == 4 * 5);
    CHECK(flatten_crops({g, g}).cols() == 2);
  }
}

TEST_CASE("seam report") {
  Grid<float> img(3, 20, 30);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 30; ++x) img.at(c, y, x) = float(std::sin(x * 2 * 3.14159265 / 10) * std::cos(y * 2 * 3.14159265 / 5));
  SeamReport r = seam_report(img, 10, 5, 0.05);
  CHECK(r.max_discrepancy() < 1e-5);
  CHECK(r.pass);
  img.at(1, 4, 25) += 0.5f;
  r = seam_report(img, 10, 0, 0.05);
  CHECK(r.max_x == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(r.mean_x > 0);
  CHECK(r.mean_x <= r.max_x);
  CHECK(r.max_y == 0.0);
  CHECK_FALSE(r.pass);
  CHECK(r.to_json().find("\"max_x\"") != std::string::npos);
}

TEST_CASE("generation commands") {
  const auto dir = support::scratch("commands");
  const TrainConfig cfg = support::small_config();
  const fs::path ckpt = small_checkpoint(dir, cfg);

  SUBCASE("samples of several sizes") {
    for (auto [h, w] : {std::pair{128, 160}, {128, 192}, {128, 96}, {64, 64}, {1, 1}, {37, 53}}) {
      const fs::path out = dir / ("s_" + std::to_string(h) + "x" + std::to_string(w) + ".png");
      cmd_sample(ckpt, {h, w}, 3, out);
      const Grid<float> img = decode_image(out);
      CHECK(img.height == h);
      CHECK(img.width == w);
      cmd_sample(ckpt, {h, w}, 3, dir / "again.png");
      CHECK(slurp(out) == slurp(dir / "again.png"));
    }
    Model m = Model::load(ckpt);
    CHECK(m.window({64, 64}).latent_h == 10);
    CHECK_THROWS_AS(cmd_sample(ckpt, {0, 5}, 1, dir / "zero.png"), ShapeMismatch);
  }
  SUBCASE("interpolation") {
    const auto frames = cmd_interpolate(ckpt, 1, {128, 192}, 2, {160, 160}, 5, dir / "interp");
    REQUIRE(frames.size() == 5);
    cmd_sample(ckpt, {128, 192}, 1, dir / "a.png");
    cmd_sample(ckpt, {160, 160}, 2, dir / "b.png");
    CHECK(slurp(frames.front()) == slurp(dir / "a.png"));
    CHECK(slurp(frames.back()) == slurp(dir / "b.png"));
    const Grid<float> mid = decode_image(frames[2]);
    CHECK(mid.height == 144);
    CHECK(mid.width == 176);
    int prev_h = 128;
    for (const auto& f : frames) {
      const Grid<float> g = decode_image(f);
      CHECK(g.height >= prev_h);
      prev_h = g.height;
    }
    CHECK(cmd_interpolate(ckpt, 1, {128, 192}, 2, {160, 160}, 2, dir / "two").size() == 2);
    const auto same = cmd_interpolate(ckpt, 4, {96, 96}, 4, {96, 96}, 3, dir / "same");
    CHECK(slurp(same[1]) == slurp(same[0]));
    CHECK_THROWS_AS(cmd_interpolate(ckpt, 1, {64, 64}, 2, {64, 64}, 1, dir / "one"), DomainError);
  }
  SUBCASE("transplant") {
    Model m = Model::load(ckpt);
    const ImageSize size{96, 128};
    const CropWindow w = m.window(size);
    const TransplantResult whole = transplant_images(m, size, 1, 2, {0, 0, w.latent_w, w.latent_h}, ChannelSet::both);
    CHECK(whole.composite.values == whole.a.values);
    const TransplantResult none = transplant_images(m, size, 1, 2, {2, 2, 0, 0}, ChannelSet::both);
    CHECK(none.composite.values == none.b.values);
    const TransplantResult half = transplant_images(m, size, 1, 2, {0, 0, w.latent_w / 2, w.latent_h}, ChannelSet::global);
    CHECK(half.composite.values != half.a.values);
    CHECK(half.composite.values != half.b.values);
    CHECK_THROWS_AS(transplant_images(m, size, 1, 2, {w.latent_w, 0, 1, 1}, ChannelSet::both), RegionOutOfBounds);
    cmd_transplant(ckpt, size, 1, 2, {0, 0, 3, 3}, ChannelSet::local, dir / "tp");
    for (const char* f : {"a.png", "b.png", "transplant.png"}) CHECK(decode_image(dir / "tp" / f).width == 128);
  }
  SUBCASE("tiling") {
    CHECK_THROWS_AS(cmd_tile(ckpt, {}, dir / "t.png"), PeriodMismatch);

    const TrainConfig px = support::small_config(CoordinateMode::periodic_x);
    Model strip = Model::fresh(px);
    TileOptions opt;
    opt.seed = 3;
    const TileResult r = tile_image(strip, opt);
    CHECK(r.image.width == 3 * 64);
    CHECK(r.report.period_x == 64);
    CHECK(r.report.max_x < 1e-3);
    CHECK(r.report.pass);

    const TrainConfig pxy = support::small_config(CoordinateMode::periodic_xy);
    Model plane = Model::fresh(pxy);
    opt.mode = TileMode::plane;
    const TileResult p = tile_image(plane, opt);
    CHECK(p.image.height == 3 * 64);
    CHECK(p.report.max_discrepancy() < 1e-3);

    opt.mode = TileMode::strip;
    opt.semi_periodic = true;
    const TileResult s = tile_image(strip, opt);
    CHECK(s.report.max_x > 0.0);
    CHECK(s.image.values != r.image.values);
    // Tiles share coordinates and global channels; only the local noise differs.
    const TileOptions fixed{TileMode::strip, 0, 0, 0, 3, false, 0.05};
    CHECK(tile_image(strip, fixed).image.values == r.image.values);

    const fs::path tckpt = small_checkpoint(dir, px, "strip.ckpt");
    opt.semi_periodic = false;
    const SeamReport rep = cmd_tile(tckpt, opt, dir / "strip.png");
    CHECK(decode_image(dir / "strip.png").width == 192);
    CHECK(rep.pass);
    opt.period = 3;
    CHECK_THROWS_AS(cmd_tile(tckpt, opt, dir / "bad.png"), PeriodMismatch);
  }
  fs::remove_all(dir);
}

TEST_CASE("verification report") {
  const TrainConfig cfg = support::small_config(CoordinateMode::linear, 16);
  Model m = Model::fresh(cfg);
  VerifyOptions opt;
  opt.trials = 5;
  opt.footprint_pixels = 30;
  const VerifyReport r = run_verify(m, opt);
  for (const auto& c : r.checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.status == CheckStatus::pass);
  }
  CHECK(r.pass());
  CHECK(r.checks.size() == 7);
  CHECK(r.to_json().find("\"stitching\"") != std::string::npos);

  TrainConfig plain = cfg;
  plain.discriminator = discriminator_config(2, {16, 16, 16, 16}, 3, false);
  Model nosn = Model::fresh(plain);
  const VerifyReport s = run_verify(nosn, opt);
  auto it = std::find_if(s.checks.begin(), s.checks.end(), [](const CheckResult& c) { return c.name == "spectral"; });
  REQUIRE(it != s.checks.end());
  CHECK(it->status == CheckStatus::skipped);
  CHECK(s.pass());
}

TEST_CASE("training command") {
  const auto dir = support::scratch("train");
  encode_image(dir / "texture.png", support::stripes(256, 256, 32, 0.1, 5));
  RunConfig run;
  run.set("dataset.mode", "pattern");
  run.set("dataset.path", (dir / "texture.png").string());
  run.set("generator.widths", "8,8,8,8");
  run.set("discriminator.widths", "8,8,8,8");
  run.set("coords.mode", "periodic_x");
  run.set("coords.reference_width", "256");
  run.set("coords.reference_height", "256");
  run.set("train.batch_size", "2");
  run.set("train.steps", "3");
  run.set("train.checkpoint_every", "2");
  run.set("output.dir", (dir / "a").string());
  const TrainOutcome a = cmd_train(run);
  CHECK(a.steps_run == 3);
  CHECK(a.checkpoints.size() == 3);
  CHECK(fs::exists(a.final_checkpoint));
  std::ifstream log(a.metrics_log);
  int lines = 0;
  for (std::string line; std::getline(log, line);) {
    std::istringstream fields(line);
    std::vector<std::string> f{std::istream_iterator<std::string>(fields), {}};
    CHECK(f.size() == 5);
    ++lines;
  }
  CHECK(lines == 3);

  run.set("output.dir", (dir / "b").string());
  const TrainOutcome b = cmd_train(run);
  CHECK(slurp(a.final_checkpoint) == slurp(b.final_checkpoint));

  run.set("output.dir", (dir / "c").string());
  run.set("train.steps", "2");
  cmd_train(run);
  run.set("train.steps", "3");
  const TrainOutcome c = cmd_train(run, dir / "c" / "final.ckpt");
  CHECK(c.steps_run == 1);
  CHECK(slurp(c.final_checkpoint) == slurp(a.final_checkpoint));
  run.set("train.seed", "9");
  CHECK_THROWS_AS(cmd_train(run, dir / "c" / "final.ckpt"), ConfigMismatch);

  SUBCASE("command-line tool") {
    spit(dir / "nodata.cfg", "train.steps = 1\n");
    auto [rc, out] = run_cli("train --config " + (dir / "nodata.cfg").string(), dir);
    CHECK(rc != 0);
    CHECK(out.find("dataset.path") != std::string::npos);

    auto [rc2, out2] = run_cli("sample --checkpoint " + a.final_checkpoint.string() + " --width 40 --height 24 --seed 2 --out " +
                                   (dir / "cli.png").string(),
                               dir);
    CHECK(rc2 == 0);
    CHECK(decode_image(dir / "cli.png").width == 40);
    auto [rc3, out3] = run_cli("tile --checkpoint " + a.final_checkpoint.string() + " --mode strip --seed 1 --out " +
                                   (dir / "tile.png").string(),
                               dir);
    CHECK(rc3 == 0);
    CHECK(out3.find("\"max_x\"") != std::string::npos);
    auto [rc4, out4] = run_cli("sample --checkpoint " + (dir / "missing.ckpt").string() + " --out x.png", dir);
    CHECK(rc4 != 0);
    CHECK(out4.find("missing.ckpt") != std::string::npos);
  }
  fs::remove_all(dir);
}
