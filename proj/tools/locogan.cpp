#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "locogan/commands.hpp"

using namespace locogan;
namespace fs = std::filesystem;

namespace {

LatentRegion parse_region(const std::string& text) {
  LatentRegion r;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream in(text);
  if (!(in >> r.x >> c1 >> r.y >> c2 >> r.width >> c3 >> r.height) || c1 != ',' || c2 != ',' || c3 != ',' ||
      !(in >> std::ws).eof())
    throw ConfigError("--region expects x,y,w,h, got '" + text + "'");
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally conditioned convolutional GAN: train, sample, tile, edit and verify"};
  app.require_subcommand(1);

  std::string config, checkpoint, out;
  std::uint64_t seed = 0, seed_b = 1;
  int width = 64, height = 64, width_b = 0, height_b = 0, steps = 8, period = 0, count = 64, projections = 64,
      patch = 16;
  std::string mode = "strip", region = "0,0,0,0", channels = "both";
  bool fresh = false, semi = false;
  double tolerance = 0.05;

  auto* train = app.add_subcommand("train", "train from a configuration file (resume with --checkpoint)");
  train->add_option("--config", config, "configuration file")->required();
  train->add_option("--checkpoint", checkpoint, "checkpoint to resume from");

  auto* sample = app.add_subcommand("sample", "generate one image of any size");
  sample->add_option("--checkpoint", checkpoint)->required();
  sample->add_option("--width", width)->capture_default_str();
  sample->add_option("--height", height)->capture_default_str();
  sample->add_option("--seed", seed)->capture_default_str();
  sample->add_option("--out", out, "output PNG")->required();

  auto* interp = app.add_subcommand("interpolate", "interpolate between two samples of possibly different sizes");
  interp->add_option("--checkpoint", checkpoint)->required();
  interp->add_option("--seed", seed, "seed of the first endpoint")->capture_default_str();
  interp->add_option("--seed-b", seed_b, "seed of the second endpoint")->capture_default_str();
  interp->add_option("--width", width)->capture_default_str();
  interp->add_option("--height", height)->capture_default_str();
  interp->add_option("--width-b", width_b, "second endpoint width (default: --width)");
  interp->add_option("--height-b", height_b, "second endpoint height (default: --height)");
  interp->add_option("--steps", steps, "number of frames, endpoints included")->capture_default_str();
  interp->add_option("--out", out, "output directory")->required();

  auto* tile = app.add_subcommand("tile", "periodic strip or plane with a seam report");
  tile->add_option("--checkpoint", checkpoint)->required();
  tile->add_option("--mode", mode, "strip or plane")->capture_default_str();
  tile->add_option("--period", period, "period in latent pixels (default: the model's coordinate period)");
  tile->add_option("--width", width, "output width (default: three periods)");
  tile->add_option("--height", height, "output height");
  tile->add_option("--seed", seed)->capture_default_str();
  tile->add_flag("--semi-periodic", semi, "fresh local noise for every tile");
  tile->add_option("--tolerance", tolerance, "seam tolerance in [-1, 1] units")->capture_default_str();
  tile->add_option("--out", out, "output PNG")->required();

  auto* trans = app.add_subcommand("transplant", "move a latent region of one sample into another");
  trans->add_option("--checkpoint", checkpoint)->required();
  trans->add_option("--seed", seed, "source sample")->capture_default_str();
  trans->add_option("--seed-b", seed_b, "destination sample")->capture_default_str();
  trans->add_option("--region", region, "x,y,w,h in latent pixels")->required();
  trans->add_option("--channels", channels, "global, local or both")->capture_default_str();
  trans->add_option("--width", width)->capture_default_str();
  trans->add_option("--height", height)->capture_default_str();
  trans->add_option("--out", out, "output directory")->required();

  auto* verify = app.add_subcommand("verify", "run the structural property checks");
  auto* vck = verify->add_option("--checkpoint", checkpoint);
  verify->add_flag("--fresh", fresh, "verify freshly initialized weights")->excludes(vck);
  verify->add_option("--config", config, "configuration for --fresh (default settings otherwise)");
  verify->add_option("--seed", seed)->capture_default_str();
  verify->add_option("--out", out, "write the JSON report here as well");

  auto* metrics = app.add_subcommand("metrics", "patch-statistics distance between real and generated crops");
  metrics->add_option("--checkpoint", checkpoint)->required();
  metrics->add_option("--config", config, "configuration naming the dataset")->required();
  metrics->add_option("--count", count, "crops per set")->capture_default_str();
  metrics->add_option("--projections", projections)->capture_default_str();
  metrics->add_option("--patch", patch, "sub-patch size (0 compares whole crops)")->capture_default_str();
  metrics->add_option("--seed", seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const RunConfig run = RunConfig::load(config);
      std::optional<fs::path> resume;
      if (!checkpoint.empty()) resume = checkpoint;
      const TrainOutcome r = cmd_train(run, resume, &std::cout);
      std::cout << "wrote " << r.checkpoints.size() << " checkpoints; final " << r.final_checkpoint.string() << "\n";
    } else if (*sample) {
      cmd_sample(checkpoint, {height, width}, seed, out);
    } else if (*interp) {
      const ImageSize b{height_b > 0 ? height_b : height, width_b > 0 ? width_b : width};
      for (const auto& f : cmd_interpolate(checkpoint, seed, {height, width}, seed_b, b, steps, out))
        std::cout << f.string() << "\n";
    } else if (*tile) {
      TileOptions opt;
      opt.mode = parse_tile_mode(mode);
      opt.period = period;
      opt.width = tile->count("--width") ? width : 0;
      opt.height = tile->count("--height") ? height : 0;
      opt.seed = seed;
      opt.semi_periodic = semi;
      opt.tolerance = tolerance;
      std::cout << cmd_tile(checkpoint, opt, out).to_json() << "\n";
    } else if (*trans) {
      cmd_transplant(checkpoint, {height, width}, seed, seed_b, parse_region(region), parse_channel_set(channels), out);
    } else if (*verify) {
      if (checkpoint.empty() && !fresh) throw ConfigError("verify needs --checkpoint or --fresh");
      Model model = checkpoint.empty()
                        ? Model::fresh(config.empty() ? RunConfig().train_config() : RunConfig::load(config).train_config())
                        : Model::load(checkpoint);
      VerifyOptions opt;
      opt.seed = seed;
      const VerifyReport rep = run_verify(model, opt);
      const std::string json = rep.to_json();
      std::cout << json << "\n";
      if (!out.empty()) {
        std::ofstream f(out);
        if (!(f << json << "\n")) throw IoError("cannot write " + out);
      }
      if (!rep.pass()) {
        for (const auto& c : rep.checks)
          if (c.status == CheckStatus::fail) std::cerr << "FAILED " << c.name << ": " << c.detail << "\n";
        return 1;
      }
    } else if (*metrics) {
      Model model = Model::load(checkpoint);
      const DatasetSource src = RunConfig::load(config).dataset();
      const double d = generated_patch_distance(model, src, count, projections, patch, seed);
      nlohmann::ordered_json j{{"patch_statistics_distance", d}, {"crops", count}, {"projections", projections},
                               {"patch", patch}, {"step", model.step}};
      std::cout << j.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
