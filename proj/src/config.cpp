#include "locogan/config.hpp"

#include <fstream>
#include <sstream>

namespace locogan {

const std::map<std::string, std::pair<std::string, std::string>>& RunConfig::schema() {
  static const std::map<std::string, std::pair<std::string, std::string>> keys = {
      {"dataset.mode", {"folder", "folder (directory of images) or pattern (one image)"}},
      {"dataset.path", {"", "image directory (folder) or image file (pattern); required for training"}},
      {"dataset.shorter_edge", {"128", "folder mode: shorter image edge is rescaled to this"}},
      {"crop.height", {"64", "training crop height in pixels"}},
      {"crop.width", {"64", "training crop width in pixels"}},
      {"crop.noise_padding", {"16", "noise padding (output pixels per side) rendered around every crop"}},
      {"latent.global_channels", {"16", "master-plan channels (constant per sample)"}},
      {"latent.local_channels", {"2", "per-pixel noise channels"}},
      {"coords.mode", {"linear", "linear, periodic_x or periodic_xy"}},
      {"coords.reference_height", {"128", "pixel extent mapped onto [-1, 1] vertically"}},
      {"coords.reference_width", {"128", "pixel extent mapped onto [-1, 1] horizontally"}},
      {"coords.period", {"64", "periodic modes: coordinate period in output pixels"}},
      {"generator.widths", {"1024,512,256,128", "feature widths of the strided generator layers"}},
      {"discriminator.widths", {"64,128,256,512", "feature widths of the strided discriminator layers"}},
      {"discriminator.spectral_norm", {"true", "spectral normalization on the strided discriminator layers"}},
      {"model.leaky_slope", {"0.2", "negative slope of the discriminator's leaky rectifiers"}},
      {"model.bn_momentum", {"0.1", "running-statistics momentum of batch normalization"}},
      {"model.init_std", {"0.02", "deviation of the zero-mean normal kernel initialization"}},
      {"train.batch_size", {"16", "crops per step"}},
      {"train.steps", {"1000", "total optimization steps"}},
      {"train.lr_g", {"0.0002", "generator learning rate"}},
      {"train.lr_d", {"0.0002", "discriminator learning rate"}},
      {"train.beta1", {"0.5", "first moment coefficient"}},
      {"train.beta2", {"0.999", "second moment coefficient"}},
      {"train.seed", {"0", "seed of every random draw"}},
      {"train.checkpoint_every", {"0", "checkpoint cadence in steps (0: initial and final only)"}},
      {"output.dir", {"out", "directory for checkpoints and the metrics log"}},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& [key, entry] : schema()) values_[key] = entry.first;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse(ss.str());
  // Relative dataset paths resolve against the config's directory.
  const std::string& data = cfg.get("dataset.path");
  if (!data.empty() && std::filesystem::path(data).is_relative() && path.has_parent_path())
    cfg.set("dataset.path", (path.parent_path() / data).string());
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto entry = schema().find(key);
  if (entry == schema().end()) throw ConfigError("unknown config key '" + key + "'");
  const std::string previous = values_[key];
  values_[key] = value;
  // Values are typed by their defaults; coords.period is the one real-valued key with an integral default.
  const std::string& def = entry->second.first;
  try {
    if (def == "true" || def == "false")
      get_bool(key);
    else if (def.find(',') != std::string::npos)
      get_ints(key);
    else if (key == "coords.period" || def.find('.') != std::string::npos)
      get_double(key);
    else if (!def.empty() && def.find_first_not_of("0123456789") == std::string::npos)
      get_long(key);
  } catch (const ConfigError&) {
    values_[key] = previous;
    throw;
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

int RunConfig::get_int(const std::string& key) const {
  const long long v = get_long(key);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(key + ": value out of range");
  return static_cast<int>(v);
}

long long RunConfig::get_long(const std::string& key) const {
  const std::string& s = get(key);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + s + "'");
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& s = get(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + s + "'");
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

std::vector<int> RunConfig::get_ints(const std::string& key) const {
  std::vector<int> out;
  std::istringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw ConfigError("");
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected a comma-separated list of positive integers");
    }
  }
  return out;
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [key, value] : values_) os << key << " = " << value << '\n';
  return os.str();
}

LatentSpec RunConfig::latent_spec() const {
  LatentSpec spec;
  spec.global_channels = get_int("latent.global_channels");
  spec.local_channels = get_int("latent.local_channels");
  const CoordinateMode mode = parse_coordinate_mode(get("coords.mode"));
  const int rh = get_int("coords.reference_height"), rw = get_int("coords.reference_width");
  if (mode == CoordinateMode::linear)
    spec.coords = {mode, rh, rw, 0.0};
  else
    spec.coords = CoordinateSpec::periodic(mode, rh, rw, get_double("coords.period"));
  spec.validate();
  return spec;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.latent = latent_spec();
  cfg.batch_size = get_int("train.batch_size");
  cfg.total_steps = get_long("train.steps");
  cfg.lr_g = get_double("train.lr_g");
  cfg.lr_d = get_double("train.lr_d");
  cfg.beta1 = get_double("train.beta1");
  cfg.beta2 = get_double("train.beta2");
  cfg.seed = static_cast<std::uint64_t>(get_long("train.seed"));
  cfg.checkpoint_every = get_long("train.checkpoint_every");
  cfg.noise_padding = get_int("crop.noise_padding");
  if (cfg.noise_padding < 0) throw ConfigError("crop.noise_padding must be non-negative");
  if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be positive");
  if (cfg.total_steps < 0) throw ConfigError("train.steps must be non-negative");
  if (!(cfg.lr_g > 0) || !(cfg.lr_d > 0)) throw ConfigError("learning rates must be positive");
  if (cfg.checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be non-negative");

  cfg.generator = generator_config(cfg.latent, get_ints("generator.widths"));
  cfg.discriminator = discriminator_config(cfg.latent.coords.channels(), get_ints("discriminator.widths"), 3,
                                           get_bool("discriminator.spectral_norm"));
  for (NetworkConfig* net : {&cfg.generator, &cfg.discriminator}) {
    net->leaky_slope = get_double("model.leaky_slope");
    net->bn_momentum = get_double("model.bn_momentum");
    net->init_std = get_double("model.init_std");
  }
  return cfg;
}

DatasetSource RunConfig::dataset() const {
  const std::string& path = get("dataset.path");
  if (path.empty()) throw ConfigError("dataset.path is not set");
  const int ch = get_int("crop.height"), cw = get_int("crop.width");
  if (ch < 1 || cw < 1) throw ConfigError("crop.height and crop.width must be positive");
  const DatasetMode mode = parse_dataset_mode(get("dataset.mode"));
  try {
    if (mode == DatasetMode::folder) return DatasetSource::from_folder(path, get_int("dataset.shorter_edge"), ch, cw);
    return DatasetSource::from_pattern(path, ch, cw);
  } catch (const IoError& e) {
    throw ConfigError(std::string("dataset.path: ") + e.what());
  }
}

}  // namespace locogan
