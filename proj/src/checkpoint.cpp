#include "locogan/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace locogan {
namespace {

constexpr char kMagic[8] = {'L', 'O', 'C', 'O', 'G', 'A', 'N', '\0'};

template <typename T>
void put(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((std::uint64_t(v) >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const std::string& what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  float get_f32(const std::string& what) {
    const std::uint32_t bits = get<std::uint32_t>(what);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  std::string get_bytes(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const std::string& what) {
    if (n > bytes_.size() - pos_) throw CheckpointError("checkpoint truncated while reading " + what);
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw CheckpointError("metadata " + key + ": bad number '" + s + "'");
}

long long parse_long(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw CheckpointError("metadata " + key + ": bad integer '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

template <typename Tensor>
NamedArray to_array(const std::string& name, const Tensor& t) {
  NamedArray a;
  a.name = name;
  if constexpr (Tensor::ColsAtCompileTime == 1)
    a.shape = {std::uint64_t(t.size())};
  else
    a.shape = {std::uint64_t(t.rows()), std::uint64_t(t.cols())};
  a.data.assign(t.data(), t.data() + t.size());
  return a;
}

template <typename Tensor>
void from_array(const NamedArray& a, Tensor& t) {
  std::vector<std::uint64_t> want;
  if constexpr (Tensor::ColsAtCompileTime == 1)
    want = {std::uint64_t(t.size())};
  else
    want = {std::uint64_t(t.rows()), std::uint64_t(t.cols())};
  if (a.shape != want) throw CheckpointError("array " + a.name + " has an unexpected shape");
  for (float v : a.data)
    if (!std::isfinite(v)) throw CheckpointError("array " + a.name + " contains non-finite values");
  std::copy(a.data.begin(), a.data.end(), t.data());
}

}  // namespace

const NamedArray& Checkpoint::array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  throw CheckpointError("checkpoint is missing array " + name);
}

const std::string& Checkpoint::meta(const std::string& key) const {
  const auto it = metadata.find(key);
  if (it == metadata.end()) throw CheckpointError("checkpoint is missing metadata " + key);
  return it->second;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  std::string meta;
  for (const auto& [k, v] : ckpt.metadata) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw CheckpointError("metadata entry " + k + " cannot be stored");
    meta += k + "=" + v + "\n";
  }
  put<std::uint64_t>(out, meta.size());
  out += meta;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    std::uint64_t count = 1;
    for (auto d : a.shape) count *= d;
    if (count != a.data.size()) throw CheckpointError("array " + a.name + " does not match its shape");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put<std::uint64_t>(out, d);
    for (float f : a.data) put_f32(out, f);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.get_bytes(sizeof kMagic, "magic") != std::string(kMagic, sizeof kMagic))
    throw CheckpointError("not a checkpoint file (bad magic)");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  Checkpoint ckpt;
  const auto meta_len = in.get<std::uint64_t>("metadata length");
  for (const auto& line : split(in.get_bytes(meta_len, "metadata"), '\n')) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("malformed metadata line '" + line + "'");
    ckpt.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto count = in.get<std::uint32_t>("array count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = in.get_bytes(in.get<std::uint32_t>("array name length"), "array name");
    const auto rank = in.get<std::uint32_t>("rank of " + a.name);
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      a.shape.push_back(in.get<std::uint64_t>("shape of " + a.name));
      n *= a.shape.back();
    }
    if (n > bytes.size()) throw CheckpointError("array " + a.name + " is larger than the file");
    a.data.resize(n);
    for (auto& f : a.data) f = in.get_f32("array " + a.name);
    ckpt.arrays.push_back(std::move(a));
  }
  if (!in.done()) throw CheckpointError("trailing bytes after the last array");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

std::string serialize_network(const NetworkConfig& cfg) {
  std::string s = fmt_double(cfg.leaky_slope) + ";" + fmt_double(cfg.bn_momentum) + ";" +
                  fmt_double(cfg.bn_epsilon) + ";" + fmt_double(cfg.init_std) + ";";
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const LayerPlan& p = cfg.layers[i];
    if (i) s += ",";
    s += std::to_string(p.spec.in_channels) + "/" + std::to_string(p.spec.out_channels) + "/" +
         std::to_string(p.spec.kernel) + "/" + std::to_string(p.spec.stride) + "/" + std::to_string(p.spec.padding) +
         "/" + (p.spec.transposed ? "T" : "C") + "/" + std::to_string(p.coord_channels) + "/" +
         (p.batch_norm ? "bn" : "-") + "/" + (p.spectral_norm ? "sn" : "-") + "/" + to_string(p.activation);
  }
  return s;
}

NetworkConfig parse_network(const std::string& text) {
  const auto parts = split(text, ';');
  if (parts.size() != 5) throw CheckpointError("malformed network description");
  NetworkConfig cfg;
  cfg.leaky_slope = parse_double(parts[0], "leaky_slope");
  cfg.bn_momentum = parse_double(parts[1], "bn_momentum");
  cfg.bn_epsilon = parse_double(parts[2], "bn_epsilon");
  cfg.init_std = parse_double(parts[3], "init_std");
  for (const auto& layer : split(parts[4], ',')) {
    const auto f = split(layer, '/');
    if (f.size() != 10) throw CheckpointError("malformed layer description '" + layer + "'");
    LayerPlan p;
    p.spec = {int(parse_long(f[0], "layer")), int(parse_long(f[1], "layer")), int(parse_long(f[2], "layer")),
              int(parse_long(f[3], "layer")), int(parse_long(f[4], "layer")), f[5] == "T"};
    p.coord_channels = int(parse_long(f[6], "layer"));
    p.batch_norm = f[7] == "bn";
    p.spectral_norm = f[8] == "sn";
    try {
      p.activation = parse_activation(f[9]);
    } catch (const ConfigError& e) {
      throw CheckpointError(e.what());
    }
    cfg.layers.push_back(p);
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw CheckpointError(std::string("invalid network: ") + e.what());
  }
  return cfg;
}

void append_weights(Checkpoint& ckpt, const std::string& prefix, const Weights<float>& w) {
  auto& mutable_w = const_cast<Weights<float>&>(w);
  mutable_w.visit_all([&](const std::string& name, auto& t) { ckpt.arrays.push_back(to_array(prefix + name, t)); });
}

void read_weights(const Checkpoint& ckpt, const std::string& prefix, Weights<float>& w) {
  w.visit_all([&](const std::string& name, auto& t) { from_array(ckpt.array(prefix + name), t); });
}

namespace {

Weights<float> shaped_weights(const NetworkConfig& cfg) {
  Rng dummy(0);
  return init_weights<float>(cfg, dummy);
}

void write_latent_spec(Checkpoint& c, const LatentSpec& spec) {
  c.metadata["latent.global_channels"] = std::to_string(spec.global_channels);
  c.metadata["latent.local_channels"] = std::to_string(spec.local_channels);
  c.metadata["coords.mode"] = to_string(spec.coords.mode);
  c.metadata["coords.reference_height"] = std::to_string(spec.coords.reference_height);
  c.metadata["coords.reference_width"] = std::to_string(spec.coords.reference_width);
  c.metadata["coords.alpha"] = fmt_double(spec.coords.alpha);
}

LatentSpec read_latent_spec(const Checkpoint& c) {
  LatentSpec spec;
  spec.global_channels = int(parse_long(c.meta("latent.global_channels"), "latent.global_channels"));
  spec.local_channels = int(parse_long(c.meta("latent.local_channels"), "latent.local_channels"));
  try {
    spec.coords.mode = parse_coordinate_mode(c.meta("coords.mode"));
  } catch (const ConfigError& e) {
    throw CheckpointError(e.what());
  }
  spec.coords.reference_height = int(parse_long(c.meta("coords.reference_height"), "coords.reference_height"));
  spec.coords.reference_width = int(parse_long(c.meta("coords.reference_width"), "coords.reference_width"));
  spec.coords.alpha = parse_double(c.meta("coords.alpha"), "coords.alpha");
  return spec;
}

}  // namespace

Checkpoint make_checkpoint(const TrainState& state, const TrainConfig& cfg) {
  Checkpoint c;
  write_latent_spec(c, cfg.latent);
  c.metadata["generator"] = serialize_network(cfg.generator);
  c.metadata["discriminator"] = serialize_network(cfg.discriminator);
  const FootprintMap fp = receptive_footprint(cfg.generator.stack());
  c.metadata["footprint.scale"] = fmt_double(fp.latent_map().scale);
  c.metadata["footprint.offset"] = fmt_double(fp.latent_map().offset);
  c.metadata["footprint.margin"] = std::to_string(fp.margin);
  c.metadata["train.batch_size"] = std::to_string(cfg.batch_size);
  c.metadata["train.steps"] = std::to_string(cfg.total_steps);
  c.metadata["train.lr_g"] = fmt_double(cfg.lr_g);
  c.metadata["train.lr_d"] = fmt_double(cfg.lr_d);
  c.metadata["train.beta1"] = fmt_double(cfg.beta1);
  c.metadata["train.beta2"] = fmt_double(cfg.beta2);
  c.metadata["train.adam_epsilon"] = fmt_double(cfg.adam_epsilon);
  c.metadata["train.seed"] = std::to_string(cfg.seed);
  c.metadata["train.checkpoint_every"] = std::to_string(cfg.checkpoint_every);
  c.metadata["crop.noise_padding"] = std::to_string(cfg.noise_padding);
  c.metadata["state.step"] = std::to_string(state.step);
  c.metadata["state.rng"] = state.rng.state();
  c.metadata["state.adam_g_step"] = std::to_string(state.adam_g.step);
  c.metadata["state.adam_d_step"] = std::to_string(state.adam_d.step);
  c.metadata["state.ema_d_loss"] = fmt_double(state.ema_d_loss);
  c.metadata["state.ema_g_loss"] = fmt_double(state.ema_g_loss);
  append_weights(c, "G.", state.generator);
  append_weights(c, "D.", state.discriminator);
  append_weights(c, "G.adam_m.", state.adam_g.m);
  append_weights(c, "G.adam_v.", state.adam_g.v);
  append_weights(c, "D.adam_m.", state.adam_d.m);
  append_weights(c, "D.adam_v.", state.adam_d.v);
  return c;
}

TrainState restore_train_state(const Checkpoint& c, TrainConfig& cfg) {
  cfg.latent = read_latent_spec(c);
  cfg.generator = parse_network(c.meta("generator"));
  cfg.discriminator = parse_network(c.meta("discriminator"));
  cfg.batch_size = int(parse_long(c.meta("train.batch_size"), "train.batch_size"));
  cfg.total_steps = parse_long(c.meta("train.steps"), "train.steps");
  cfg.lr_g = parse_double(c.meta("train.lr_g"), "train.lr_g");
  cfg.lr_d = parse_double(c.meta("train.lr_d"), "train.lr_d");
  cfg.beta1 = parse_double(c.meta("train.beta1"), "train.beta1");
  cfg.beta2 = parse_double(c.meta("train.beta2"), "train.beta2");
  cfg.adam_epsilon = parse_double(c.meta("train.adam_epsilon"), "train.adam_epsilon");
  cfg.seed = static_cast<std::uint64_t>(parse_long(c.meta("train.seed"), "train.seed"));
  cfg.checkpoint_every = parse_long(c.meta("train.checkpoint_every"), "train.checkpoint_every");
  cfg.noise_padding = int(parse_long(c.meta("crop.noise_padding"), "crop.noise_padding"));

  TrainState st;
  st.generator = shaped_weights(cfg.generator);
  st.discriminator = shaped_weights(cfg.discriminator);
  read_weights(c, "G.", st.generator);
  read_weights(c, "D.", st.discriminator);
  st.adam_g = {st.generator.zeros_like(), st.generator.zeros_like(), 0};
  st.adam_d = {st.discriminator.zeros_like(), st.discriminator.zeros_like(), 0};
  read_weights(c, "G.adam_m.", st.adam_g.m);
  read_weights(c, "G.adam_v.", st.adam_g.v);
  read_weights(c, "D.adam_m.", st.adam_d.m);
  read_weights(c, "D.adam_v.", st.adam_d.v);
  st.step = parse_long(c.meta("state.step"), "state.step");
  st.rng.restore(c.meta("state.rng"));
  st.adam_g.step = parse_long(c.meta("state.adam_g_step"), "state.adam_g_step");
  st.adam_d.step = parse_long(c.meta("state.adam_d_step"), "state.adam_d_step");
  st.ema_d_loss = parse_double(c.meta("state.ema_d_loss"), "state.ema_d_loss");
  st.ema_g_loss = parse_double(c.meta("state.ema_g_loss"), "state.ema_g_loss");
  return st;
}

}  // namespace locogan
