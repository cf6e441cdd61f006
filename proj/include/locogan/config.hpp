#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "locogan/training.hpp"

namespace locogan {

/// Plain-text `key = value` settings with `#` comments. Every key has a
/// default; unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);

  /// Overrides one key; ConfigError names unknown keys and bad values.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool has_value(const std::string& key) const { return !get(key).empty(); }

  int get_int(const std::string& key) const;
  long long get_long(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;

  /// All keys with their current values in key order.
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string to_text() const;

  LatentSpec latent_spec() const;
  TrainConfig train_config() const;
  /// Loads the dataset named by dataset.path; ConfigError names the key when unset.
  DatasetSource dataset() const;

  /// Documentation string for each key.
  static const std::map<std::string, std::pair<std::string, std::string>>& schema();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace locogan
