#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "headlab/generate.hpp"
#include "headlab/model.hpp"
#include "headlab/training.hpp"

namespace headlab {

inline constexpr const char* kEnvPrefix = "HEADLAB_";

/// Flat `section.key -> value` settings read from an INI file. A value can be
/// overridden by the environment variable HEADLAB_<SECTION>_<KEY> (upper
/// case) and then by explicit set() calls.
class Settings {
 public:
  Settings() = default;
  explicit Settings(std::map<std::string, std::string> file_values) : values_(std::move(file_values)) {}
  static Settings from_ini_file(const std::filesystem::path& path);
  static Settings from_ini_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool use_environment = true;

  std::optional<std::string> raw(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws naming the first key that was present but never read.
  void reject_unknown() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> overrides_;
  mutable std::set<std::string> read_;
};

struct RunConfig {
  std::filesystem::path train;
  std::filesystem::path validation;  // may be empty
  std::filesystem::path history;     // may be empty: train + validation
  std::filesystem::path output_dir;
  std::filesystem::path init_checkpoint;  // may be empty
  DataConfig data;
  ModelConfig model;  // vocab_size is filled in from the data
  TrainConfig train_cfg;
  CorruptionConfig corruption;
  GenerationConfig generation;
};

/// Reads every documented key (relative paths resolve against base_dir),
/// validates ranges and rejects unknown keys.
RunConfig run_config_from(const Settings& s, const std::filesystem::path& base_dir);

}  // namespace headlab
