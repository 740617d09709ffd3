#include "headlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "headlab/error.hpp"

namespace headlab {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s);

Settings from_ptree(const pt::ptree& tree) {
  std::map<std::string, std::string> values;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      values[section] = trim(body.data());
      continue;
    }
    for (const auto& [key, value] : body) values[section + "." + key] = trim(value.data());
  }
  return Settings(std::move(values));
}

std::string env_name(const std::string& key) {
  std::string out = kEnvPrefix;
  for (const char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

Settings Settings::from_ini_file(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return from_ptree(tree);
}

Settings Settings::from_ini_string(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return from_ptree(tree);
}

void Settings::set(const std::string& key, const std::string& value) { overrides_[key] = trim(value); }

std::optional<std::string> Settings::raw(const std::string& key) const {
  read_.insert(key);
  if (const auto it = overrides_.find(key); it != overrides_.end()) return it->second;
  if (use_environment) {
    if (const char* env = std::getenv(env_name(key).c_str())) return trim(env);
  }
  if (const auto it = values_.find(key); it != values_.end()) return it->second;
  return std::nullopt;
}

std::string Settings::get_string(const std::string& key, const std::string& fallback) const {
  return raw(key).value_or(fallback);
}

std::int64_t Settings::get_int(const std::string& key, std::int64_t fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  std::size_t used = 0;
  try {
    const long long x = std::stoll(*v, &used);
    if (used == v->size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: " + key + " must be an integer, got '" + *v + "'");
}

double Settings::get_double(const std::string& key, double fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  std::size_t used = 0;
  try {
    const double x = std::stod(*v, &used);
    if (used == v->size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: " + key + " must be a number, got '" + *v + "'");
}

bool Settings::get_bool(const std::string& key, bool fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("config: " + key + " must be a boolean, got '" + *v + "'");
}

void Settings::reject_unknown() const {
  for (const auto* m : {&values_, &overrides_}) {
    for (const auto& [key, value] : *m) {
      if (!read_.contains(key)) throw ConfigError("config: unknown key '" + key + "'");
    }
  }
}

namespace {

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::size_t get_size(const Settings& s, const std::string& key, std::size_t fallback) {
  const auto v = s.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError("config: " + key + " must be >= 0");
  return static_cast<std::size_t>(v);
}

int get_int32(const Settings& s, const std::string& key, int fallback) {
  const auto v = s.get_int(key, fallback);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError("config: " + key + " out of range");
  return static_cast<int>(v);
}

std::uint64_t get_seed(const Settings& s, const std::string& key, std::uint64_t fallback) {
  const auto v = s.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError("config: " + key + " must be >= 0");
  return static_cast<std::uint64_t>(v);
}

RunConfig read_run_config(const Settings& s, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.train = resolve(s.get_string("data.train", ""), base_dir);
  c.validation = resolve(s.get_string("data.validation", ""), base_dir);
  c.history = resolve(s.get_string("data.history", ""), base_dir);
  c.output_dir = resolve(s.get_string("output.dir", ""), base_dir);
  c.init_checkpoint = resolve(s.get_string("model.init", ""), base_dir);
  if (c.train.empty()) throw ConfigError("config: data.train is required");
  if (c.output_dir.empty()) throw ConfigError("config: output.dir is required");

  DataConfig& d = c.data;
  d.article_max = get_size(s, "data.article_max", d.article_max);
  d.headline_max = get_size(s, "data.headline_max", d.headline_max);
  d.style_max = get_size(s, "data.style_max", d.style_max);
  d.trend_max = get_size(s, "data.trend_max", d.trend_max);
  d.buzz_tf_min = s.get_int("data.buzz_tf_min", d.buzz_tf_min);
  d.buzz_tf_max = s.get_double("data.buzz_tf_max", d.buzz_tf_max);
  d.quotas.ratio1 = get_size(s, "data.buzz_ratio1", d.quotas.ratio1);
  d.quotas.ratio3 = get_size(s, "data.buzz_ratio3", d.quotas.ratio3);
  d.quotas.ratio6 = get_size(s, "data.buzz_ratio6", d.quotas.ratio6);
  d.quotas.cap = get_size(s, "data.buzz_cap", d.quotas.cap);
  d.vocab_tf_min = s.get_int("data.vocab_tf_min", d.vocab_tf_min);
  d.vocab_tf_max = s.get_double("data.vocab_tf_max", d.vocab_tf_max);
  d.vocab_max = get_size(s, "data.vocab_max", d.vocab_max);
  d.validate();

  ModelConfig& m = c.model;
  m.d = get_int32(s, "model.d", m.d);
  m.n_layers = get_int32(s, "model.layers", m.n_layers);
  m.n_heads = get_int32(s, "model.heads", m.n_heads);
  m.ffn = get_int32(s, "model.ffn", m.ffn);
  m.max_positions = get_int32(s, "model.max_positions", m.max_positions);
  m.extractor_layers = get_int32(s, "model.extractor_layers", m.extractor_layers);
  m.dropout = s.get_double("model.dropout", m.dropout);
  m.seed = get_seed(s, "model.seed", m.seed);

  TrainConfig& t = c.train_cfg;
  t.batch_size = get_int32(s, "train.batch_size", t.batch_size);
  t.grad_accum = get_int32(s, "train.grad_accum", t.grad_accum);
  t.warmup = s.get_int("train.warmup", t.warmup);
  t.peak_lr = s.get_double("train.peak_lr", t.peak_lr);
  t.epochs = get_int32(s, "train.epochs", t.epochs);
  t.max_steps = s.get_int("train.max_steps", t.max_steps);
  t.eval_interval = s.get_int("train.eval_interval", t.eval_interval);
  t.seed = get_seed(s, "train.seed", t.seed);
  t.adam.beta1 = s.get_double("train.beta1", t.adam.beta1);
  t.adam.beta2 = s.get_double("train.beta2", t.adam.beta2);
  t.adam.eps = s.get_double("train.eps", t.adam.eps);
  t.validate();

  CorruptionConfig& k = c.corruption;
  k.select_rate = s.get_double("corruption.select_rate", k.select_rate);
  k.mask_fraction = s.get_double("corruption.mask_fraction", k.mask_fraction);
  k.random_fraction = s.get_double("corruption.random_fraction", k.random_fraction);
  k.keep_fraction = s.get_double("corruption.keep_fraction", k.keep_fraction);
  k.seed = get_seed(s, "corruption.seed", k.seed);
  k.validate();

  GenerationConfig& g = c.generation;
  g.beam_size = get_int32(s, "generation.beam_size", g.beam_size);
  g.max_length = get_int32(s, "generation.max_length", g.max_length);
  g.length_alpha = s.get_double("generation.alpha", g.length_alpha);
  g.coverage_beta = s.get_double("generation.beta", g.coverage_beta);
  g.validate();

  s.reject_unknown();
  return c;
}

}  // namespace

RunConfig run_config_from(const Settings& s, const std::filesystem::path& base_dir) {
  try {
    return read_run_config(s, base_dir);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace headlab
