#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "headlab/cli.hpp"
#include "headlab/config.hpp"
#include "headlab/error.hpp"
#include "headlab/io.hpp"

using namespace headlab;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("headlab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

const char* kMinimalConfig = R"([data]
train = train.jsonl
[output]
dir = out
)";

}  // namespace

TEST(Settings, ReadsSectionsAndTypes) {
  Settings s = Settings::from_ini_string("[model]\nd = 32\ndropout = 0.25\n[train]\nflag = yes\n");
  s.use_environment = false;
  EXPECT_EQ(s.get_int("model.d", 0), 32);
  EXPECT_EQ(s.get_double("model.dropout", 0), 0.25);
  EXPECT_TRUE(s.get_bool("train.flag", false));
  EXPECT_EQ(s.get_int("model.layers", 7), 7);
  EXPECT_THROW(s.get_double("train.flag", 0), ConfigError);
  EXPECT_THROW(Settings::from_ini_string("[broken\n"), ConfigError);
}

TEST(Settings, PrecedenceIsSetThenEnvironmentThenFile) {
  Settings s = Settings::from_ini_string("[model]\nd = 32\nheads = 2\nlayers = 1\n");
  ::setenv("HEADLAB_MODEL_D", "48", 1);
  ::setenv("HEADLAB_MODEL_HEADS", "6", 1);
  s.set("model.d", "64");
  EXPECT_EQ(s.get_int("model.d", 0), 64);
  EXPECT_EQ(s.get_int("model.heads", 0), 6);
  EXPECT_EQ(s.get_int("model.layers", 0), 1);
  s.use_environment = false;
  EXPECT_EQ(s.get_int("model.heads", 0), 2);
  ::unsetenv("HEADLAB_MODEL_D");
  ::unsetenv("HEADLAB_MODEL_HEADS");
}

TEST(RunConfig, DefaultsAndPathResolution) {
  Settings s = Settings::from_ini_string(kMinimalConfig);
  s.use_environment = false;
  const RunConfig c = run_config_from(s, "/base");
  EXPECT_EQ(c.train, fs::path("/base/train.jsonl"));
  EXPECT_EQ(c.output_dir, fs::path("/base/out"));
  EXPECT_TRUE(c.validation.empty());
  EXPECT_EQ(c.train_cfg.batch_size, 64);
  EXPECT_EQ(c.train_cfg.peak_lr, 2e-3);
  EXPECT_EQ(c.generation.beam_size, 4);
  EXPECT_EQ(c.generation.max_length, 20);
  EXPECT_EQ(c.corruption.select_rate, 0.15);
}

TEST(RunConfig, ErrorsAreConfigErrors) {
  Settings unknown = Settings::from_ini_string(std::string(kMinimalConfig) + "[model]\ndepth = 3\n");
  unknown.use_environment = false;
  EXPECT_THROW(run_config_from(unknown, "/"), ConfigError);
  Settings missing = Settings::from_ini_string("[data]\ntrain = x\n");
  missing.use_environment = false;
  EXPECT_THROW(run_config_from(missing, "/"), ConfigError);
  Settings bad = Settings::from_ini_string(std::string(kMinimalConfig) + "[corruption]\nkeep_fraction = 0.5\n");
  bad.use_environment = false;
  EXPECT_THROW(run_config_from(bad, "/"), ConfigError);
  Settings negative = Settings::from_ini_string(std::string(kMinimalConfig) + "[train]\nbatch_size = -1\n");
  negative.use_environment = false;
  EXPECT_THROW(run_config_from(negative, "/"), ConfigError);
}

TEST(AtomicWrite, ReplacesContentWithoutLeftovers) {
  TempDir dir;
  const fs::path target = dir.path() / "nested" / "f.txt";
  write_file_atomic(target, "one");
  write_file_atomic(target, "two");
  EXPECT_EQ(read_file(target), "two");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(target.parent_path())) ++n;
  EXPECT_EQ(n, 1u);
}

TEST(Cli, NoArgumentsPrintsUsage) {
  const CliRun r = cli({});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, VersionLines) {
  const CliRun r = cli({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(kVersion), std::string::npos);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  const CliRun r = cli({"sim", "--a", "x"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error[usage]", 0), 0u) << r.err;
}

TEST(Cli, InputAndConfigErrorsExitOne) {
  TempDir dir;
  const CliRun missing = cli({"ingest", "--input", dir / "none.jsonl", "--out", dir / "o", "--boundary", "2020-01-01"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_EQ(missing.err.rfind("error[input]", 0), 0u) << missing.err;
  {
    std::ofstream f(dir / "bad.jsonl");
    f << R"({"id":"1","user_id":"u","timestamp":5,"headline":"h","article":"a","likes":"many"})" << "\n";
  }
  const CliRun bad = cli({"ingest", "--input", dir / "bad.jsonl", "--out", dir / "o", "--boundary", "2020-01-01"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("line 1"), std::string::npos) << bad.err;
  {
    std::ofstream f(dir / "c.ini");
    f << kMinimalConfig << "[model]\nwidth = 3\n";
  }
  const CliRun cfg = cli({"train", "--config", dir / "c.ini"});
  EXPECT_EQ(cfg.code, 1);
  EXPECT_EQ(cfg.err.rfind("error[config]", 0), 0u) << cfg.err;
}

TEST(Cli, SimPrintsTheMetric) {
  const CliRun r = cli({"sim", "--a", "a b c", "--b", "b c d"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0.5\n");
  EXPECT_EQ(cli({"sim", "--metric", "cosine", "--a", "a a b", "--b", "a b b"}).out.substr(0, 3), "0.8");
}

TEST(Cli, SynthIsReproducible) {
  TempDir dir;
  const std::vector<std::string> base{"synth", "--seed", "7", "--users", "5", "--posts", "200", "--months", "14"};
  auto a = base;
  a.insert(a.end(), {"--out", dir / "a"});
  auto b = base;
  b.insert(b.end(), {"--out", dir / "b"});
  ASSERT_EQ(cli(a).code, 0);
  ASSERT_EQ(cli(b).code, 0);
  EXPECT_EQ(read_file(dir.path() / "a" / "corpus.jsonl"), read_file(dir.path() / "b" / "corpus.jsonl"));
  EXPECT_EQ(read_file(dir.path() / "a" / "truth.json"), read_file(dir.path() / "b" / "truth.json"));
}

TEST(Cli, EvaluateScoresMatchedIds) {
  TempDir dir;
  {
    std::ofstream c(dir / "cand.jsonl");
    c << R"({"id":"1","headline":"a x b"})" << "\n" << R"({"id":"2","headline":"p q"})" << "\n";
    std::ofstream r(dir / "ref.jsonl");
    r << R"({"id":"2","headline":"p q"})" << "\n" << R"({"id":"1","headline":"a b"})" << "\n";
  }
  const CliRun r = cli({"evaluate", "--candidates", dir / "cand.jsonl", "--references", dir / "ref.jsonl", "--out",
                        dir / "rouge.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read_file(dir.path() / "rouge.json"));
  EXPECT_DOUBLE_EQ(j["rougeL"]["f1"].get<double>(), (0.8 + 1.0) / 2);
  EXPECT_EQ(j["pairs"], 2);
}
