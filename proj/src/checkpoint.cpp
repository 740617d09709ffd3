#include "headlab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "headlab/error.hpp"
#include "headlab/io.hpp"

namespace headlab {

namespace {

constexpr char kMagic[8] = {'H', 'L', 'A', 'B', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("checkpoint: truncated file");
  return v;
}

std::string get_bytes(std::istream& in, std::uint64_t n) {
  if (n > (1ULL << 32)) throw Error("checkpoint: implausible field length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw Error("checkpoint: truncated file");
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Model& model, const Vocabulary& vocab, const nlohmann::json& meta) {
  if (vocab.size() != model.config().vocab_size) throw Error("checkpoint: vocabulary size does not match the model");
  nlohmann::ordered_json header;
  header["format"] = "headlab-checkpoint";
  header["config"] = to_json(model.config());
  header["vocab"] = {{"tf_min", vocab.tf_min()}, {"tf_max", vocab.tf_max()}, {"tokens", vocab.tokens()}};
  header["meta"] = meta;
  const std::string text = header.dump();
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto& params = model.parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const auto& m = p.var.value();
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw Error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw Error("checkpoint: unsupported version " + std::to_string(version));
  const auto header_len = get<std::uint64_t>(in);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(get_bytes(in, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: bad header: ") + e.what());
  }
  Checkpoint ck;
  ck.config = model_config_from_json(header.at("config"));
  const auto& v = header.at("vocab");
  auto tokens = v.at("tokens").get<std::vector<std::string>>();
  if (tokens.size() < kFirstRegularId) throw Error("checkpoint: vocabulary lacks reserved symbols");
  for (int i = 0; i < kFirstRegularId; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != kReservedTokens[static_cast<std::size_t>(i)]) {
      throw Error("checkpoint: reserved symbols out of order");
    }
  }
  tokens.erase(tokens.begin(), tokens.begin() + kFirstRegularId);
  ck.vocab = Vocabulary(std::move(tokens), v.value("tf_min", std::int64_t{0}), v.value("tf_max", 1.0));
  if (ck.vocab.size() != ck.config.vocab_size) throw Error("checkpoint: vocabulary size does not match config");

  ck.meta = header.value("meta", nlohmann::json::object());

  const auto n = get<std::uint32_t>(in);
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = get_bytes(in, get<std::uint32_t>(in));
    if (!seen.insert(name).second) throw Error("checkpoint: duplicate tensor " + name);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows > (1ULL << 24) || cols > (1ULL << 24)) throw Error("checkpoint: implausible tensor shape for " + name);
    ad::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw Error("checkpoint: truncated tensor " + name);
    ck.params.emplace_back(std::move(name), std::move(m));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const Vocabulary& vocab,
                     const nlohmann::json& meta) {
  write_file_atomic(path, [&](std::ostream& out) { write_checkpoint(out, model, vocab, meta); });
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

Model instantiate(const Checkpoint& ckpt) {
  Model model(ckpt.config);
  if (ckpt.params.size() != model.parameters().size()) throw Error("checkpoint: tensor count does not match config");
  restore(model, ckpt.params);
  return model;
}

}  // namespace headlab
