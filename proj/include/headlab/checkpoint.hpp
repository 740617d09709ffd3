#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "headlab/model.hpp"
#include "headlab/vocab.hpp"

namespace headlab {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  ParamValues params;
  nlohmann::json meta;  // free-form settings stored alongside, e.g. input limits
};

/// Binary container: magic "HLABCKPT", u32 version, u64 header length, JSON
/// header (config and vocabulary), u32 tensor count, then per tensor a u32
/// name length, the name, u64 rows, u64 cols and row-major f64 data. All
/// integers and floats little-endian.
void write_checkpoint(std::ostream& out, const Model& model, const Vocabulary& vocab,
                      const nlohmann::json& meta = nlohmann::json::object());
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const Vocabulary& vocab,
                     const nlohmann::json& meta = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Model built from the checkpoint's config with its parameter values.
Model instantiate(const Checkpoint& ckpt);

}  // namespace headlab
