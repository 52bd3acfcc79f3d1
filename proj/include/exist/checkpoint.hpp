#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "exist/embed.hpp"
#include "exist/models.hpp"

namespace exist {

// Checkpoint v1, little-endian:
//   "ECKP" u32 version
//   u32 spec length, spec bytes (ModelSpec::to_config)
//   u64 input_dim
//   u64 vocab hash, u32 vocab size, vocab tokens (u16 length + bytes each)
//   u32 parameter count, then per parameter:
//     u16 name length, name, u8 frozen, u32 rank, u64 dims..., f32 values
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model<float> model;
  std::optional<Vocab> vocab;  // absent for contextual models
};

void write_checkpoint(std::ostream& out, const Model<float>& model, const Vocab* vocab);
void save_checkpoint(const std::filesystem::path& path, const Model<float>& model, const Vocab* vocab);

/// Throws FormatError on bad magic/version or a parameter that does not fit
/// the stored spec, and ConfigError when the stored vocab hash does not match.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace exist
