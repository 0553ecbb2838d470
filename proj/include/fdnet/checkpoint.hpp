#pragma once

// Flat binary checkpoint, all integers little-endian:
//
//   "SPNN"  u32 version  u32 count
//   count x { u16 name_len, name bytes, u8 rank, u32 dims[rank], f64 values[prod(dims)] }

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fdnet/tensor.hpp"

namespace fdnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(std::span<Parameter* const> params);
/// Entries carry name, shape and value; grad/velocity are zero.
std::vector<Parameter> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params);
std::vector<Parameter> read_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into `params` by name. Throws ConfigError naming
/// the parameter on a missing entry or a shape mismatch.
void load_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params);

}  // namespace fdnet
