#pragma once

// Run/architecture description, read from a line-based `key = value` file with
// `[section]` headers. See docs/config.md for the grammar.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fdnet/nn.hpp"
#include "fdnet/spectral.hpp"

namespace fdnet {

enum class Variant { spatial, frequency };
enum class DatasetKind { mnist, att };

struct BlockConfig {
  std::string name;  // "block.N"
  std::size_t channels = 16;
  // spatial
  std::size_t convs = 2;
  std::size_t kernel = 3;
  bool max_pool = true;
  // frequency: spectral pool output size, 0 = no pooling
  std::size_t pool_height = 0;
  std::size_t pool_width = 0;
};

struct SpectralConfig {
  bool pyramidal = true;
  SparseMode sparse_mode = SparseMode::polar;
  TwoSReLUConfig tsrelu;
  bool use_2srelu = true;
  bool dc_removal = false;
};

struct NetworkConfig {
  Variant variant = Variant::frequency;
  DatasetKind dataset = DatasetKind::mnist;
  std::filesystem::path data_root;
  std::size_t train_limit = 0;  // 0 = all
  std::size_t test_limit = 0;
  std::uint64_t seed = 1;
  std::size_t att_train_per_class = 5;
  std::size_t att_size = 64;
  std::uint64_t split_seed = 1;

  SGDConfig optimizer;
  std::size_t eval_every = 1000;

  SpectralConfig spectral;
  std::vector<std::size_t> fc_hidden;
  std::vector<BlockConfig> blocks;
};

/// Parses config text. Relative data paths resolve against `base_dir`.
/// Throws ConfigError with line numbers; validates the layer chain.
NetworkConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
NetworkConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError when value ranges or the layer shape chain are invalid.
void validate_config(const NetworkConfig& cfg);

std::string_view to_string(Variant v);
std::string_view to_string(DatasetKind d);

}  // namespace fdnet
