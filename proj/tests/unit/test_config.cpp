#include <doctest.h>

#include <cmath>
#include <string>

#include "fdnet/config.hpp"
#include "fdnet/error.hpp"
#include "fdnet/model.hpp"
#include "fdnet/spatial.hpp"

#ifndef FDNET_SOURCE_DIR
#error "FDNET_SOURCE_DIR must point at the repository root"
#endif

using namespace fdnet;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(FDNET_SOURCE_DIR) / "configs";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& part) {
  return s.find(part) != std::string::npos;
}

const char* kMinimal = R"(
[run]
variant = frequency
dataset = mnist
data_root = /data
[block.1]
channels = 2
pool = 14
)";

}  // namespace

TEST_CASE("empty file lists the required keys") {
  const std::string e = error_of("");
  CHECK(contains(e, "run.variant"));
  CHECK(contains(e, "run.dataset"));
  CHECK(contains(e, "run.data_root"));
  CHECK(contains(e, "block"));
}

TEST_CASE("syntax errors carry line numbers") {
  CHECK(contains(error_of("[run]\nvariant = spatial\nvariant = frequency\n"), "line 2"));
  CHECK(contains(error_of("[run]\nvariant = spatial\nvariant = frequency\n"), "line 3"));
  CHECK(contains(error_of("[run]\nvariant spatial\n"), "line 2"));
  CHECK(contains(error_of("\n\n[runn]\n"), "line 3"));
  CHECK(contains(error_of("[run]\nvarient = spatial\n"), "varient"));
  CHECK(contains(error_of("[run]\nvariant = spatial\n[block.1]\nkernal = 3\n"), "line 4"));
  CHECK(contains(error_of("x = 1\n"), "line 1"));
  CHECK(contains(error_of("[run\n"), "line 1"));
}

TEST_CASE("values are validated") {
  const std::string base = kMinimal;
  CHECK(contains(error_of(base + "[optimizer]\nlearning_rate = fast\n"), "learning_rate"));
  CHECK(contains(error_of(base + "[optimizer]\nlearning_rate = -1\n"), "learning_rate"));
  CHECK(contains(error_of(base + "[optimizer]\nmomentum = 1\n"), "momentum"));
  CHECK(contains(error_of(base + "[optimizer]\nbatch_size = 1\n"), "batch_size"));
  CHECK(contains(error_of(base + "[spectral]\nsparse_mode = magic\n"), "sparse_mode"));
  CHECK(contains(error_of(base + "[spectral]\nuse_2srelu = maybe\n"), "use_2srelu"));
  CHECK(contains(error_of(std::string(kMinimal) + "[block.3]\nchannels = 2\n"), "block.2"));
  const std::string spatial_with_spectral =
      "[run]\nvariant = spatial\ndataset = mnist\ndata_root = x\n[spectral]\nalpha = 1\n[block.1]\n";
  CHECK(contains(error_of(spatial_with_spectral), "spectral"));
  CHECK(contains(error_of(base + "convs = 2\n"), "convs"));
}

TEST_CASE("shape chain errors name the layer") {
  const std::string bad_pool = R"(
[run]
variant = frequency
dataset = mnist
data_root = x
[block.1]
channels = 2
pool = 30
)";
  CHECK(contains(error_of(bad_pool), "block.1"));
  const std::string bad_spatial = R"(
[run]
variant = spatial
dataset = mnist
data_root = x
[block.1]
pool = max
[block.2]
pool = max
[block.3]
pool = max
)";
  // 28 -> 14 -> 7 -> odd
  CHECK(contains(error_of(bad_spatial), "block.3"));
  const std::string tiny_2srelu = R"(
[run]
variant = frequency
dataset = mnist
data_root = x
[block.1]
channels = 2
pool = 14
[block.2]
channels = 4
pool = 3
[block.3]
channels = 4
)";
  CHECK(contains(error_of(tiny_2srelu), "block.3"));
}

TEST_CASE("defaults and relative data roots") {
  const auto cfg = parse_config(kMinimal, "/somewhere");
  CHECK(cfg.variant == Variant::frequency);
  CHECK(cfg.spectral.pyramidal);
  CHECK(cfg.optimizer.learning_rate == 0.01);
  CHECK(cfg.optimizer.momentum == 0.9);
  CHECK(cfg.optimizer.batch_size == 64);
  CHECK(cfg.optimizer.iterations == 100000);
  CHECK(cfg.eval_every == 1000);
  CHECK(cfg.spectral.tsrelu.alpha == 1.0);
  CHECK(cfg.spectral.tsrelu.beta == doctest::Approx(4.0 / (3.0 * M_PI)).epsilon(1e-15));
  CHECK(cfg.data_root == "/data");
  const auto rel = parse_config(std::string(kMinimal).replace(std::string(kMinimal).find("/data"), 5, "d"),
                                "/somewhere");
  CHECK(rel.data_root == std::filesystem::path("/somewhere/d"));
}

TEST_CASE("shipped MNIST frequency config: the pyramidal Sparse/BN/2SReLU network") {
  const auto cfg = load_config(kConfigs / "mnist_frequency.cfg");
  CHECK(cfg.variant == Variant::frequency);
  CHECK(cfg.spectral.pyramidal);
  CHECK(input_shape(cfg) == FeatureShape{Domain::spectral, 5, 28, 28});
  Rng rng(1);
  auto net = build_network(cfg, rng);
  const auto& layers = net->layers();
  REQUIRE(layers.size() == 4);
  const auto* branches = dynamic_cast<const Branches*>(layers[0].get());
  REQUIRE(branches != nullptr);
  CHECK(branches->branches().size() == 5);
  std::vector<std::string> kinds;
  for (const auto& l : branches->branches()[0]->layers()) kinds.emplace_back(l->kind());
  CHECK(kinds == std::vector<std::string>{"sparse", "spectral_batchnorm", "2srelu", "spectral_pool"});
  CHECK(net->output_shape(input_shape(cfg)) == FeatureShape{Domain::spatial, 10, 1, 1});
  CHECK(layers[0]->output_shape(input_shape(cfg)) == FeatureShape{Domain::spectral, 10, 14, 14});
  // single fully connected layer after flatten
  CHECK(layers[2]->kind() == "flatten");
  CHECK(layers[3]->kind() == "fully_connected");
  CHECK(dynamic_cast<const FullyConnected*>(layers[3].get())->in_features() == 2 * 16 * 7 * 7);
}

TEST_CASE("shipped MNIST spatial config: [conv/BN/ReLU x2, pool] x2 then three FC") {
  const auto cfg = load_config(kConfigs / "mnist_spatial.cfg");
  Rng rng(1);
  auto net = build_network(cfg, rng);
  std::vector<std::string> kinds;
  for (const auto& l : net->layers()) kinds.emplace_back(l->kind());
  const std::vector<std::string> block{"conv2d", "batchnorm", "relu", "conv2d", "batchnorm", "relu",
                                       "maxpool2"};
  std::vector<std::string> expect = block;
  expect.insert(expect.end(), block.begin(), block.end());
  expect.insert(expect.end(), {"flatten", "fully_connected", "relu", "fully_connected", "relu",
                               "fully_connected"});
  CHECK(kinds == expect);
  CHECK(first_layer_weight_count(*net) == 144);
}

TEST_CASE("every shipped config validates") {
  for (const auto& entry : std::filesystem::recursive_directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".cfg") continue;
    CAPTURE(entry.path().string());
    const auto cfg = load_config(entry.path());
    Rng rng(cfg.seed);
    CHECK_NOTHROW(build_network(cfg, rng));
  }
}
