#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>

#include "fdnet/data.hpp"
#include "fdnet/error.hpp"
#include "oracles.hpp"

using namespace fdnet;
namespace fs = std::filesystem;

namespace {

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

std::vector<std::uint8_t> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                     std::uint8_t fill = 0) {
  std::vector<std::uint8_t> b;
  put_be32(b, 0x803);
  put_be32(b, count);
  put_be32(b, rows);
  put_be32(b, cols);
  b.insert(b.end(), static_cast<std::size_t>(count) * rows * cols, fill);
  return b;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> b;
  put_be32(b, 0x801);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }

std::string pgm(std::size_t w, std::size_t h, std::uint8_t fill) {
  return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n" + std::string(w * h, static_cast<char>(fill));
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fdnet_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << content;
}

}  // namespace

TEST_CASE("IDX parsing") {
  SUBCASE("two all-zero 28x28 images") {
    const auto set = parse_mnist(idx_images(2, 28, 28), idx_labels({3, 7}));
    REQUIRE(set.size() == 2);
    CHECK(set.images[0].height == 28);
    CHECK(set.images[1].width == 28);
    for (double v : set.images[1].samples) CHECK(v == 0.0);
    CHECK(set.labels == std::vector<int>{3, 7});
  }
  SUBCASE("pixels scale by 1/255 and stay in [0, 1]") {
    auto img = idx_images(1, 2, 2);
    img[16] = 255, img[17] = 51, img[18] = 0, img[19] = 128;
    const auto set = parse_mnist(img, idx_labels({0}));
    CHECK(set.images[0].samples == std::vector<double>{1.0, 51 / 255.0, 0.0, 128 / 255.0});
  }
  SUBCASE("truncated header names the offset") {
    auto img = idx_images(1, 28, 28);
    img.resize(10);
    try {
      parse_mnist(img, idx_labels({0}));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 10);
      CHECK(std::string(e.what()).find("offset 10") != std::string::npos);
    }
  }
  SUBCASE("bad magic, truncated pixels, count mismatch") {
    auto img = idx_images(2, 4, 4);
    img[3] = 0x04;
    CHECK_THROWS_AS(parse_mnist(img, idx_labels({0, 1})), ParseError);
    auto shortimg = idx_images(2, 4, 4);
    shortimg.pop_back();
    CHECK_THROWS_AS(parse_mnist(shortimg, idx_labels({0, 1})), ParseError);
    CHECK_THROWS_AS(parse_mnist(idx_images(2, 4, 4), idx_labels({0})), ParseError);
    auto lab = idx_labels({0, 1});
    lab[3] = 0x03;
    CHECK_THROWS_AS(parse_mnist(idx_images(2, 4, 4), lab), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_mnist("/nonexistent/a", "/nonexistent/b"), IoError);
  }
  SUBCASE("head") {
    const auto set = parse_mnist(idx_images(5, 2, 2), idx_labels({0, 1, 2, 3, 4}));
    CHECK(set.head(3).size() == 3);
    CHECK(set.head(0).size() == 5);
    CHECK(set.head(9).size() == 5);
  }
}

TEST_CASE("PGM parsing") {
  SUBCASE("2x2 fixture") {
    std::string s = "P5\n2 2\n255\n";
    s += std::string{'\x00', '\xff', '\x80', '\x40'};
    const RealGrid g = parse_pgm(bytes(s));
    CHECK(g.height == 2);
    CHECK(g.samples == std::vector<double>{0.0, 1.0, 128 / 255.0, 64 / 255.0});
  }
  SUBCASE("header comments") {
    const RealGrid g = parse_pgm(bytes("P5 # made by hand\n3\n# rows\n1 255\nabc"));
    CHECK(g.width == 3);
    CHECK(g.height == 1);
    CHECK(g.samples[0] == 'a' / 255.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_pgm(bytes("P2\n2 2\n255\n0 1 2 3\n")), ParseError);
    CHECK_THROWS_AS(parse_pgm(bytes("P5\n2 2\n65535\n" + std::string(8, 'x'))), ParseError);
    CHECK_THROWS_AS(parse_pgm(bytes("P5\n2 2\n255\nabc")), ParseError);
    CHECK_THROWS_AS(parse_pgm(bytes("P5\n2")), ParseError);
  }
}

TEST_CASE("AT&T directory layout and split") {
  TempDir tmp;
  // 3 subjects, 4 images each, ordered naturally: s1 < s2 < s10
  for (int s : {1, 2, 10}) {
    for (int k = 1; k <= 4; ++k) {
      write(tmp.path / ("s" + std::to_string(s)) / (std::to_string(k) + ".pgm"),
            pgm(3, 2, static_cast<std::uint8_t>(s * 10 + k)));
    }
  }
  write(tmp.path / "README", "not a subject");
  const auto set = load_att(tmp.path);
  REQUIRE(set.size() == 12);
  CHECK(set.class_count == 3);
  CHECK(set.labels[0] == 0);
  CHECK(set.images[0].samples[0] == 11 / 255.0);
  CHECK(set.labels[4] == 1);
  CHECK(set.labels[8] == 2);
  CHECK(set.images[8].samples[0] == 101 / 255.0);

  SUBCASE("stratified, deterministic") {
    const auto a = att_split(set, 2, 7), b = att_split(set, 2, 7);
    CHECK(a.train.size() == 6);
    CHECK(a.test.size() == 6);
    CHECK(a.train.labels == b.train.labels);
    for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train.images[i].samples == b.train.images[i].samples);
    std::map<int, int> per;
    for (int l : a.train.labels) ++per[l];
    for (auto [l, n] : per) CHECK(n == 2);
    const auto c = att_split(set, 3, 7);
    CHECK(c.train.size() == 9);
    CHECK(c.test.size() == 3);
    CHECK_THROWS_AS(att_split(set, 4, 7), InvalidArgument);
  }
  SUBCASE("40 x 10 layout arithmetic") {
    LabeledImageSet big;
    for (int s = 0; s < 40; ++s)
      for (int k = 0; k < 10; ++k) {
        big.images.emplace_back(2, 2, s + k / 10.0);
        big.labels.push_back(s);
      }
    big.class_count = 40;
    CHECK(att_split(big, 5, 1).train.size() == 200);
    CHECK(att_split(big, 5, 1).test.size() == 200);
    CHECK(att_split(big, 9, 1).test.size() == 40);
  }
  SUBCASE("bad root") {
    CHECK_THROWS_AS(load_att(tmp.path / "missing"), IoError);
  }
}

TEST_CASE("bilinear resize") {
  std::mt19937_64 rng(3);
  const auto g = oracle::random_grid(7, 5, rng);
  CHECK(oracle::max_abs_diff(resize_bilinear(g, 7, 5).samples, g.samples) <= 1e-12);
  for (double v : resize_bilinear(RealGrid(9, 4, 0.3), 5, 7).samples) CHECK(v == doctest::Approx(0.3));
  RealGrid checker(2, 2);
  checker.samples = {0, 1, 1, 0};
  CHECK(resize_bilinear(checker, 1, 1).samples[0] == doctest::Approx(0.5));
  CHECK(resize_bilinear(RealGrid(112, 92, 0.5), 64, 64).height == 64);
}

TEST_CASE("pyramidal spectra") {
  SUBCASE("constant image") {
    const RealGrid img(8, 8, 0.5);
    const auto p = pyramidal_spectra(img);
    for (std::size_t i = 0; i < 64; ++i) {
      CHECK(p.branches[0].magnitude[i] == doctest::Approx(i == 36 ? 32.0 : 0.0));
    }
    // quadrant branches: DFT of a padded constant 4x4 block, by the oracle
    RealGrid block(8, 8);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) block.at(r, c) = 0.5;
    const auto ref = oracle::dft2(block);
    for (std::size_t b = 1; b < 5; ++b) {
      for (std::size_t i = 0; i < 64; ++i) {
        CHECK(p.branches[b].magnitude[i] == doctest::Approx(std::abs(ref[i])).epsilon(1e-10).scale(1));
      }
    }
  }
  SUBCASE("quadrant order and DC = pixel sum") {
    std::mt19937_64 rng(5);
    const auto img = oracle::random_grid(28, 28, rng, 0, 1);
    const auto p = pyramidal_spectra(img);
    double total = 0;
    for (double v : img.samples) total += v;
    CHECK(p.branches[0].magnitude[14 * 28 + 14] == doctest::Approx(total).epsilon(1e-12));
    const std::size_t r0[] = {0, 0, 14, 14}, c0[] = {0, 14, 0, 14};
    for (std::size_t q = 0; q < 4; ++q) {
      CHECK(p.branches[q + 1].height == 28);
      double s = 0;
      for (std::size_t r = 0; r < 14; ++r)
        for (std::size_t c = 0; c < 14; ++c) s += img.at(r0[q] + r, c0[q] + c);
      CHECK(p.branches[q + 1].magnitude[14 * 28 + 14] == doctest::Approx(s).epsilon(1e-12));
    }
  }
  SUBCASE("zero image and odd dims") {
    for (const auto& b : pyramidal_spectra(RealGrid(6, 4)).branches) {
      for (double m : b.magnitude) CHECK(m == 0.0);
    }
    CHECK_THROWS_AS(pyramidal_spectra(RealGrid(7, 8)), InvalidArgument);
  }
}

TEST_CASE("batch sampler") {
  SUBCASE("each epoch is a permutation") {
    BatchSampler s(10, 5, 3);
    std::vector<std::size_t> seen;
    for (int k = 0; k < 2; ++k) {
      const auto b = s.next();
      seen.insert(seen.end(), b.begin(), b.end());
    }
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(seen[i] == i);
  }
  SUBCASE("deterministic per seed") {
    BatchSampler a(50, 7, 9), b(50, 7, 9), c(50, 7, 10);
    bool differs = false;
    for (int k = 0; k < 20; ++k) {
      const auto x = a.next();
      CHECK(x == b.next());
      differs |= x != c.next();
    }
    CHECK(differs);
  }
  SUBCASE("property: image/label pairing survives shuffling") {
    LabeledImageSet set;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 40; ++i) {
      set.images.push_back(oracle::random_grid(2, 2, rng));
      set.labels.push_back(i % 10);
    }
    const auto key = [](const RealGrid& g, int label) {
      return std::hash<double>{}(g.samples[0] * 7 + g.samples[3]) ^ std::hash<int>{}(label);
    };
    std::multiset<std::size_t> expected;
    for (std::size_t i = 0; i < set.size(); ++i) expected.insert(key(set.images[i], set.labels[i]));
    for (std::uint64_t seed : {1u, 2u, 99u}) {
      BatchSampler s(set.size(), 8, seed);
      std::multiset<std::size_t> got;
      for (int k = 0; k < 5; ++k)
        for (std::size_t i : s.next()) got.insert(key(set.images[i], set.labels[i]));
      CHECK(got == expected);
    }
  }
  SUBCASE("bad sizes") {
    CHECK_THROWS_AS(BatchSampler(0, 4, 1), InvalidArgument);
    CHECK_THROWS_AS(BatchSampler(4, 0, 1), InvalidArgument);
  }
}
