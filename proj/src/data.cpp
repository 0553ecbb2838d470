#include "fdnet/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include "fdnet/error.hpp"

namespace fdnet {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t off) {
  if (off + 4 > b.size()) throw ParseError("idx: truncated header", b.size());
  return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

// "s10" > "s9": compare the digit runs numerically.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) &&
        std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      const auto na = std::stoull(a.substr(i, ie - i));
      const auto nb = std::stoull(b.substr(j, je - j));
      if (na != nb) return na < nb;
      i = ie, j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i, ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

}  // namespace

LabeledImageSet LabeledImageSet::head(std::size_t n) const {
  if (n == 0 || n >= size()) return *this;
  LabeledImageSet out;
  out.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(n));
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  out.class_count = class_count;
  return out;
}

// ----------------------------------------------------------------------- IDX

LabeledImageSet parse_mnist(std::span<const std::uint8_t> image_bytes,
                            std::span<const std::uint8_t> label_bytes) {
  if (be32(image_bytes, 0) != 0x00000803) throw ParseError("idx images: bad magic", 0);
  const std::uint32_t count = be32(image_bytes, 4);
  const std::uint32_t rows = be32(image_bytes, 8);
  const std::uint32_t cols = be32(image_bytes, 12);
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  const std::size_t need = 16 + static_cast<std::size_t>(count) * pixels;
  if (image_bytes.size() < need) {
    throw ParseError("idx images: truncated pixel data, expected " + std::to_string(need) +
                         " bytes",
                     image_bytes.size());
  }

  if (be32(label_bytes, 0) != 0x00000801) throw ParseError("idx labels: bad magic", 0);
  const std::uint32_t label_count = be32(label_bytes, 4);
  if (label_count != count) {
    throw ParseError("idx: " + std::to_string(count) + " images but " +
                         std::to_string(label_count) + " labels",
                     4);
  }
  if (label_bytes.size() < 8 + static_cast<std::size_t>(count)) {
    throw ParseError("idx labels: truncated label data", label_bytes.size());
  }

  LabeledImageSet set;
  set.images.reserve(count);
  set.labels.reserve(count);
  int max_label = -1;
  for (std::size_t k = 0; k < count; ++k) {
    RealGrid g(rows, cols);
    const std::uint8_t* src = image_bytes.data() + 16 + k * pixels;
    for (std::size_t i = 0; i < pixels; ++i) g.samples[i] = static_cast<double>(src[i]) / 255.0;
    set.images.push_back(std::move(g));
    const int label = label_bytes[8 + k];
    set.labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  set.class_count = static_cast<std::size_t>(max_label + 1);
  return set;
}

LabeledImageSet load_mnist(const std::filesystem::path& images_path,
                           const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);
  return parse_mnist(images, labels);
}

// ----------------------------------------------------------------------- PGM

RealGrid parse_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  const auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto read_uint = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw ParseError(std::string("pgm: expected ") + what, start);
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError("pgm: not a binary P5 file", 0);
  }
  pos = 2;
  const std::size_t width = read_uint("width");
  const std::size_t height = read_uint("height");
  const std::size_t maxval_pos = pos;
  const std::size_t maxval = read_uint("maxval");
  if (maxval != 255) {
    throw ParseError("pgm: maxval " + std::to_string(maxval) + " unsupported (need 255)",
                     maxval_pos);
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw ParseError("pgm: missing whitespace before pixel data", pos);
  }
  ++pos;
  if (width == 0 || height == 0) throw ParseError("pgm: empty image", pos);
  if (bytes.size() - pos < width * height) {
    throw ParseError("pgm: short pixel payload, expected " + std::to_string(width * height) +
                         " bytes",
                     bytes.size());
  }
  RealGrid g(height, width);
  for (std::size_t i = 0; i < width * height; ++i) {
    g.samples[i] = static_cast<double>(bytes[pos + i]) / 255.0;
  }
  return g;
}

RealGrid load_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path)); }

LabeledImageSet load_att(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("AT&T root " + root.string() + " is not a directory");
  std::vector<std::string> subjects;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) subjects.push_back(e.path().filename().string());
  }
  std::sort(subjects.begin(), subjects.end(), natural_less);
  if (subjects.empty()) throw IoError("AT&T root " + root.string() + " has no subject folders");

  LabeledImageSet set;
  for (std::size_t label = 0; label < subjects.size(); ++label) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(root / subjects[label])) {
      if (e.is_regular_file() && e.path().extension() == ".pgm") {
        files.push_back(e.path().filename().string());
      }
    }
    std::sort(files.begin(), files.end(), natural_less);
    for (const auto& f : files) {
      set.images.push_back(load_pgm(root / subjects[label] / f));
      set.labels.push_back(static_cast<int>(label));
    }
  }
  set.class_count = subjects.size();
  for (const auto& img : set.images) {
    if (img.height != set.images.front().height || img.width != set.images.front().width) {
      throw ParseError("AT&T: images differ in size", 0);
    }
  }
  return set;
}

TrainTestSplit att_split(const LabeledImageSet& set, std::size_t per_class_train,
                         std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < set.size(); ++i) by_class[set.labels[i]].push_back(i);
  Rng rng(seed);
  TrainTestSplit out;
  out.train.class_count = out.test.class_count = set.class_count;
  for (auto& [label, idx] : by_class) {
    if (per_class_train >= idx.size()) {
      throw InvalidArgument("att_split: class " + std::to_string(label) + " has " +
                            std::to_string(idx.size()) + " images, cannot hold out with " +
                            std::to_string(per_class_train) + " for training");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto& dst = k < per_class_train ? out.train : out.test;
      dst.images.push_back(set.images[idx[k]]);
      dst.labels.push_back(label);
    }
  }
  return out;
}

RealGrid resize_bilinear(const RealGrid& img, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw InvalidArgument("resize: empty target");
  RealGrid out(height, width);
  const double sy = static_cast<double>(img.height) / static_cast<double>(height);
  const double sx = static_cast<double>(img.width) / static_cast<double>(width);
  const auto clamp = [](double v, std::size_t n) {
    return std::clamp(v, 0.0, static_cast<double>(n - 1));
  };
  for (std::size_t r = 0; r < height; ++r) {
    const double fy = clamp((static_cast<double>(r) + 0.5) * sy - 0.5, img.height);
    const auto y0 = static_cast<std::size_t>(std::floor(fy));
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t c = 0; c < width; ++c) {
      const double fx = clamp((static_cast<double>(c) + 0.5) * sx - 0.5, img.width);
      const auto x0 = static_cast<std::size_t>(std::floor(fx));
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - static_cast<double>(x0);
      out.at(r, c) = (1 - wy) * ((1 - wx) * img.at(y0, x0) + wx * img.at(y0, x1)) +
                     wy * ((1 - wx) * img.at(y1, x0) + wx * img.at(y1, x1));
    }
  }
  return out;
}

PyramidalSpectra pyramidal_spectra(const RealGrid& img) {
  if (img.height % 2 != 0 || img.width % 2 != 0 || img.height < 2 || img.width < 2) {
    throw InvalidArgument("pyramidal_spectra: image dims must be even, got " +
                          std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  PyramidalSpectra out;
  out.branches[0] = dft2(img);
  const std::size_t qh = img.height / 2, qw = img.width / 2;
  for (std::size_t q = 0; q < 4; ++q) {
    const std::size_t r0 = (q / 2) * qh, c0 = (q % 2) * qw;
    RealGrid quad(qh, qw);
    for (std::size_t r = 0; r < qh; ++r) {
      for (std::size_t c = 0; c < qw; ++c) quad.at(r, c) = img.at(r0 + r, c0 + c);
    }
    out.branches[q + 1] = dft2(zero_pad(quad, img.height, img.width));
  }
  return out;
}

// -------------------------------------------------------------- BatchSampler

BatchSampler::BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
    : size_(dataset_size), batch_(batch_size), rng_(seed) {
  if (size_ == 0) throw InvalidArgument("BatchSampler: empty dataset");
  if (batch_ == 0) throw InvalidArgument("BatchSampler: batch size must be positive");
  order_.resize(size_);
  reshuffle();
}

void BatchSampler::reshuffle() {
  for (std::size_t i = 0; i < size_; ++i) order_[i] = i;
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> out;
  out.reserve(batch_);
  while (out.size() < batch_) {
    if (cursor_ == size_) reshuffle();
    out.push_back(order_[cursor_++]);
  }
  return out;
}

}  // namespace fdnet
