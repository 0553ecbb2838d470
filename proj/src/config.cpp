#include "fdnet/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fdnet/error.hpp"
#include "fdnet/model.hpp"

namespace fdnet {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

// section -> key -> entry
using Table = std::map<std::string, std::map<std::string, Entry>>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"run",
       {"variant", "dataset", "data_root", "train_limit", "test_limit", "seed",
        "att_train_per_class", "att_size", "split_seed"}},
      {"optimizer", {"learning_rate", "momentum", "batch_size", "iterations", "eval_every"}},
      {"spectral", {"pyramidal", "sparse_mode", "alpha", "beta", "use_2srelu", "dc_removal"}},
      {"head", {"hidden"}},
      {"block", {"channels", "convs", "kernel", "pool"}},
  };
  return keys;
}

bool is_block_section(const std::string& s, std::size_t* index) {
  if (s.rfind("block.", 0) != 0) return false;
  const std::string num = s.substr(6);
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
  if (ec != std::errc() || p != num.data() + num.size() || v == 0) return false;
  if (index) *index = v;
  return true;
}

Table tokenize(std::string_view text) {
  Table table;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      const std::string kind = is_block_section(section, nullptr) ? "block" : section;
      if (!allowed_keys().contains(kind)) fail(line_no, "unknown section [" + section + "]");
      // an empty [block.N] still declares a block
      table[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value', got '" + line + "'");
    if (section.empty()) fail(line_no, "key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    const std::string kind = is_block_section(section, nullptr) ? "block" : section;
    if (!allowed_keys().at(kind).contains(key)) {
      fail(line_no, "unknown key '" + key + "' in [" + section + "]");
    }
    auto& keys = table[section];
    if (const auto it = keys.find(key); it != keys.end()) {
      fail(line_no, "duplicate key '" + key + "' in [" + section + "] (first set on line " +
                        std::to_string(it->second.line) + ", again on line " +
                        std::to_string(line_no) + ")");
    }
    keys[key] = Entry{value, line_no};
  }
  return table;
}

class Section {
 public:
  Section(const Table& t, const std::string& name) {
    if (const auto it = t.find(name); it != t.end()) keys_ = &it->second;
  }

  const Entry* find(const std::string& key) const {
    if (!keys_) return nullptr;
    const auto it = keys_->find(key);
    return it == keys_->end() ? nullptr : &it->second;
  }

  std::size_t count(const std::string& key, std::size_t dflt) const {
    const Entry* e = find(key);
    if (!e) return dflt;
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || p != e->value.data() + e->value.size()) {
      fail(e->line, "'" + key + "' must be a non-negative integer, got '" + e->value + "'");
    }
    return v;
  }

  double real(const std::string& key, double dflt) const {
    const Entry* e = find(key);
    if (!e) return dflt;
    try {
      std::size_t used = 0;
      const double v = std::stod(e->value, &used);
      if (used != e->value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      fail(e->line, "'" + key + "' must be a number, got '" + e->value + "'");
    }
  }

  bool boolean(const std::string& key, bool dflt) const {
    const Entry* e = find(key);
    if (!e) return dflt;
    if (e->value == "true" || e->value == "on" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "off" || e->value == "no") return false;
    fail(e->line, "'" + key + "' must be true or false, got '" + e->value + "'");
  }

 private:
  const std::map<std::string, Entry>* keys_ = nullptr;
};

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::spatial ? "spatial" : "frequency"; }
std::string_view to_string(DatasetKind d) { return d == DatasetKind::mnist ? "mnist" : "att"; }

NetworkConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const Table table = tokenize(text);

  std::vector<std::string> missing;
  const Section run(table, "run");
  for (const char* k : {"variant", "dataset", "data_root"}) {
    if (!run.find(k)) missing.push_back(std::string("run.") + k);
  }
  std::map<std::size_t, std::string> block_sections;
  for (const auto& [name, keys] : table) {
    std::size_t idx = 0;
    if (is_block_section(name, &idx)) block_sections[idx] = name;
  }
  if (block_sections.empty()) missing.push_back("[block.1] (at least one block)");
  if (!missing.empty()) {
    std::string msg = "missing required settings:";
    for (const auto& m : missing) msg += " " + m;
    throw ConfigError(msg);
  }

  NetworkConfig cfg;
  {
    const Entry* v = run.find("variant");
    if (v->value == "spatial") {
      cfg.variant = Variant::spatial;
    } else if (v->value == "frequency") {
      cfg.variant = Variant::frequency;
    } else {
      fail(v->line, "variant must be 'spatial' or 'frequency', got '" + v->value + "'");
    }
    const Entry* d = run.find("dataset");
    if (d->value == "mnist") {
      cfg.dataset = DatasetKind::mnist;
    } else if (d->value == "att") {
      cfg.dataset = DatasetKind::att;
    } else {
      fail(d->line, "dataset must be 'mnist' or 'att', got '" + d->value + "'");
    }
    std::filesystem::path root = run.find("data_root")->value;
    cfg.data_root = root.is_absolute() || base_dir.empty() ? root : base_dir / root;
    cfg.train_limit = run.count("train_limit", 0);
    cfg.test_limit = run.count("test_limit", 0);
    cfg.seed = run.count("seed", 1);
    cfg.att_train_per_class = run.count("att_train_per_class", 5);
    cfg.att_size = run.count("att_size", 64);
    cfg.split_seed = run.count("split_seed", 1);
  }

  const Section opt(table, "optimizer");
  cfg.optimizer.learning_rate = opt.real("learning_rate", 0.01);
  cfg.optimizer.momentum = opt.real("momentum", 0.9);
  cfg.optimizer.batch_size = opt.count("batch_size", 64);
  cfg.optimizer.iterations = opt.count("iterations", 100000);
  cfg.eval_every = opt.count("eval_every", 1000);

  if (table.contains("spectral") && cfg.variant != Variant::frequency) {
    throw ConfigError("section [spectral] is only valid for the frequency variant");
  }
  const Section sp(table, "spectral");
  cfg.spectral.pyramidal = sp.boolean("pyramidal", cfg.dataset == DatasetKind::mnist);
  if (const Entry* m = sp.find("sparse_mode")) {
    if (m->value == "polar") {
      cfg.spectral.sparse_mode = SparseMode::polar;
    } else if (m->value == "hadamard-both") {
      cfg.spectral.sparse_mode = SparseMode::hadamard_both;
    } else {
      fail(m->line, "sparse_mode must be 'polar' or 'hadamard-both', got '" + m->value + "'");
    }
  }
  cfg.spectral.tsrelu.alpha = sp.real("alpha", TwoSReLUConfig{}.alpha);
  cfg.spectral.tsrelu.beta = sp.real("beta", TwoSReLUConfig{}.beta);
  cfg.spectral.use_2srelu = sp.boolean("use_2srelu", true);
  cfg.spectral.dc_removal = sp.boolean("dc_removal", false);

  const Section head(table, "head");
  if (const Entry* h = head.find("hidden")) {
    std::istringstream ss(h->value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      std::size_t v = 0;
      const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || p != item.data() + item.size() || v == 0) {
        fail(h->line, "hidden widths must be positive integers, got '" + item + "'");
      }
      cfg.fc_hidden.push_back(v);
    }
  } else if (cfg.variant == Variant::spatial) {
    cfg.fc_hidden = {256, 128};
  }

  std::size_t expected = 1;
  for (const auto& [idx, name] : block_sections) {
    if (idx != expected) {
      throw ConfigError("blocks must be numbered 1..N without gaps; missing [block." +
                        std::to_string(expected) + "]");
    }
    ++expected;
    const Section s(table, name);
    BlockConfig b;
    b.name = name;
    b.channels = s.count("channels", 16);
    if (cfg.variant == Variant::spatial) {
      b.convs = s.count("convs", 2);
      b.kernel = s.count("kernel", 3);
      if (const Entry* p = s.find("pool")) {
        if (p->value == "max") {
          b.max_pool = true;
        } else if (p->value == "none") {
          b.max_pool = false;
        } else {
          fail(p->line, "spatial pool must be 'max' or 'none', got '" + p->value + "'");
        }
      }
    } else {
      for (const char* k : {"convs", "kernel"}) {
        if (const Entry* e = s.find(k)) {
          fail(e->line, std::string("'") + k + "' is only valid for the spatial variant");
        }
      }
      if (const Entry* p = s.find("pool")) {
        std::size_t h = 0, w = 0;
        const auto x = p->value.find('x');
        const auto parse = [&](std::string_view t, std::size_t& out) {
          const auto [q, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
          return ec == std::errc() && q == t.data() + t.size();
        };
        const std::string_view v = p->value;
        const bool ok = x == std::string::npos
                            ? parse(v, h) && (w = h, true)
                            : parse(v.substr(0, x), h) && parse(v.substr(x + 1), w);
        if (!ok) fail(p->line, "frequency pool must be 'N' or 'HxW', got '" + p->value + "'");
        b.pool_height = h;
        b.pool_width = w;
      }
    }
    cfg.blocks.push_back(b);
  }

  validate_config(cfg);
  return cfg;
}

NetworkConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void validate_config(const NetworkConfig& cfg) {
  if (!(cfg.optimizer.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(cfg.optimizer.momentum >= 0.0 && cfg.optimizer.momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (cfg.optimizer.batch_size < 2) {
    throw ConfigError("batch_size must be at least 2 (batch normalization)");
  }
  if (cfg.eval_every == 0) throw ConfigError("eval_every must be positive");
  if (cfg.dataset == DatasetKind::att && cfg.att_size < 2) {
    throw ConfigError("att_size must be at least 2");
  }
  for (const auto& b : cfg.blocks) {
    if (b.channels == 0) throw ConfigError(b.name + ": channels must be positive");
    if (cfg.variant == Variant::spatial) {
      if (b.convs == 0) throw ConfigError(b.name + ": convs must be positive");
      if (b.kernel % 2 == 0) throw ConfigError(b.name + ": kernel must be odd");
    }
  }
  if (cfg.variant == Variant::frequency && cfg.spectral.pyramidal) {
    const auto in = input_shape(cfg);
    if (in.height % 2 != 0 || in.width % 2 != 0) {
      throw ConfigError("pyramidal input needs even image dims, got " + to_string(in));
    }
  }
  // building checks every layer's input shape
  Rng rng(0);
  auto net = build_network(cfg, rng);
  net->output_shape(input_shape(cfg));
}

}  // namespace fdnet
