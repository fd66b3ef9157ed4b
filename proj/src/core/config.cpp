#include "adaptnav/core/config.hpp"

#include <cctype>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "adaptnav/core/io.hpp"

namespace adaptnav {
namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for '" + key + "': " + v);
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    unsigned long long out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return static_cast<uint64_t>(out);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad unsigned for '" + key + "': " + v);
  }
}

double to_f64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for '" + key + "': " + v);
  }
}

struct Field {
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

const std::map<std::string, Field>& field_table() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
#define F_INT(key, expr)                                                      \
  t[key] = Field{[](Config& c, const std::string& v) { c.expr = to_int(key, v); }, \
                 [](const Config& c) { return std::to_string(c.expr); }}
#define F_U64(key, expr)                                                      \
  t[key] = Field{[](Config& c, const std::string& v) { c.expr = to_u64(key, v); }, \
                 [](const Config& c) { return std::to_string(c.expr); }}
#define F_F64(key, expr)                                                      \
  t[key] = Field{[](Config& c, const std::string& v) { c.expr = to_f64(key, v); }, \
                 [](const Config& c) { return fmt(c.expr); }}
#define F_STR(key, expr)                                                      \
  t[key] = Field{[](Config& c, const std::string& v) { c.expr = v; },         \
                 [](const Config& c) { return c.expr; }}

    F_INT("world.nodes", world.nodes);
    F_INT("world.feature_dim", world.feature_dim);
    F_F64("world.view_noise", world.view_noise);
    F_F64("world.distractor_rate", world.distractor_rate);
    F_INT("world.nearest_links", world.nearest_links);
    F_F64("world.min_separation", world.min_separation);
    F_F64("world.box_scale", world.box_scale);
    F_INT("world.extra_labels_max", world.extra_labels_max);
    F_U64("world.label_seed", world.label_seed);

    F_INT("episodes.min_path_nodes", episodes.min_path_nodes);
    F_INT("episodes.max_path_nodes", episodes.max_path_nodes);
    F_INT("episodes.max_segments", episodes.max_segments);

    F_INT("data.train_worlds", data.train_worlds);
    F_INT("data.val_worlds", data.val_worlds);
    F_INT("data.train_episodes", data.train_episodes);
    F_INT("data.val_seen_episodes", data.val_seen_episodes);
    F_INT("data.val_unseen_episodes", data.val_unseen_episodes);
    F_U64("data.world_seed_base", data.world_seed_base);
    F_U64("data.val_world_seed_base", data.val_world_seed_base);
    F_U64("data.episode_seed_base", data.episode_seed_base);

    F_STR("encoder.kind", encoder.kind);
    F_INT("encoder.dim", encoder.dim);
    F_U64("encoder.seed", encoder.seed);
    F_F64("encoder.image_noise", encoder.image_noise);
    F_F64("encoder.text_noise", encoder.text_noise);

    F_INT("model.hidden_dim", model.hidden_dim);
    F_INT("model.heads", model.heads);
    F_INT("model.layers", model.layers);
    F_INT("model.ffn_mult", model.ffn_mult);
    F_F64("model.dropout", model.dropout);
    F_INT("model.max_steps", model.max_steps);

    F_F64("prompt.tau1", prompt.tau1);
    F_INT("prompt.nmax", prompt.nmax);

    F_F64("loss.lambda1", loss.lambda1);
    F_F64("loss.lambda2", loss.lambda2);
    F_F64("loss.lambda3", loss.lambda3);
    F_F64("loss.tau2", loss.tau2);
    F_F64("loss.rl_gamma", loss.rl_gamma);
    F_F64("loss.success_bonus", loss.success_bonus);

    F_INT("train.batch_size", train.batch_size);
    F_F64("train.stage1_lr", train.stage1_lr);
    F_F64("train.stage2_lr", train.stage2_lr);
    F_INT("train.stage1_iters", train.stage1_iters);
    F_INT("train.stage2_iters", train.stage2_iters);
    F_INT("train.eval_every", train.eval_every);
    F_U64("train.seed", train.seed);
    F_F64("train.weight_decay", train.weight_decay);
    F_INT("train.il_per_rl", train.il_per_rl);
    F_INT("train.early_stop_evals", train.early_stop_evals);

    F_F64("metrics.success_radius", metrics.success_radius);

#undef F_INT
#undef F_U64
#undef F_F64
#undef F_STR
    return t;
  }();
  return table;
}

}  // namespace

std::map<std::string, std::string> parse_kv_file(const std::string& content) {
  std::map<std::string, std::string> out;
  std::istringstream is(content);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " has no '=': " + t);
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config: empty key on line " +
                                  std::to_string(lineno));
    }
    out[key] = value;
  }
  return out;
}

void Config::apply(const std::string& key, const std::string& value) {
  const auto& table = field_table();
  auto it = table.find(key);
  if (it == table.end()) {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  it->second.set(*this, value);
}

void Config::apply_file(const std::string& path) {
  for (const auto& [k, v] : parse_kv_file(read_file(path))) apply(k, v);
}

Config Config::from_file(const std::string& path) {
  Config c;
  c.apply_file(path);
  c.validate();
  return c;
}

std::map<std::string, std::string> Config::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : field_table()) out[k] = f.get(*this);
  return out;
}

void Config::validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
  };
  if (world.nodes < 4) fail("world.nodes must be >= 4");
  if (world.feature_dim < 1) fail("world.feature_dim must be >= 1");
  if (world.view_noise < 0) fail("world.view_noise must be >= 0");
  if (world.nearest_links < 1) fail("world.nearest_links must be >= 1");
  if (episodes.min_path_nodes < 2) fail("episodes.min_path_nodes must be >= 2");
  if (episodes.max_path_nodes < episodes.min_path_nodes)
    fail("episodes.max_path_nodes must be >= episodes.min_path_nodes");
  if (episodes.max_segments < 1) fail("episodes.max_segments must be >= 1");
  if (encoder.kind != "mock" && encoder.kind != "external")
    fail("encoder.kind must be mock or external");
  if (encoder.dim < 1) fail("encoder.dim must be >= 1");
  if (model.hidden_dim < 1) fail("model.hidden_dim must be >= 1");
  if (model.heads < 1) fail("model.heads must be >= 1");
  if (model.hidden_dim % model.heads != 0)
    fail("model.hidden_dim must be divisible by model.heads");
  if (model.layers < 1) fail("model.layers must be >= 1");
  if (model.dropout < 0 || model.dropout >= 1)
    fail("model.dropout must be in [0, 1)");
  if (model.max_steps < 1) fail("model.max_steps must be >= 1");
  if (prompt.tau1 <= 0) fail("prompt.tau1 must be > 0");
  if (prompt.nmax < 0) fail("prompt.nmax must be >= 0");
  if (loss.tau2 <= 0) fail("loss.tau2 must be > 0");
  if (loss.rl_gamma <= 0 || loss.rl_gamma > 1)
    fail("loss.rl_gamma must be in (0, 1]");
  if (train.batch_size < 1) fail("train.batch_size must be >= 1");
  if (train.stage1_lr <= 0 || train.stage2_lr <= 0) fail("lr must be > 0");
  if (train.eval_every < 1) fail("train.eval_every must be >= 1");
  if (train.il_per_rl < 1) fail("train.il_per_rl must be >= 1");
  if (metrics.success_radius <= 0) fail("metrics.success_radius must be > 0");
}

}  // namespace adaptnav
