#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace adaptnav {

// Flat dotted-key config. Every knob has a default; files and CLI flags
// override (flag wins over file).
struct Config {
  struct World {
    int nodes = 25;
    int feature_dim = 64;
    double view_noise = 0.3;
    double distractor_rate = 0.05;
    int nearest_links = 3;
    double min_separation = 3.2;
    double box_scale = 4.5;      // box side = box_scale * sqrt(nodes)
    int extra_labels_max = 2;    // extra object labels per node
    uint64_t label_seed = 7777;  // shared label-geometry seed for raw features
  } world;

  struct Episodes {
    int min_path_nodes = 3;
    int max_path_nodes = 7;
    int max_segments = 3;
  } episodes;

  struct Data {
    int train_worlds = 5;
    int val_worlds = 2;
    int train_episodes = 500;
    int val_seen_episodes = 0;
    int val_unseen_episodes = 100;
    uint64_t world_seed_base = 100;
    uint64_t val_world_seed_base = 9100;  // disjoint from training world seeds
    uint64_t episode_seed_base = 500000;
  } data;

  struct Encoder {
    std::string kind = "mock";  // mock | external
    int dim = 64;
    uint64_t seed = 7777;
    double image_noise = 0.3;
    double text_noise = 0.25;
  } encoder;

  struct Model {
    int hidden_dim = 64;
    int heads = 4;
    int layers = 2;
    int ffn_mult = 4;
    double dropout = 0.1;
    int max_steps = 15;
  } model;

  struct Prompt {
    double tau1 = 0.07;
    int nmax = 60;
  } prompt;

  struct Loss {
    double lambda1 = 0.2;
    double lambda2 = 0.01;
    double lambda3 = 0.0001;
    double tau2 = 0.1;
    double rl_gamma = 0.9;
    double success_bonus = 2.0;
  } loss;

  struct Train {
    int batch_size = 16;
    double stage1_lr = 1e-5;
    double stage2_lr = 1e-6;
    int stage1_iters = 2000;
    int stage2_iters = 1000;
    int eval_every = 200;
    uint64_t seed = 1;
    double weight_decay = 0.01;
    int il_per_rl = 1;          // IL passes per RL pass
    int early_stop_evals = 5;   // 0 disables early stop
  } train;

  struct Metrics {
    double success_radius = 3.0;
  } metrics;

  // Applies one dotted key. Throws std::invalid_argument on unknown keys or
  // unparsable values.
  void apply(const std::string& key, const std::string& value);

  // Cross-field sanity checks; throws on violations.
  void validate() const;

  static Config from_file(const std::string& path);
  void apply_file(const std::string& path);

  // All keys in dotted form, for round-trips and --help listings.
  std::map<std::string, std::string> to_map() const;
};

// Parses "key = value" lines; '#' lines are comments.
std::map<std::string, std::string> parse_kv_file(const std::string& content);

}  // namespace adaptnav
