#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adaptnav/core/config.hpp"
#include "adaptnav/core/vocab.hpp"

namespace adaptnav {

// One of the 36 views in a node's panorama (12 headings x 3 elevations).
struct ViewImage {
  std::vector<std::string> labels;  // sorted object labels visible here
  int heading = 0;                  // 0..11, 30-degree sectors
  int elevation = 0;                // 0 down, 1 middle, 2 up
  uint64_t noise_seed = 0;          // per-view noise stream
  Eigen::VectorXd feature;          // unit-norm raw feature b
};

struct WorldNode {
  int id = 0;
  double x = 0, y = 0;
  std::string location;             // primary location label
  std::vector<std::string> labels;  // location + extras, sorted
  std::vector<int> neighbors;       // sorted ascending
  std::vector<ViewImage> panorama;  // exactly 36 views
};

struct WorldParams {
  int nodes = 25;
  int feature_dim = 64;
  double view_noise = 0.3;
  double distractor_rate = 0.05;
  int nearest_links = 3;
  double min_separation = 3.2;
  double box_scale = 4.5;
  int extra_labels_max = 2;
  uint64_t label_seed = 7777;
  Vocabularies vocabs;

  static WorldParams from_config(const Config& cfg, const Vocabularies& vocabs);
};

class NavGraph {
 public:
  uint64_t seed = 0;
  WorldParams params;
  std::vector<WorldNode> nodes;
  std::vector<std::pair<int, int>> edges;  // a < b, sorted

  const WorldNode& node(int id) const;
  bool adjacent(int a, int b) const;
  double edge_length(int a, int b) const;  // Euclidean; throws if not adjacent

  // Index into `from`'s panorama of the middle-elevation view whose heading
  // sector faces `to`; this is the approach view used as the candidate
  // feature for moving from -> to.
  int approach_view_index(int from, int to) const;

  // Dijkstra over edge lengths.
  double shortest_path_length(int a, int b) const;
  std::vector<int> shortest_path(int a, int b) const;

  void validate() const;  // checks all NavGraph invariants, throws on breakage
};

// Candidate actions at a node: J neighbors (sorted by id) then stop.
struct CandidateSet {
  int node = 0;
  std::vector<int> targets;      // neighbor node ids, ascending
  std::vector<int> view_index;   // approach view per target
  int size() const { return static_cast<int>(targets.size()) + 1; }
  int stop_index() const { return static_cast<int>(targets.size()); }
};

CandidateSet candidates_at(const NavGraph& graph, int node);

// Applies a candidate index: 0..J-1 -> neighbor id, J -> kTerminal.
inline constexpr int kTerminal = -1;
int step(const NavGraph& graph, int current, int action);

struct SubPath {
  int first = 0;  // inclusive indices into Episode::path
  int last = 0;
};

struct Episode {
  int64_t id = 0;
  std::string instruction;
  std::vector<int> path;  // node ids, pairwise adjacent
  std::vector<std::pair<std::string, SubPath>> sub_paths;  // by segment order
  uint64_t world_seed = 0;
  std::string split;  // train | val_seen | val_unseen

  const SubPath* sub_path_for(const std::string& label) const;
  void validate(const NavGraph& graph) const;
};

struct EpisodeParams {
  int min_path_nodes = 3;
  int max_path_nodes = 7;
  int max_segments = 3;

  static EpisodeParams from_config(const Config& cfg);
};

// Deterministic in (seed, params). Throws std::runtime_error when the graph
// admits no simple path of the requested length after bounded retries.
NavGraph generate_world(uint64_t seed, const WorldParams& params);
Episode generate_episode(const NavGraph& graph, uint64_t seed,
                         const EpisodeParams& params);

// --- serialization ---------------------------------------------------------
std::string graph_to_json(const NavGraph& graph);
NavGraph graph_from_json(const std::string& text, const WorldParams& params);

std::string episodes_to_jsonl(const std::vector<Episode>& episodes);
std::vector<Episode> episodes_from_jsonl(const std::string& text);

// --- dataset assembly -------------------------------------------------------
// Regenerates graphs by seed on demand; graphs are immutable once built.
class WorldStore {
 public:
  explicit WorldStore(WorldParams params) : params_(std::move(params)) {}
  const NavGraph& get(uint64_t seed);
  const WorldParams& params() const { return params_; }

 private:
  WorldParams params_;
  std::map<uint64_t, NavGraph> cache_;
};

// Builds the full train/val_seen/val_unseen episode set per the data config.
// Training worlds use seeds world_seed_base+i; val-unseen worlds use the
// disjoint val_world_seed_base+i block.
std::vector<Episode> generate_dataset(const Config& cfg, WorldStore& store);

}  // namespace adaptnav
