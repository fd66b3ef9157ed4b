#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

#include "adaptnav/core/features.hpp"
#include "adaptnav/core/rng.hpp"
#include "adaptnav/world/world.hpp"

namespace adaptnav {
namespace {

constexpr int kHeadings = 12;
constexpr int kElevations = 3;
constexpr double kPi = 3.14159265358979323846;

int heading_sector(double dx, double dy) {
  double ang = std::atan2(dy, dx);
  if (ang < 0) ang += 2 * kPi;
  int h = static_cast<int>(std::lround(ang / (2 * kPi / kHeadings)));
  return h % kHeadings;
}

Eigen::VectorXd view_feature(const std::vector<std::string>& labels,
                             uint64_t label_seed, uint64_t noise_seed,
                             double noise, int dim) {
  Eigen::VectorXd sum = noise * unit_noise(noise_seed, dim);
  for (const auto& l : labels) sum += label_direction(label_seed, l, dim);
  return normalize(sum);
}

}  // namespace

WorldParams WorldParams::from_config(const Config& cfg,
                                     const Vocabularies& vocabs) {
  WorldParams p;
  p.nodes = cfg.world.nodes;
  p.feature_dim = cfg.world.feature_dim;
  p.view_noise = cfg.world.view_noise;
  p.distractor_rate = cfg.world.distractor_rate;
  p.nearest_links = cfg.world.nearest_links;
  p.min_separation = cfg.world.min_separation;
  p.box_scale = cfg.world.box_scale;
  p.extra_labels_max = cfg.world.extra_labels_max;
  p.label_seed = cfg.world.label_seed;
  p.vocabs = vocabs;
  return p;
}

EpisodeParams EpisodeParams::from_config(const Config& cfg) {
  EpisodeParams p;
  p.min_path_nodes = cfg.episodes.min_path_nodes;
  p.max_path_nodes = cfg.episodes.max_path_nodes;
  p.max_segments = cfg.episodes.max_segments;
  return p;
}

const WorldNode& NavGraph::node(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes.size()))
    throw std::out_of_range("world: node id out of range");
  return nodes[id];
}

bool NavGraph::adjacent(int a, int b) const {
  const auto& nb = node(a).neighbors;
  return std::binary_search(nb.begin(), nb.end(), b);
}

double NavGraph::edge_length(int a, int b) const {
  if (!adjacent(a, b)) throw std::invalid_argument("world: nodes not adjacent");
  const auto& na = node(a);
  const auto& nb = node(b);
  return std::hypot(na.x - nb.x, na.y - nb.y);
}

int NavGraph::approach_view_index(int from, int to) const {
  const auto& nf = node(from);
  const auto& nt = node(to);
  int h = heading_sector(nt.x - nf.x, nt.y - nf.y);
  return kHeadings + h;  // middle elevation block is views 12..23
}

double NavGraph::shortest_path_length(int a, int b) const {
  node(a);
  node(b);
  if (a == b) return 0.0;
  std::vector<double> dist(nodes.size(), std::numeric_limits<double>::infinity());
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                      std::greater<>>
      pq;
  dist[a] = 0;
  pq.push({0.0, a});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == b) return d;
    for (int v : nodes[u].neighbors) {
      double nd = d + edge_length(u, v);
      if (nd < dist[v]) {
        dist[v] = nd;
        pq.push({nd, v});
      }
    }
  }
  throw std::logic_error("world: unreachable node pair on a connected graph");
}

std::vector<int> NavGraph::shortest_path(int a, int b) const {
  node(a);
  node(b);
  std::vector<double> dist(nodes.size(), std::numeric_limits<double>::infinity());
  std::vector<int> prev(nodes.size(), -1);
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                      std::greater<>>
      pq;
  dist[a] = 0;
  pq.push({0.0, a});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (int v : nodes[u].neighbors) {
      double nd = d + edge_length(u, v);
      if (nd < dist[v]) {
        dist[v] = nd;
        prev[v] = u;
        pq.push({nd, v});
      }
    }
  }
  if (!std::isfinite(dist[b]))
    throw std::logic_error("world: unreachable node pair on a connected graph");
  std::vector<int> path;
  for (int u = b; u != -1; u = prev[u]) path.push_back(u);
  std::reverse(path.begin(), path.end());
  return path;
}

void NavGraph::validate() const {
  if (nodes.empty()) throw std::runtime_error("world: empty graph");
  std::vector<int> seen(nodes.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  size_t reached = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : nodes[u].neighbors) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  if (reached != nodes.size()) throw std::runtime_error("world: disconnected");
  for (const auto& n : nodes) {
    if (n.neighbors.empty()) throw std::runtime_error("world: isolated node");
    if (n.panorama.size() != kHeadings * kElevations)
      throw std::runtime_error("world: panorama must hold 36 views");
    for (const auto& v : n.panorama) {
      if (std::abs(v.feature.norm() - 1.0) > 1e-9)
        throw std::runtime_error("world: view feature not unit-norm");
    }
  }
}

CandidateSet candidates_at(const NavGraph& graph, int node) {
  CandidateSet cs;
  cs.node = node;
  for (int nb : graph.node(node).neighbors) {
    cs.targets.push_back(nb);
    cs.view_index.push_back(graph.approach_view_index(node, nb));
  }
  return cs;
}

int step(const NavGraph& graph, int current, int action) {
  const auto& nb = graph.node(current).neighbors;
  int j = static_cast<int>(nb.size());
  if (action < 0 || action > j)
    throw std::out_of_range("world: action index out of range");
  if (action == j) return kTerminal;
  return nb[action];
}

NavGraph generate_world(uint64_t seed, const WorldParams& params) {
  if (params.nodes < 4)
    throw std::invalid_argument("world: node count must be >= 4");
  if (params.vocabs.objects.empty())
    throw std::invalid_argument("world: empty object vocabulary");
  params.vocabs.validate();

  NavGraph g;
  g.seed = seed;
  g.params = params;
  const int n = params.nodes;
  Rng rng(seed_combine(seed, 0x776f726cULL));  // "worl"

  // Node positions: rejection-sample for minimum separation in a box whose
  // side grows with sqrt(n) so density stays roughly constant.
  const double box = params.box_scale * std::sqrt(static_cast<double>(n));
  std::vector<std::pair<double, double>> pos;
  int guard = 0;
  while (static_cast<int>(pos.size()) < n) {
    double x = rng.uniform() * box, y = rng.uniform() * box;
    bool ok = true;
    for (auto& [px, py] : pos) {
      if (std::hypot(x - px, y - py) < params.min_separation) {
        ok = false;
        break;
      }
    }
    if (ok) pos.emplace_back(x, y);
    if (++guard > 200000)
      throw std::runtime_error("world: cannot place nodes; lower min_separation");
  }

  g.nodes.resize(n);
  for (int i = 0; i < n; ++i) {
    g.nodes[i].id = i;
    g.nodes[i].x = pos[i].first;
    g.nodes[i].y = pos[i].second;
  }

  // Edges: k nearest neighbors, then stitch any disconnected components
  // together through their closest cross pair.
  std::set<std::pair<int, int>> edge_set;
  auto add_edge = [&](int a, int b) {
    if (a == b) return;
    edge_set.insert({std::min(a, b), std::max(a, b)});
  };
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> d;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      d.push_back({std::hypot(pos[i].first - pos[j].first,
                              pos[i].second - pos[j].second),
                   j});
    }
    std::sort(d.begin(), d.end());
    for (int k = 0; k < std::min<int>(params.nearest_links, d.size()); ++k)
      add_edge(i, d[k].second);
  }
  // Union-find over current edges.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (auto& [a, b] : edge_set) unite(a, b);
  while (true) {
    int best_a = -1, best_b = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (find(i) == find(j)) continue;
        double d = std::hypot(pos[i].first - pos[j].first,
                              pos[i].second - pos[j].second);
        if (d < best_d) {
          best_d = d;
          best_a = i;
          best_b = j;
        }
      }
    }
    if (best_a < 0) break;  // fully connected
    add_edge(best_a, best_b);
    unite(best_a, best_b);
  }
  g.edges.assign(edge_set.begin(), edge_set.end());
  for (auto& [a, b] : g.edges) {
    g.nodes[a].neighbors.push_back(b);
    g.nodes[b].neighbors.push_back(a);
  }
  for (auto& node : g.nodes)
    std::sort(node.neighbors.begin(), node.neighbors.end());

  // Labels: one location word per node plus a few extras.
  const auto& objs = params.vocabs.objects;
  for (auto& node : g.nodes) {
    Rng lr(seed_combine(seed, static_cast<uint64_t>(node.id), 0x6c61626cULL));
    node.location = objs[lr.uniform_int(objs.size())];
    std::set<std::string> ls{node.location};
    int extras = static_cast<int>(lr.uniform_int(params.extra_labels_max + 1));
    for (int e = 0; e < extras; ++e) ls.insert(objs[lr.uniform_int(objs.size())]);
    node.labels.assign(ls.begin(), ls.end());
  }

  // Panoramas: middle-elevation views facing a neighbor show that neighbor's
  // labels (the approach view); other middle views show the node's own
  // labels; top/bottom views carry no structural labels. Any view may gain a
  // distractor label.
  for (auto& node : g.nodes) {
    std::map<int, std::set<std::string>> facing;  // heading -> neighbor labels
    for (int nb : node.neighbors) {
      int h = heading_sector(g.nodes[nb].x - node.x, g.nodes[nb].y - node.y);
      facing[h].insert(g.nodes[nb].labels.begin(), g.nodes[nb].labels.end());
    }
    node.panorama.resize(kHeadings * kElevations);
    for (int e = 0; e < kElevations; ++e) {
      for (int h = 0; h < kHeadings; ++h) {
        ViewImage& v = node.panorama[e * kHeadings + h];
        v.heading = h;
        v.elevation = e;
        v.noise_seed = seed_combine(
            seed, static_cast<uint64_t>(node.id) * 64 + e * kHeadings + h,
            0x76696577ULL);  // "view"
        std::set<std::string> ls;
        if (e == 1) {
          auto it = facing.find(h);
          if (it != facing.end())
            ls = it->second;
          else
            ls.insert(node.labels.begin(), node.labels.end());
        }
        Rng dr(seed_combine(v.noise_seed, 0xd157ULL));
        if (dr.uniform() < params.distractor_rate)
          ls.insert(objs[dr.uniform_int(objs.size())]);
        v.labels.assign(ls.begin(), ls.end());
        v.feature = view_feature(v.labels, params.label_seed, v.noise_seed,
                                 params.view_noise, params.feature_dim);
      }
    }
  }
  g.validate();
  return g;
}

const SubPath* Episode::sub_path_for(const std::string& label) const {
  for (const auto& [l, sp] : sub_paths)
    if (l == label) return &sp;
  return nullptr;
}

void Episode::validate(const NavGraph& graph) const {
  if (instruction.empty()) throw std::runtime_error("episode: empty instruction");
  if (path.empty()) throw std::runtime_error("episode: empty path");
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    if (!graph.adjacent(path[i], path[i + 1]))
      throw std::runtime_error("episode: non-adjacent consecutive path nodes");
  }
  if (sub_paths.empty()) throw std::runtime_error("episode: no sub-paths");
  int expect_first = 0;
  for (const auto& [label, sp] : sub_paths) {
    if (sp.first != expect_first)
      throw std::runtime_error("episode: sub-paths leave a gap");
    if (sp.last <= sp.first || sp.last >= static_cast<int>(path.size()))
      throw std::runtime_error("episode: sub-path out of range");
    expect_first = sp.last;
    // The object label must be visible somewhere along its slice.
    bool found = false;
    for (int i = sp.first; i <= sp.last && !found; ++i) {
      for (const auto& v : graph.node(path[i]).panorama) {
        if (std::find(v.labels.begin(), v.labels.end(), label) != v.labels.end()) {
          found = true;
          break;
        }
      }
    }
    if (!found)
      throw std::runtime_error("episode: object '" + label +
                               "' not visible along its sub-path");
  }
  if (sub_paths.back().second.last != static_cast<int>(path.size()) - 1)
    throw std::runtime_error("episode: sub-paths do not cover the path");
}

Episode generate_episode(const NavGraph& graph, uint64_t seed,
                         const EpisodeParams& params) {
  const int n = static_cast<int>(graph.nodes.size());
  for (int attempt = 0; attempt < 200; ++attempt) {
    Rng rng(seed_combine(seed, static_cast<uint64_t>(attempt), 0x657069ULL));
    int want = params.min_path_nodes +
               static_cast<int>(rng.uniform_int(
                   params.max_path_nodes - params.min_path_nodes + 1));
    want = std::min(want, n);
    // Self-avoiding random walk of `want` nodes.
    std::vector<int> path{static_cast<int>(rng.uniform_int(n))};
    std::vector<char> used(n, 0);
    used[path[0]] = 1;
    while (static_cast<int>(path.size()) < want) {
      std::vector<int> options;
      for (int nb : graph.node(path.back()).neighbors)
        if (!used[nb]) options.push_back(nb);
      if (options.empty()) break;
      int next = options[rng.uniform_int(options.size())];
      used[next] = 1;
      path.push_back(next);
    }
    if (static_cast<int>(path.size()) < params.min_path_nodes) continue;

    // Cut the path into 1..max_segments contiguous slices over its edges.
    int edges = static_cast<int>(path.size()) - 1;
    int segs = 1 + static_cast<int>(rng.uniform_int(
                       std::min(params.max_segments, edges)));
    std::vector<int> cuts;  // interior boundaries, strictly increasing
    {
      std::vector<int> interior;
      for (int i = 1; i < static_cast<int>(path.size()) - 1; ++i)
        interior.push_back(i);
      rng.shuffle(interior);
      cuts.assign(interior.begin(), interior.begin() + (segs - 1));
      std::sort(cuts.begin(), cuts.end());
    }
    std::vector<SubPath> slices;
    int first = 0;
    for (int c : cuts) {
      slices.push_back({first, c});
      first = c;
    }
    slices.push_back({first, static_cast<int>(path.size()) - 1});

    // Segment object = the slice's terminal-node location; must be distinct
    // across segments so the label -> slice map is well formed.
    std::vector<std::string> objects;
    std::set<std::string> distinct;
    bool ok = true;
    for (const auto& s : slices) {
      const std::string& obj = graph.node(path[s.last]).location;
      if (!distinct.insert(obj).second) {
        ok = false;
        break;
      }
      objects.push_back(obj);
    }
    if (!ok) continue;

    // Instruction: fixed per-position verb templates, one sentence per
    // segment ("walk out of the bedroom. walk through the kitchen.").
    static const std::vector<std::string> kLaterTemplates = {
        "walk through the ", "go to the ", "head toward the ",
        "move past the "};
    std::string instruction;
    for (size_t i = 0; i < objects.size(); ++i) {
      if (i > 0) instruction += " ";
      if (i == 0)
        instruction += "walk out of the " + objects[i] + ".";
      else
        instruction += kLaterTemplates[(i - 1) % kLaterTemplates.size()] +
                       objects[i] + ".";
    }

    Episode ep;
    ep.instruction = instruction;
    ep.path = path;
    for (size_t i = 0; i < slices.size(); ++i)
      ep.sub_paths.emplace_back(objects[i], slices[i]);
    ep.world_seed = graph.seed;
    ep.validate(graph);
    return ep;
  }
  throw std::runtime_error(
      "episode: no valid path of the requested length after 200 attempts");
}

const NavGraph& WorldStore::get(uint64_t seed) {
  auto it = cache_.find(seed);
  if (it == cache_.end())
    it = cache_.emplace(seed, generate_world(seed, params_)).first;
  return it->second;
}

std::vector<Episode> generate_dataset(const Config& cfg, WorldStore& store) {
  EpisodeParams ep = EpisodeParams::from_config(cfg);
  std::vector<Episode> out;
  int64_t next_id = 0;
  auto emit = [&](const std::string& split, uint64_t world_seed, int count,
                  uint64_t seed_salt) {
    for (int i = 0; i < count; ++i) {
      const NavGraph& g = store.get(world_seed);
      Episode e = generate_episode(
          g, seed_combine(cfg.data.episode_seed_base + i, world_seed, seed_salt),
          ep);
      e.id = next_id++;
      e.split = split;
      out.push_back(std::move(e));
    }
  };
  for (int w = 0; w < cfg.data.train_worlds; ++w) {
    int per = cfg.data.train_episodes / cfg.data.train_worlds +
              (w < cfg.data.train_episodes % cfg.data.train_worlds ? 1 : 0);
    emit("train", cfg.data.world_seed_base + w, per, 0x7472ULL);
  }
  for (int w = 0; w < cfg.data.train_worlds && cfg.data.val_seen_episodes > 0;
       ++w) {
    int per = cfg.data.val_seen_episodes / cfg.data.train_worlds +
              (w < cfg.data.val_seen_episodes % cfg.data.train_worlds ? 1 : 0);
    emit("val_seen", cfg.data.world_seed_base + w, per, 0x7673ULL);
  }
  for (int w = 0; w < cfg.data.val_worlds; ++w) {
    int per = cfg.data.val_unseen_episodes / cfg.data.val_worlds +
              (w < cfg.data.val_unseen_episodes % cfg.data.val_worlds ? 1 : 0);
    emit("val_unseen", cfg.data.val_world_seed_base + w, per, 0x7675ULL);
  }
  return out;
}

}  // namespace adaptnav
