#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "adaptnav/core/rng.hpp"
#include "adaptnav/world/world.hpp"

using namespace adaptnav;

namespace {

WorldParams small_params(int nodes = 25) {
  WorldParams p;
  p.nodes = nodes;
  p.feature_dim = 16;
  p.vocabs = Vocabularies::default_synthetic();
  return p;
}

// Oracle: brute-force shortest path by exhaustive simple-path enumeration.
double brute_force_shortest(const NavGraph& g, int a, int b) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> path{a};
  std::vector<char> used(g.nodes.size(), 0);
  used[a] = 1;
  std::function<void(double)> rec = [&](double len) {
    if (len >= best) return;
    if (path.back() == b) {
      best = len;
      return;
    }
    for (int nb : g.node(path.back()).neighbors) {
      if (used[nb]) continue;
      used[nb] = 1;
      path.push_back(nb);
      rec(len + g.edge_length(path[path.size() - 2], nb));
      path.pop_back();
      used[nb] = 0;
    }
  };
  rec(0);
  return best;
}

}  // namespace

TEST_CASE("world: smallest legal world is connected with 36-view panoramas") {
  WorldParams p = small_params(4);
  p.vocabs.objects = {"kitchen"};
  NavGraph g = generate_world(0, p);
  CHECK(g.nodes.size() == 4);
  for (const auto& n : g.nodes) {
    CHECK(n.panorama.size() == 36);
    CHECK(!n.neighbors.empty());
    CHECK(n.location == "kitchen");
  }
  g.validate();
}

TEST_CASE("world: generation rejects bad parameters") {
  WorldParams p = small_params(3);
  CHECK_THROWS(generate_world(0, p));
  p = small_params(10);
  p.vocabs.objects.clear();
  CHECK_THROWS(generate_world(0, p));
}

TEST_CASE("world: identical (seed, params) produce byte-identical graphs") {
  WorldParams p = small_params(10);
  NavGraph a = generate_world(5, p);
  NavGraph b = generate_world(5, p);
  CHECK(graph_to_json(a) == graph_to_json(b));
  NavGraph c = generate_world(6, p);
  CHECK(graph_to_json(a) != graph_to_json(c));
}

TEST_CASE("world: BFS reaches all 25 nodes from node 0") {
  NavGraph g = generate_world(1, small_params(25));
  // Oracle: plain BFS, independent of NavGraph::validate.
  std::set<int> seen{0};
  std::queue<int> q;
  q.push(0);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : g.node(u).neighbors)
      if (seen.insert(v).second) q.push(v);
  }
  CHECK(seen.size() == 25);
  for (const auto& n : g.nodes) CHECK(n.neighbors.size() >= 1);
}

TEST_CASE("world: view orientation lattice and unit-norm features") {
  NavGraph g = generate_world(2, small_params(8));
  for (const auto& n : g.nodes) {
    std::set<std::pair<int, int>> orient;
    for (const auto& v : n.panorama) {
      orient.insert({v.heading, v.elevation});
      CHECK(v.feature.size() == 16);
      CHECK(v.feature.norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(orient.size() == 36);  // full 12x3 lattice
  }
}

TEST_CASE("world: approach view faces the neighbor and shows its labels") {
  NavGraph g = generate_world(3, small_params(12));
  int checked = 0;
  for (const auto& n : g.nodes) {
    for (int nb : n.neighbors) {
      int vi = g.approach_view_index(n.id, nb);
      const ViewImage& v = n.panorama[vi];
      CHECK(v.elevation == 1);
      // The neighbor's location label must be visible in the approach view
      // unless another neighbor shares the same heading sector.
      bool other_same_heading = false;
      for (int nb2 : n.neighbors) {
        if (nb2 != nb && g.approach_view_index(n.id, nb2) == vi)
          other_same_heading = true;
      }
      if (!other_same_heading) {
        const auto& lbl = g.node(nb).location;
        CHECK(std::find(v.labels.begin(), v.labels.end(), lbl) != v.labels.end());
        ++checked;
      }
    }
  }
  CHECK(checked > 10);
}

TEST_CASE("world: edge lengths are Euclidean; shortest paths match brute force") {
  NavGraph g = generate_world(7, small_params(8));
  for (const auto& [a, b] : g.edges) {
    double want = std::hypot(g.node(a).x - g.node(b).x, g.node(a).y - g.node(b).y);
    CHECK(g.edge_length(a, b) == doctest::Approx(want));
  }
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      double oracle = brute_force_shortest(g, a, b);
      CHECK(g.shortest_path_length(a, b) == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
  CHECK(g.shortest_path_length(3, 3) == 0.0);
}

TEST_CASE("world: shortest_path_length is symmetric and triangle-consistent") {
  NavGraph g = generate_world(9, small_params(15));
  Rng rng(4);
  for (int it = 0; it < 200; ++it) {
    int a = static_cast<int>(rng.uniform_int(15));
    int b = static_cast<int>(rng.uniform_int(15));
    int c = static_cast<int>(rng.uniform_int(15));
    double ab = g.shortest_path_length(a, b);
    double ba = g.shortest_path_length(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab <= g.shortest_path_length(a, c) + g.shortest_path_length(c, b) + 1e-9);
  }
}

TEST_CASE("world: candidates sorted by node id with stop last; step applies them") {
  NavGraph g = generate_world(11, small_params(12));
  for (const auto& n : g.nodes) {
    CandidateSet cs = candidates_at(g, n.id);
    CHECK(cs.size() == static_cast<int>(n.neighbors.size()) + 1);
    CHECK(std::is_sorted(cs.targets.begin(), cs.targets.end()));
    for (size_t i = 0; i < cs.targets.size(); ++i)
      CHECK(step(g, n.id, static_cast<int>(i)) == cs.targets[i]);
    CHECK(step(g, n.id, cs.stop_index()) == kTerminal);
    CHECK_THROWS(step(g, n.id, cs.size()));
    CHECK_THROWS(step(g, n.id, -1));
  }
}

TEST_CASE("world: 100-step random walk never leaves the node set") {
  NavGraph g = generate_world(13, small_params(10));
  Rng rng(77);
  int cur = 0;
  for (int i = 0; i < 100; ++i) {
    CandidateSet cs = candidates_at(g, cur);
    int a = static_cast<int>(rng.uniform_int(cs.targets.size()));  // never stop
    cur = step(g, cur, a);
    CHECK(cur >= 0);
    CHECK(cur < 10);
  }
}

TEST_CASE("episode: two-segment template instantiation") {
  // Restrict the label vocabulary so an episode with segment objects
  // (bedroom, kitchen) is easy to find, pinning the exact template text.
  WorldParams p = small_params(25);
  p.vocabs.objects = {"bedroom", "kitchen"};
  NavGraph g = generate_world(21, p);
  EpisodeParams ep;
  bool found = false;
  for (uint64_t s = 0; s < 4000 && !found; ++s) {
    Episode e = generate_episode(g, s, ep);
    if (e.sub_paths.size() == 2 && e.sub_paths[0].first == "bedroom" &&
        e.sub_paths[1].first == "kitchen") {
      CHECK(e.instruction == "walk out of the bedroom. walk through the kitchen.");
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("episode: sub-paths cover the full path with no gaps") {
  NavGraph g = generate_world(23, small_params(25));
  EpisodeParams ep;
  for (uint64_t s = 0; s < 50; ++s) {
    Episode e = generate_episode(g, s, ep);
    CHECK(e.sub_paths.front().second.first == 0);
    CHECK(e.sub_paths.back().second.last == static_cast<int>(e.path.size()) - 1);
    for (size_t i = 0; i + 1 < e.sub_paths.size(); ++i)
      CHECK(e.sub_paths[i].second.last == e.sub_paths[i + 1].second.first);
  }
}

TEST_CASE("episode: 500 episodes on a 25-node world pass all invariants") {
  NavGraph g = generate_world(25, small_params(25));
  EpisodeParams ep;
  for (uint64_t s = 0; s < 500; ++s) {
    Episode e = generate_episode(g, s, ep);
    e.validate(g);  // throws on violation
    CHECK(static_cast<int>(e.path.size()) >= ep.min_path_nodes);
    CHECK(static_cast<int>(e.path.size()) <= ep.max_path_nodes);
    CHECK(e.sub_paths.size() <= 3);
  }
}

TEST_CASE("episode: determinism and path-length failure") {
  NavGraph g = generate_world(27, small_params(25));
  EpisodeParams ep;
  Episode a = generate_episode(g, 9, ep);
  Episode b = generate_episode(g, 9, ep);
  CHECK(a.instruction == b.instruction);
  CHECK(a.path == b.path);

  EpisodeParams impossible;
  impossible.min_path_nodes = 26;  // longer than the world
  impossible.max_path_nodes = 30;
  CHECK_THROWS(generate_episode(g, 1, impossible));
}

TEST_CASE("world: graph json round-trips nodes, edges, and features") {
  WorldParams p = small_params(6);
  NavGraph g = generate_world(31, p);
  std::string text = graph_to_json(g);
  NavGraph h = graph_from_json(text, p);
  CHECK(h.nodes.size() == g.nodes.size());
  CHECK(h.edges == g.edges);
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    CHECK(h.nodes[i].location == g.nodes[i].location);
    CHECK(h.nodes[i].neighbors == g.nodes[i].neighbors);
    for (int v = 0; v < 36; ++v) {
      CHECK(h.nodes[i].panorama[v].labels == g.nodes[i].panorama[v].labels);
      // Features survive within f32 quantization.
      CHECK((h.nodes[i].panorama[v].feature - g.nodes[i].panorama[v].feature)
                .cwiseAbs()
                .maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("episodes: jsonl round-trip preserves every field") {
  NavGraph g = generate_world(33, small_params(25));
  EpisodeParams ep;
  std::vector<Episode> eps;
  for (uint64_t s = 0; s < 20; ++s) {
    Episode e = generate_episode(g, s, ep);
    e.id = static_cast<int64_t>(s);
    e.split = s % 2 ? "train" : "val_unseen";
    eps.push_back(e);
  }
  auto text = episodes_to_jsonl(eps);
  auto back = episodes_from_jsonl(text);
  REQUIRE(back.size() == eps.size());
  for (size_t i = 0; i < eps.size(); ++i) {
    CHECK(back[i].instruction == eps[i].instruction);
    CHECK(back[i].path == eps[i].path);
    CHECK(back[i].world_seed == eps[i].world_seed);
    CHECK(back[i].split == eps[i].split);
    REQUIRE(back[i].sub_paths.size() == eps[i].sub_paths.size());
    for (size_t k = 0; k < eps[i].sub_paths.size(); ++k) {
      CHECK(back[i].sub_paths[k].first == eps[i].sub_paths[k].first);
      CHECK(back[i].sub_paths[k].second.first == eps[i].sub_paths[k].second.first);
      CHECK(back[i].sub_paths[k].second.last == eps[i].sub_paths[k].second.last);
    }
  }
  CHECK(episodes_to_jsonl(back) == text);
}

TEST_CASE("dataset: splits, seeds, and counts follow the data config") {
  Config cfg;
  cfg.world.nodes = 10;
  cfg.world.feature_dim = 16;
  cfg.data.train_worlds = 2;
  cfg.data.val_worlds = 1;
  cfg.data.train_episodes = 10;
  cfg.data.val_seen_episodes = 4;
  cfg.data.val_unseen_episodes = 6;
  WorldStore store(WorldParams::from_config(cfg, Vocabularies::default_synthetic()));
  auto eps = generate_dataset(cfg, store);
  int train = 0, vs = 0, vu = 0;
  std::set<uint64_t> train_worlds, unseen_worlds;
  for (const auto& e : eps) {
    if (e.split == "train") {
      ++train;
      train_worlds.insert(e.world_seed);
    } else if (e.split == "val_seen") {
      ++vs;
    } else if (e.split == "val_unseen") {
      ++vu;
      unseen_worlds.insert(e.world_seed);
    }
  }
  CHECK(train == 10);
  CHECK(vs == 4);
  CHECK(vu == 6);
  // Unseen worlds never overlap training worlds.
  for (uint64_t w : unseen_worlds) CHECK(train_worlds.count(w) == 0);
  // Ids are dense and ordered.
  for (size_t i = 0; i < eps.size(); ++i)
    CHECK(eps[i].id == static_cast<int64_t>(i));
}
