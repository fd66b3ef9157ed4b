#include <algorithm>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "adaptnav/core/base64.hpp"
#include "adaptnav/world/world.hpp"

namespace adaptnav {

using nlohmann::json;

std::string graph_to_json(const NavGraph& graph) {
  json nodes = json::array();
  for (const auto& n : graph.nodes) {
    nodes.push_back({{"id", n.id},
                     {"x", n.x},
                     {"y", n.y},
                     {"location", n.location},
                     {"labels", n.labels}});
  }
  json edges = json::array();
  for (const auto& [a, b] : graph.edges) edges.push_back({a, b});
  json panoramas = json::object();
  for (const auto& n : graph.nodes) {
    json views = json::array();
    for (const auto& v : n.panorama) {
      views.push_back({{"labels", v.labels},
                       {"heading", v.heading},
                       {"elevation", v.elevation},
                       {"noise_seed", v.noise_seed},
                       {"feature", encode_f32le(v.feature)}});
    }
    panoramas[std::to_string(n.id)] = std::move(views);
  }
  json root = {{"seed", graph.seed},
               {"nodes", std::move(nodes)},
               {"edges", std::move(edges)},
               {"panoramas", std::move(panoramas)}};
  return root.dump();
}

NavGraph graph_from_json(const std::string& text, const WorldParams& params) {
  json root = json::parse(text);
  NavGraph g;
  g.seed = root.at("seed").get<uint64_t>();
  g.params = params;
  g.nodes.resize(root.at("nodes").size());
  for (const auto& jn : root.at("nodes")) {
    int id = jn.at("id").get<int>();
    if (id < 0 || id >= static_cast<int>(g.nodes.size()))
      throw std::runtime_error("graph json: node id out of range");
    WorldNode& n = g.nodes[id];
    n.id = id;
    n.x = jn.at("x").get<double>();
    n.y = jn.at("y").get<double>();
    n.location = jn.at("location").get<std::string>();
    n.labels = jn.at("labels").get<std::vector<std::string>>();
  }
  for (const auto& je : root.at("edges")) {
    int a = je.at(0).get<int>(), b = je.at(1).get<int>();
    g.edges.emplace_back(a, b);
    g.nodes.at(a).neighbors.push_back(b);
    g.nodes.at(b).neighbors.push_back(a);
  }
  for (auto& n : g.nodes) std::sort(n.neighbors.begin(), n.neighbors.end());
  for (auto& n : g.nodes) {
    const json& views = root.at("panoramas").at(std::to_string(n.id));
    for (const auto& jv : views) {
      ViewImage v;
      v.labels = jv.at("labels").get<std::vector<std::string>>();
      v.heading = jv.at("heading").get<int>();
      v.elevation = jv.at("elevation").get<int>();
      v.noise_seed = jv.at("noise_seed").get<uint64_t>();
      v.feature = decode_f32le(jv.at("feature").get<std::string>());
      n.panorama.push_back(std::move(v));
    }
  }
  return g;
}

std::string episodes_to_jsonl(const std::vector<Episode>& episodes) {
  std::ostringstream os;
  for (const auto& e : episodes) {
    json sub = json::object();
    for (const auto& [label, sp] : e.sub_paths)
      sub[label] = {sp.first, sp.last};
    json line = {{"instruction", e.instruction},
                 {"path", e.path},
                 {"sub_paths", std::move(sub)},
                 {"world_seed", e.world_seed},
                 {"split", e.split}};
    os << line.dump() << "\n";
  }
  return os.str();
}

std::vector<Episode> episodes_from_jsonl(const std::string& text) {
  std::vector<Episode> out;
  std::istringstream is(text);
  std::string line;
  int64_t id = 0;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("episodes: bad json on line " +
                               std::to_string(lineno) + ": " + e.what());
    }
    Episode e;
    e.id = id++;
    e.instruction = j.at("instruction").get<std::string>();
    e.path = j.at("path").get<std::vector<int>>();
    for (const auto& [label, range] : j.at("sub_paths").items()) {
      SubPath sp{range.at(0).get<int>(), range.at(1).get<int>()};
      e.sub_paths.emplace_back(label, sp);
    }
    // JSON objects come back key-sorted; restore segment order by position.
    std::sort(e.sub_paths.begin(), e.sub_paths.end(),
              [](const auto& a, const auto& b) {
                return a.second.first < b.second.first;
              });
    e.world_seed = j.at("world_seed").get<uint64_t>();
    e.split = j.at("split").get<std::string>();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace adaptnav
