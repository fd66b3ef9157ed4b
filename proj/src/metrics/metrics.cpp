#include "adaptnav/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace adaptnav {

void EpisodeResult::validate() const {
  if (graph == nullptr) throw std::invalid_argument("episode result: no graph");
  if (predicted.empty() || reference.empty())
    throw std::invalid_argument("episode result: empty path");
  if (d_th <= 0)
    throw std::invalid_argument("episode result: success radius must be positive");
  auto in_graph = [&](const std::vector<int>& path) {
    for (int id : path)
      if (id < 0 || id >= static_cast<int>(graph->nodes.size())) return false;
    return true;
  };
  if (!in_graph(predicted) || !in_graph(reference))
    throw std::invalid_argument("episode result: node id outside graph");
}

double trajectory_length(const EpisodeResult& r) {
  r.validate();
  double total = 0.0;
  for (size_t i = 0; i + 1 < r.predicted.size(); ++i)
    total += r.graph->edge_length(r.predicted[i], r.predicted[i + 1]);
  return total;
}

double navigation_error(const EpisodeResult& r) {
  r.validate();
  return r.graph->shortest_path_length(r.predicted.back(), r.reference.back());
}

int success(const EpisodeResult& r) {
  return navigation_error(r) < r.d_th ? 1 : 0;
}

double spl(const EpisodeResult& r) {
  int sr = success(r);
  double tl = trajectory_length(r);
  double d_star =
      r.graph->shortest_path_length(r.reference.front(), r.reference.back());
  double denom = std::max(tl, d_star);
  if (denom == 0.0) return sr;  // stationary episode, stationary agent
  return sr * d_star / denom;
}

double dtw_distance(const EpisodeResult& r) {
  r.validate();
  const auto& p = r.predicted;
  const auto& q = r.reference;
  const size_t m = p.size(), n = q.size();
  auto dist = [&](size_t i, size_t j) {
    return r.graph->shortest_path_length(p[i], q[j]);
  };
  std::vector<std::vector<double>> d(m, std::vector<double>(n, 0.0));
  d[0][0] = dist(0, 0);
  for (size_t i = 1; i < m; ++i) d[i][0] = d[i - 1][0] + dist(i, 0);
  for (size_t j = 1; j < n; ++j) d[0][j] = d[0][j - 1] + dist(0, j);
  for (size_t i = 1; i < m; ++i)
    for (size_t j = 1; j < n; ++j)
      d[i][j] =
          dist(i, j) + std::min({d[i - 1][j], d[i][j - 1], d[i - 1][j - 1]});
  return d[m - 1][n - 1];
}

double ndtw(const EpisodeResult& r) {
  return std::exp(-dtw_distance(r) /
                  (static_cast<double>(r.reference.size()) * r.d_th));
}

double sdtw(const EpisodeResult& r) { return success(r) * ndtw(r); }

double cls(const EpisodeResult& r) {
  r.validate();
  // Soft coverage: how close the executed path comes to each reference node.
  double coverage = 0.0;
  for (int ref : r.reference) {
    double nearest = std::numeric_limits<double>::infinity();
    for (int pred : r.predicted)
      nearest = std::min(nearest, r.graph->shortest_path_length(ref, pred));
    coverage += std::exp(-nearest / r.d_th);
  }
  coverage /= static_cast<double>(r.reference.size());

  double ref_len = 0.0;
  for (size_t i = 0; i + 1 < r.reference.size(); ++i)
    ref_len += r.graph->edge_length(r.reference[i], r.reference[i + 1]);
  double expected = coverage * ref_len;
  double tl = trajectory_length(r);
  double denom = expected + std::abs(expected - tl);
  double length_score = (denom == 0.0) ? 1.0 : expected / denom;
  return coverage * length_score;
}

nlohmann::json MetricReport::to_json() const {
  return nlohmann::json{{"split", split},
                        {"n_episodes", n_episodes},
                        {"success_radius", success_radius},
                        {"TL", tl},
                        {"NE", ne},
                        {"SR", sr},
                        {"SPL", spl},
                        {"CLS", cls},
                        {"nDTW", ndtw},
                        {"SDTW", sdtw}};
}

MetricReport aggregate(const std::vector<EpisodeResult>& results,
                       const std::string& split) {
  if (results.empty())
    throw std::invalid_argument("aggregate: no episode results");
  MetricReport rep;
  rep.split = split;
  rep.n_episodes = static_cast<int>(results.size());
  rep.success_radius = results.front().d_th;
  for (const auto& r : results) {
    if (r.d_th != rep.success_radius)
      throw std::invalid_argument("aggregate: mixed success radii");
    rep.tl += trajectory_length(r);
    rep.ne += navigation_error(r);
    rep.sr += success(r);
    rep.spl += adaptnav::spl(r);
    rep.cls += adaptnav::cls(r);
    rep.ndtw += adaptnav::ndtw(r);
    rep.sdtw += adaptnav::sdtw(r);
  }
  double n = static_cast<double>(rep.n_episodes);
  rep.tl /= n;
  rep.ne /= n;
  rep.sr = rep.sr / n * 100.0;
  rep.spl = rep.spl / n * 100.0;
  rep.cls /= n;
  rep.ndtw /= n;
  rep.sdtw /= n;
  return rep;
}

}  // namespace adaptnav
