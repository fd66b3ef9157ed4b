#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "adaptnav/world/world.hpp"

namespace adaptnav {

// One evaluated episode: where the agent went vs where it should have gone,
// on which graph, judged with which success radius.
struct EpisodeResult {
  std::vector<int> predicted;  // executed node path (start included)
  std::vector<int> reference;  // ground-truth node path
  const NavGraph* graph = nullptr;
  double d_th = 3.0;  // success radius, also the nDTW/CLS distance scale

  void validate() const;  // throws std::invalid_argument
};

// Sum of consecutive edge lengths of the predicted path (throws if a hop is
// not an edge of the graph).
double trajectory_length(const EpisodeResult& r);

// Geodesic distance from the final predicted node to the reference goal.
double navigation_error(const EpisodeResult& r);

// 1 when the navigation error is strictly under the success radius.
int success(const EpisodeResult& r);

// success * d_star / max(TL, d_star) with d_star the geodesic start-goal
// distance; 1 by convention when both TL and d_star are zero.
double spl(const EpisodeResult& r);

// Dynamic-time-warping cost between predicted and reference paths under the
// geodesic node distance (monotone alignment of both full sequences).
double dtw_distance(const EpisodeResult& r);

double ndtw(const EpisodeResult& r);  // exp(-DTW / (|reference| * d_th))
double sdtw(const EpisodeResult& r);  // success-gated nDTW

// Coverage weighted by length score: soft coverage of reference nodes times
// a penalty for mismatch between expected and executed path length.
double cls(const EpisodeResult& r);

struct MetricReport {
  std::string split;
  int n_episodes = 0;
  double tl = 0, ne = 0, sr = 0, spl = 0, cls = 0, ndtw = 0, sdtw = 0;
  double success_radius = 3.0;

  nlohmann::json to_json() const;
};

// Per-episode means; SR and SPL scaled to percentages. All episodes must
// share one success radius. Throws on an empty list.
MetricReport aggregate(const std::vector<EpisodeResult>& results,
                       const std::string& split);

}  // namespace adaptnav
