#pragma once

#include <vector>

#include "adaptnav/agent/agent.hpp"
#include "adaptnav/core/config.hpp"
#include "adaptnav/nn/graph.hpp"
#include "adaptnav/world/world.hpp"

namespace adaptnav {

struct LossConfig {
  double lambda1 = 0.2;    // imitation weight
  double lambda2 = 0.01;   // sequential-consistency weight
  double lambda3 = 0.0001; // modality-alignment weight
  double tau2 = 0.1;       // alignment temperature
  double rl_gamma = 0.9;   // return discount
  double success_bonus = 2.0;
  double success_radius = 3.0;

  static LossConfig from_config(const Config& cfg);
  void validate() const;  // throws std::invalid_argument
};

// Which half of the alternating schedule a batch belongs to. The alignment
// term only contributes on imitation passes.
enum class TrainPass { kIl, kRl };

// infoNCE over encoded sub-prompt pairs: row n of `p_img`/`p_txt` is one
// aligned pair; negatives for a pair are the text rows of other samples
// (group[j] != group[n]). Mean over rows. Rows must all be valid (unpadded).
Var modality_alignment_loss(Graph& g, Var p_img, Var p_txt,
                            const std::vector<int>& group, double tau2);

// Mean over steps of ||attended text prompt - attended instruction||^2 +
// ||attended image prompt - attended visual||^2.
Var sequential_consistency_loss(Graph& g,
                                const std::vector<AgentModel::StepVars>& steps);

// Mean negative log-probability of the teacher action at every step.
Var imitation_loss(Graph& g, const std::vector<AgentModel::StepVars>& steps);

// Per-step reward: reduction of geodesic distance to the goal, plus the
// terminal bonus (+/- success_bonus by the success_radius test on the final
// node). One entry per decision step (a trailing stop step moves nothing).
std::vector<double> progress_rewards(const NavGraph& world,
                                     const std::vector<int>& nodes,
                                     bool stopped, int goal,
                                     const LossConfig& cfg);

// R_t = sum_k gamma^(k-t) r_k.
std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double gamma);

// Advantage actor-critic on a sampled trajectory:
// sum_t [ -log beta_t[a_t] * (R_t - V_t) + (R_t - V_t)^2 ].
Var rl_loss(Graph& g, const std::vector<AgentModel::StepVars>& steps,
            const std::vector<double>& returns);

// Weighted total. The RL term enters unweighted; lambda3 * L_a only on
// imitation passes. The Var overload skips absent (default) components.
double total_loss(double l_rl, double l_il, double l_c, double l_a,
                  const LossConfig& cfg, TrainPass pass);
Var total_loss(Graph& g, Var l_rl, Var l_il, Var l_c, Var l_a,
               const LossConfig& cfg, TrainPass pass);

}  // namespace adaptnav
