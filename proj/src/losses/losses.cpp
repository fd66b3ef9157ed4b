#include "adaptnav/losses/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace adaptnav {

using nn::Mat;

LossConfig LossConfig::from_config(const Config& cfg) {
  LossConfig lc;
  lc.lambda1 = cfg.loss.lambda1;
  lc.lambda2 = cfg.loss.lambda2;
  lc.lambda3 = cfg.loss.lambda3;
  lc.tau2 = cfg.loss.tau2;
  lc.rl_gamma = cfg.loss.rl_gamma;
  lc.success_bonus = cfg.loss.success_bonus;
  lc.success_radius = cfg.metrics.success_radius;
  lc.validate();
  return lc;
}

void LossConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0)
    throw std::invalid_argument("loss weights must be non-negative");
  if (tau2 <= 0) throw std::invalid_argument("tau2 must be positive");
  if (rl_gamma <= 0 || rl_gamma > 1)
    throw std::invalid_argument("rl_gamma must be in (0, 1]");
  if (success_bonus < 0)
    throw std::invalid_argument("success_bonus must be non-negative");
  if (success_radius <= 0)
    throw std::invalid_argument("success_radius must be positive");
}

namespace {

// Unit-normalizes every row on the tape (epsilon keeps zero rows finite).
Var normalize_rows(Graph& g, Var x) {
  Var ones = g.input(Mat::Ones(x.cols(), 1));
  Var n2 = g.matmul(g.mul(x, x), ones);                       // rows x 1
  Var inv = g.exp_(g.scale(g.log_(g.add_scalar(n2, 1e-12)), -0.5));
  return g.mul_colvec(x, inv);
}

}  // namespace

Var modality_alignment_loss(Graph& g, Var p_img, Var p_txt,
                            const std::vector<int>& group, double tau2) {
  if (!p_img.valid() || !p_txt.valid())
    throw std::invalid_argument("modality_alignment_loss: invalid inputs");
  if (tau2 <= 0)
    throw std::invalid_argument("modality_alignment_loss: tau2 must be positive");
  const int n = static_cast<int>(p_img.rows());
  if (n < 1) throw std::invalid_argument("modality_alignment_loss: no rows");
  if (p_txt.rows() != n || p_txt.cols() != p_img.cols())
    throw std::invalid_argument("modality_alignment_loss: shape mismatch");
  if (static_cast<int>(group.size()) != n)
    throw std::invalid_argument("modality_alignment_loss: group size mismatch");

  Var img_n = normalize_rows(g, p_img);
  Var txt_n = normalize_rows(g, p_txt);
  Var sims = g.matmul(img_n, g.transpose(txt_n));  // (i, j) = cos(img_i, txt_j)
  Var e = g.exp_(g.scale(sims, 1.0 / tau2));

  // Denominator keeps the aligned pair plus text rows from other groups;
  // unaligned rows of the same group are neither positives nor negatives.
  Mat denom_mask = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i == j || group[i] != group[j]) denom_mask(i, j) = 1.0;
  Var ones = g.input(Mat::Ones(n, 1));
  Var denom = g.matmul(g.mul(e, g.input(denom_mask)), ones);           // n x 1
  Var pos = g.matmul(g.mul(e, g.input(Mat::Identity(n, n))), ones);    // n x 1
  return g.mean_all(g.sub(g.log_(denom), g.log_(pos)));
}

Var sequential_consistency_loss(
    Graph& g, const std::vector<AgentModel::StepVars>& steps) {
  if (steps.empty())
    throw std::invalid_argument("sequential_consistency_loss: no steps");
  Var acc;
  for (const auto& s : steps) {
    Var term = g.add(g.squared_norm(g.sub(s.pu_tilde, s.x_tilde)),
                     g.squared_norm(g.sub(s.pi_tilde, s.v_tilde)));
    acc = acc.valid() ? g.add(acc, term) : term;
  }
  return g.scale(acc, 1.0 / static_cast<double>(steps.size()));
}

Var imitation_loss(Graph& g, const std::vector<AgentModel::StepVars>& steps) {
  if (steps.empty()) throw std::invalid_argument("imitation_loss: no steps");
  Var acc;
  for (const auto& s : steps) {
    if (s.teacher < 0 || s.teacher >= s.beta.cols())
      throw std::out_of_range("imitation_loss: teacher action out of range");
    Var logp = g.log_(g.pick(s.beta, 0, s.teacher));
    acc = acc.valid() ? g.add(acc, logp) : logp;
  }
  return g.scale(acc, -1.0 / static_cast<double>(steps.size()));
}

std::vector<double> progress_rewards(const NavGraph& world,
                                     const std::vector<int>& nodes,
                                     bool stopped, int goal,
                                     const LossConfig& cfg) {
  if (nodes.empty()) throw std::invalid_argument("progress_rewards: no nodes");
  std::vector<double> rewards;
  for (size_t t = 0; t + 1 < nodes.size(); ++t)
    rewards.push_back(world.shortest_path_length(nodes[t], goal) -
                      world.shortest_path_length(nodes[t + 1], goal));
  if (stopped) rewards.push_back(0.0);  // the stop step moves nothing
  if (!rewards.empty()) {
    double ne = world.shortest_path_length(nodes.back(), goal);
    rewards.back() += (ne < cfg.success_radius) ? cfg.success_bonus
                                                : -cfg.success_bonus;
  }
  return rewards;
}

std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double gamma) {
  std::vector<double> returns(rewards.size());
  double acc = 0.0;
  for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
    acc = rewards[t] + gamma * acc;
    returns[t] = acc;
  }
  return returns;
}

Var rl_loss(Graph& g, const std::vector<AgentModel::StepVars>& steps,
            const std::vector<double>& returns) {
  if (steps.empty()) throw std::invalid_argument("rl_loss: no steps");
  if (steps.size() != returns.size())
    throw std::invalid_argument("rl_loss: steps/returns length mismatch");
  Var acc;
  for (size_t t = 0; t < steps.size(); ++t) {
    const auto& s = steps[t];
    if (s.action < 0 || s.action >= s.beta.cols())
      throw std::out_of_range("rl_loss: action out of range");
    Var ret = g.input(Mat::Constant(1, 1, returns[t]));
    Var adv = g.sub(ret, s.value);
    Var logp = g.log_(g.pick(s.beta, 0, s.action));
    Var term = g.add(g.scale(g.mul(logp, adv), -1.0), g.mul(adv, adv));
    acc = acc.valid() ? g.add(acc, term) : term;
  }
  return acc;
}

double total_loss(double l_rl, double l_il, double l_c, double l_a,
                  const LossConfig& cfg, TrainPass pass) {
  double total = l_rl + cfg.lambda1 * l_il + cfg.lambda2 * l_c;
  if (pass == TrainPass::kIl) total += cfg.lambda3 * l_a;
  return total;
}

Var total_loss(Graph& g, Var l_rl, Var l_il, Var l_c, Var l_a,
               const LossConfig& cfg, TrainPass pass) {
  Var acc;
  auto add_term = [&](Var term, double weight) {
    if (!term.valid() || weight == 0.0) return;
    Var scaled = (weight == 1.0) ? term : g.scale(term, weight);
    acc = acc.valid() ? g.add(acc, scaled) : scaled;
  };
  add_term(l_rl, 1.0);
  add_term(l_il, cfg.lambda1);
  add_term(l_c, cfg.lambda2);
  if (pass == TrainPass::kIl) add_term(l_a, cfg.lambda3);
  if (!acc.valid()) throw std::invalid_argument("total_loss: no components");
  return acc;
}

}  // namespace adaptnav
