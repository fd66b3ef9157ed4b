#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "adaptnav/agent/agent.hpp"
#include "adaptnav/core/config.hpp"
#include "adaptnav/core/rng.hpp"
#include "adaptnav/losses/losses.hpp"
#include "adaptnav/nn/graph.hpp"
#include "adaptnav/world/world.hpp"

using namespace adaptnav;
using nn::Graph;
using nn::Mat;
using nn::ParamStore;
using nn::Var;

namespace {

Mat random_mat(Rng& rng, int r, int c, double scale = 1.0) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal() * scale;
  return m;
}

// Independent scalar-loop reference for the alignment loss: cosine
// similarities, per-row softmax denominator over the aligned pair plus
// other-group text rows.
double alignment_oracle(const Mat& p_img, const Mat& p_txt,
                        const std::vector<int>& group, double tau2) {
  const int n = static_cast<int>(p_img.rows());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd a = p_img.row(i).normalized();
    double pos = std::exp(a.dot(p_txt.row(i).normalized()) / tau2);
    double denom = pos;
    for (int j = 0; j < n; ++j)
      if (j != i && group[j] != group[i])
        denom += std::exp(a.dot(p_txt.row(j).normalized()) / tau2);
    total += std::log(denom) - std::log(pos);
  }
  return total / n;
}

// Straight-line world: nodes at x = 0, spacing, 2*spacing, ... with edges
// between consecutive nodes, so geodesics are exact multiples of spacing.
NavGraph line_world(int n, double spacing) {
  NavGraph g;
  g.seed = 1;
  g.params.nodes = n;
  for (int id = 0; id < n; ++id) {
    WorldNode node;
    node.id = id;
    node.x = id * spacing;
    node.y = 0.0;
    if (id > 0) node.neighbors.push_back(id - 1);
    if (id + 1 < n) node.neighbors.push_back(id + 1);
    std::sort(node.neighbors.begin(), node.neighbors.end());
    g.nodes.push_back(std::move(node));
  }
  for (int id = 0; id + 1 < n; ++id) g.edges.push_back({id, id + 1});
  return g;
}

// Central finite differences over every tensor entry vs one backward pass.
void check_gradients(ParamStore& store,
                     const std::function<Var(Graph&)>& build, double h = 1e-5,
                     double tol = 1e-6) {
  store.zero_grad();
  {
    Graph g;
    Var loss = build(g);
    g.backward(loss);
  }
  auto eval = [&]() {
    Graph g;
    return build(g).scalar();
  };
  for (auto& [name, t] : store.tensors()) {
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        double orig = t.value(r, c);
        t.value(r, c) = orig + h;
        double fp = eval();
        t.value(r, c) = orig - h;
        double fm = eval();
        t.value(r, c) = orig;
        double fd = (fp - fm) / (2 * h);
        double an = t.grad(r, c);
        double denom = std::max({1.0, std::abs(fd), std::abs(an)});
        INFO("tensor ", name, " entry (", r, ",", c, ") fd=", fd, " an=", an);
        CHECK(std::abs(fd - an) / denom < tol);
      }
    }
  }
}

}  // namespace

TEST_CASE("alignment loss matches a scalar oracle on random batches") {
  Rng rng(4101);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_int(8));
    int d = 2 + static_cast<int>(rng.uniform_int(5));
    Mat pi = random_mat(rng, n, d);
    Mat pu = random_mat(rng, n, d);
    std::vector<int> group(n);
    for (int i = 0; i < n; ++i)
      group[i] = static_cast<int>(rng.uniform_int(4));
    double expected = alignment_oracle(pi, pu, group, 0.1);

    Graph g;
    Var la = modality_alignment_loss(g, g.input(pi), g.input(pu), group, 0.1);
    INFO("trial ", trial, " n=", n, " d=", d);
    CHECK(std::abs(la.scalar() - expected) < 1e-6);
  }
}

TEST_CASE("alignment loss pinned degenerate batches") {
  Rng rng(4102);

  // One sample: no negatives exist, so the ratio is exactly 1.
  {
    Graph g;
    Var la = modality_alignment_loss(g, g.input(random_mat(rng, 1, 4)),
                                     g.input(random_mat(rng, 1, 4)), {0}, 0.1);
    CHECK(la.scalar() == 0.0);
  }

  // All rows from one group: same-group rows are not negatives either.
  {
    Graph g;
    Var la = modality_alignment_loss(g, g.input(random_mat(rng, 3, 4)),
                                     g.input(random_mat(rng, 3, 4)), {5, 5, 5},
                                     0.1);
    CHECK(la.scalar() == 0.0);
  }

  // Two groups whose text rows are identical: the negative term always
  // equals the positive term, so each row contributes log 2.
  {
    Mat pi(2, 3), pu(2, 3);
    pi << 1, 0, 0, 0, 1, 0;
    pu << 0.6, 0.8, 0, 0.6, 0.8, 0;
    Graph g;
    Var la = modality_alignment_loss(g, g.input(pi), g.input(pu), {0, 1}, 0.1);
    CHECK(std::abs(la.scalar() - std::log(2.0)) < 1e-9);
  }
}

TEST_CASE("alignment loss falls as aligned pairs get closer") {
  // Orthogonal construction: cross-modal similarity between different
  // samples is always zero, so each row reduces to log(1 + exp(-cos/tau)).
  const double tau = 0.1;
  double prev = 1e100;
  for (double theta : {1.5, 1.2, 0.9, 0.6, 0.3, 0.05}) {
    Mat pi = Mat::Zero(2, 4), pu = Mat::Zero(2, 4);
    pi(0, 0) = 1;
    pi(1, 1) = 1;
    pu(0, 0) = std::cos(theta);
    pu(0, 2) = std::sin(theta);
    pu(1, 1) = std::cos(theta);
    pu(1, 3) = std::sin(theta);
    Graph g;
    Var la = modality_alignment_loss(g, g.input(pi), g.input(pu), {0, 1}, tau);
    double closed_form = std::log(1.0 + std::exp(-std::cos(theta) / tau));
    CHECK(std::abs(la.scalar() - closed_form) < 1e-9);
    CHECK(la.scalar() < prev);
    prev = la.scalar();
  }
}

TEST_CASE("alignment loss is invariant to batch order") {
  Rng rng(4103);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 6;
    Mat pi = random_mat(rng, n, 5);
    Mat pu = random_mat(rng, n, 5);
    std::vector<int> group = {0, 0, 1, 2, 2, 3};
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.uniform_int(i + 1)]);

    Mat pi2(n, 5), pu2(n, 5);
    std::vector<int> group2(n);
    for (int i = 0; i < n; ++i) {
      pi2.row(i) = pi.row(perm[i]);
      pu2.row(i) = pu.row(perm[i]);
      group2[i] = group[perm[i]];
    }
    Graph ga, gb;
    double a = modality_alignment_loss(ga, ga.input(pi), ga.input(pu), group,
                                       0.1)
                   .scalar();
    double b = modality_alignment_loss(gb, gb.input(pi2), gb.input(pu2),
                                       group2, 0.1)
                   .scalar();
    CHECK(std::abs(a - b) < 1e-12);
  }
}

TEST_CASE("alignment loss rejects bad inputs") {
  Rng rng(4104);
  Graph g;
  Var a = g.input(random_mat(rng, 3, 4));
  Var b = g.input(random_mat(rng, 3, 4));
  CHECK_THROWS_AS(modality_alignment_loss(g, Var(), b, {0, 1, 2}, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(modality_alignment_loss(g, a, b, {0, 1, 2}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(modality_alignment_loss(g, a, b, {0, 1}, 0.1),
                  std::invalid_argument);
  Var wide = g.input(random_mat(rng, 3, 5));
  CHECK_THROWS_AS(modality_alignment_loss(g, a, wide, {0, 1, 2}, 0.1),
                  std::invalid_argument);
  Var empty = g.input(Mat(0, 4));
  CHECK_THROWS_AS(modality_alignment_loss(g, empty, empty, {}, 0.1),
                  std::invalid_argument);
}

TEST_CASE("consistency loss matches an elementwise oracle") {
  Rng rng(4105);
  const int d = 4, n_steps = 5;
  std::vector<Mat> xs, vs, pis, pus;
  double expected = 0.0;
  for (int t = 0; t < n_steps; ++t) {
    xs.push_back(random_mat(rng, 1, d));
    vs.push_back(random_mat(rng, 1, d));
    pis.push_back(random_mat(rng, 1, d));
    pus.push_back(random_mat(rng, 1, d));
    expected += (pus[t] - xs[t]).squaredNorm() + (pis[t] - vs[t]).squaredNorm();
  }
  expected /= n_steps;

  Graph g;
  std::vector<AgentModel::StepVars> steps(n_steps);
  for (int t = 0; t < n_steps; ++t) {
    steps[t].x_tilde = g.input(xs[t]);
    steps[t].v_tilde = g.input(vs[t]);
    steps[t].pi_tilde = g.input(pis[t]);
    steps[t].pu_tilde = g.input(pus[t]);
  }
  CHECK(std::abs(sequential_consistency_loss(g, steps).scalar() - expected) <
        1e-9);

  CHECK_THROWS_AS(sequential_consistency_loss(g, {}), std::invalid_argument);
}

TEST_CASE("consistency loss pinned values") {
  Graph g;
  Mat x(1, 3), off(1, 3);
  x << 0.3, -0.7, 1.1;
  off = x;
  off(0, 1) += 1.0;  // one coordinate off by one => squared distance 1

  AgentModel::StepVars perfect;
  perfect.x_tilde = perfect.pu_tilde = g.input(x);
  perfect.v_tilde = perfect.pi_tilde = g.input(x);
  AgentModel::StepVars offset = perfect;
  offset.pu_tilde = g.input(off);

  CHECK(sequential_consistency_loss(g, {perfect}).scalar() == 0.0);
  // Mean over two steps of (1 + 0) and (0 + 0).
  CHECK(std::abs(sequential_consistency_loss(g, {offset, perfect}).scalar() -
                 0.5) < 1e-12);
}

TEST_CASE("imitation loss matches the negative mean log oracle") {
  // Teacher gets all the mass: perfect imitation costs nothing.
  {
    Graph g;
    Mat b(1, 3);
    b << 0, 1, 0;
    AgentModel::StepVars s;
    s.beta = g.input(b);
    s.teacher = 1;
    CHECK(imitation_loss(g, {s}).scalar() == 0.0);
  }

  // Uniform over four actions, any teachers: exactly log 4.
  {
    Graph g;
    std::vector<AgentModel::StepVars> steps(3);
    for (int t = 0; t < 3; ++t) {
      steps[t].beta = g.input(Mat::Constant(1, 4, 0.25));
      steps[t].teacher = t;
    }
    CHECK(std::abs(imitation_loss(g, steps).scalar() - std::log(4.0)) < 1e-12);
  }

  // Random distributions against a scalar oracle.
  {
    Rng rng(4106);
    const int n_steps = 6, n_act = 5;
    std::vector<Mat> betas;
    std::vector<int> teachers;
    double expected = 0.0;
    for (int t = 0; t < n_steps; ++t) {
      Mat logits = random_mat(rng, 1, n_act);
      Mat row = (logits.array() - logits.maxCoeff()).exp();
      row /= row.sum();
      int teacher = static_cast<int>(rng.uniform_int(n_act));
      expected -= std::log(row(0, teacher));
      betas.push_back(row);
      teachers.push_back(teacher);
    }
    expected /= n_steps;

    Graph g;
    std::vector<AgentModel::StepVars> steps(n_steps);
    for (int t = 0; t < n_steps; ++t) {
      steps[t].beta = g.input(betas[t]);
      steps[t].teacher = teachers[t];
    }
    CHECK(std::abs(imitation_loss(g, steps).scalar() - expected) < 1e-12);
  }

  // Bad teacher indices and empty traces are rejected.
  {
    Graph g;
    AgentModel::StepVars s;
    s.beta = g.input(Mat::Constant(1, 3, 1.0 / 3));
    s.teacher = 3;
    CHECK_THROWS_AS(imitation_loss(g, {s}), std::out_of_range);
    s.teacher = -1;
    CHECK_THROWS_AS(imitation_loss(g, {s}), std::out_of_range);
    CHECK_THROWS_AS(imitation_loss(g, {}), std::invalid_argument);
  }
}

TEST_CASE("progress rewards follow geodesic improvement") {
  NavGraph world = line_world(4, 2.0);  // nodes at x = 0, 2, 4, 6
  LossConfig cfg;                       // bonus 2.0, radius 3.0

  // Two approaching moves then stop 2m from the goal: +2, +2, 0 + bonus.
  {
    std::vector<double> r = progress_rewards(world, {3, 2, 1}, true, 0, cfg);
    REQUIRE(r.size() == 3);
    CHECK(r[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r[2] == doctest::Approx(2.0).epsilon(1e-12));
  }

  // Immediate stop far from the goal: single step, failure penalty only.
  {
    std::vector<double> r = progress_rewards(world, {3}, true, 0, cfg);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(-2.0).epsilon(1e-12));
  }

  // Ran out of budget after one good move, still 4m away: +2 - 2 = 0.
  {
    std::vector<double> r = progress_rewards(world, {3, 2}, false, 0, cfg);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(0.0).epsilon(1e-12));
  }

  // Stopping on the goal node: zero distance, success bonus.
  {
    std::vector<double> r = progress_rewards(world, {0}, true, 0, cfg);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(2.0).epsilon(1e-12));
  }

  // Success requires strictly less than the radius.
  {
    LossConfig tight = cfg;
    tight.success_radius = 2.0;
    std::vector<double> r = progress_rewards(world, {0}, true, 1, tight);
    REQUIRE(r.size() == 1);  // NE is exactly 2.0 => failure
    CHECK(r[0] == doctest::Approx(-2.0).epsilon(1e-12));
  }

  // No moves and no stop: nothing happened, no reward entries.
  CHECK(progress_rewards(world, {2}, false, 0, cfg).empty());
  CHECK_THROWS_AS(progress_rewards(world, {}, true, 0, cfg),
                  std::invalid_argument);
}

TEST_CASE("discounted returns match the hand-unrolled recursion") {
  {
    std::vector<double> returns = discounted_returns({2, 2, 2}, 0.5);
    REQUIRE(returns.size() == 3);
    CHECK(returns[0] == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(returns[1] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(returns[2] == doctest::Approx(2.0).epsilon(1e-12));
  }
  {
    std::vector<double> returns = discounted_returns({2, 2, 2}, 1.0);
    CHECK(returns[0] == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(returns[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(returns[2] == doctest::Approx(2.0).epsilon(1e-12));
  }
  CHECK(discounted_returns({}, 0.9).empty());
  CHECK(discounted_returns({1.5}, 0.9) == std::vector<double>{1.5});

  // Random rewards against the direct double-sum definition.
  Rng rng(4107);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_int(10));
    std::vector<double> rewards(n);
    for (auto& r : rewards) r = rng.normal();
    std::vector<double> expected(n, 0.0);
    for (int t = 0; t < n; ++t)
      for (int k = t; k < n; ++k)
        expected[t] += std::pow(0.9, k - t) * rewards[k];
    std::vector<double> got = discounted_returns(rewards, 0.9);
    for (int t = 0; t < n; ++t) CHECK(std::abs(got[t] - expected[t]) < 1e-12);
  }
}

TEST_CASE("rl loss matches the per-step oracle") {
  // Zero advantage kills both the policy and critic terms exactly.
  {
    Graph g;
    AgentModel::StepVars s;
    s.beta = g.input(Mat::Constant(1, 2, 0.5));
    s.value = g.input(Mat::Constant(1, 1, 1.7));
    s.action = 0;
    CHECK(rl_loss(g, {s}, {1.7}).scalar() == 0.0);
  }

  // Single step, p = 0.5, advantage 1: -log(0.5) * 1 + 1 = log 2 + 1.
  {
    Graph g;
    AgentModel::StepVars s;
    s.beta = g.input(Mat::Constant(1, 2, 0.5));
    s.value = g.input(Mat::Constant(1, 1, 1.0));
    s.action = 1;
    CHECK(std::abs(rl_loss(g, {s}, {2.0}).scalar() - (std::log(2.0) + 1.0)) <
          1e-12);
  }

  // Three steps against a scalar loop oracle.
  {
    Rng rng(4108);
    std::vector<Mat> betas;
    std::vector<double> values, returns;
    std::vector<int> actions;
    double expected = 0.0;
    for (int t = 0; t < 3; ++t) {
      Mat logits = random_mat(rng, 1, 4);
      Mat row = (logits.array() - logits.maxCoeff()).exp();
      row /= row.sum();
      int action = static_cast<int>(rng.uniform_int(4));
      double value = rng.normal();
      double ret = rng.normal();
      double adv = ret - value;
      expected += -std::log(row(0, action)) * adv + adv * adv;
      betas.push_back(row);
      values.push_back(value);
      returns.push_back(ret);
      actions.push_back(action);
    }

    Graph g;
    std::vector<AgentModel::StepVars> steps(3);
    for (int t = 0; t < 3; ++t) {
      steps[t].beta = g.input(betas[t]);
      steps[t].value = g.input(Mat::Constant(1, 1, values[t]));
      steps[t].action = actions[t];
    }
    CHECK(std::abs(rl_loss(g, steps, returns).scalar() - expected) < 1e-12);
  }

  // Length mismatch, bad action, and empty traces are rejected.
  {
    Graph g;
    AgentModel::StepVars s;
    s.beta = g.input(Mat::Constant(1, 2, 0.5));
    s.value = g.input(Mat::Constant(1, 1, 0.0));
    s.action = 2;
    CHECK_THROWS_AS(rl_loss(g, {s}, {1.0}), std::out_of_range);
    s.action = 0;
    CHECK_THROWS_AS(rl_loss(g, {s}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(rl_loss(g, {}, {}), std::invalid_argument);
  }
}

TEST_CASE("total loss applies the pass-dependent weights") {
  LossConfig cfg;  // 0.2 / 0.01 / 0.0001

  CHECK(std::abs(total_loss(1.0, 1.0, 1.0, 1.0, cfg, TrainPass::kIl) -
                 1.2101) < 1e-12);
  CHECK(std::abs(total_loss(1.0, 1.0, 1.0, 1.0, cfg, TrainPass::kRl) - 1.21) <
        1e-12);
  CHECK(total_loss(0.0, 0.0, 0.0, 0.0, cfg, TrainPass::kIl) == 0.0);

  // Ablation nesting: zeroing a weight removes exactly that term.
  LossConfig no_align = cfg;
  no_align.lambda3 = 0.0;
  CHECK(total_loss(1.0, 1.0, 1.0, 1.0, no_align, TrainPass::kIl) ==
        total_loss(1.0, 1.0, 1.0, 1.0, cfg, TrainPass::kRl));
  LossConfig il_only = cfg;
  il_only.lambda2 = il_only.lambda3 = 0.0;
  CHECK(std::abs(total_loss(0.5, 1.0, 7.0, 9.0, il_only, TrainPass::kIl) -
                 0.7) < 1e-12);
}

TEST_CASE("total loss graph version matches and skips absent parts") {
  LossConfig cfg;
  auto c = [](Graph& g, double v) { return g.input(Mat::Constant(1, 1, v)); };

  {
    Graph g;
    Var t = total_loss(g, c(g, 1.0), c(g, 1.0), c(g, 1.0), c(g, 1.0), cfg,
                       TrainPass::kIl);
    CHECK(std::abs(t.scalar() - 1.2101) < 1e-12);
  }
  {
    Graph g;
    Var t = total_loss(g, c(g, 1.0), c(g, 1.0), c(g, 1.0), c(g, 1.0), cfg,
                       TrainPass::kRl);
    CHECK(std::abs(t.scalar() - 1.21) < 1e-12);
  }
  {
    // Alignment passed but ignored outside imitation passes; absent
    // components simply drop out.
    Graph g;
    Var t = total_loss(g, Var(), c(g, 2.0), Var(), c(g, 100.0), cfg,
                       TrainPass::kRl);
    CHECK(std::abs(t.scalar() - 0.4) < 1e-12);
  }
  {
    Graph g;
    CHECK_THROWS_AS(total_loss(g, Var(), Var(), Var(), Var(), cfg,
                               TrainPass::kIl),
                    std::invalid_argument);
  }
}

TEST_CASE("loss config validates and loads from config") {
  Config cfg;
  LossConfig lc = LossConfig::from_config(cfg);
  CHECK(lc.lambda1 == 0.2);
  CHECK(lc.lambda2 == 0.01);
  CHECK(lc.lambda3 == 0.0001);
  CHECK(lc.tau2 == 0.1);
  CHECK(lc.rl_gamma == 0.9);
  CHECK(lc.success_bonus == 2.0);
  CHECK(lc.success_radius == 3.0);

  LossConfig bad = lc;
  bad.tau2 = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = lc;
  bad.rl_gamma = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = lc;
  bad.lambda2 = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = lc;
  bad.success_radius = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("gradients flow through every loss term") {
  Rng rng(4109);
  ParamStore store;
  store.create("pi", random_mat(rng, 4, 3));
  store.create("pu", random_mat(rng, 4, 3));
  store.create("logits", random_mat(rng, 2, 3));
  store.create("vals", random_mat(rng, 2, 1));
  store.create("xs", random_mat(rng, 2, 3));
  store.create("vs", random_mat(rng, 2, 3));
  store.create("pis", random_mat(rng, 2, 3));
  store.create("pus", random_mat(rng, 2, 3));

  LossConfig cfg;
  cfg.tau2 = 0.5;  // keep exponentials tame for finite differences
  const std::vector<int> group = {0, 0, 1, 1};
  const std::vector<int> teachers = {0, 2};
  const std::vector<int> actions = {1, 0};
  const std::vector<double> returns = {0.7, -0.3};

  auto build = [&](Graph& g) {
    std::vector<AgentModel::StepVars> steps(2);
    for (int t = 0; t < 2; ++t) {
      steps[t].beta = g.softmax_rows(g.row(g.param(store, "logits"), t));
      steps[t].value = g.pick(g.param(store, "vals"), t, 0);
      steps[t].x_tilde = g.row(g.param(store, "xs"), t);
      steps[t].v_tilde = g.row(g.param(store, "vs"), t);
      steps[t].pi_tilde = g.row(g.param(store, "pis"), t);
      steps[t].pu_tilde = g.row(g.param(store, "pus"), t);
      steps[t].teacher = teachers[t];
      steps[t].action = actions[t];
    }
    Var la = modality_alignment_loss(g, g.param(store, "pi"),
                                     g.param(store, "pu"), group, cfg.tau2);
    return total_loss(g, rl_loss(g, steps, returns), imitation_loss(g, steps),
                      sequential_consistency_loss(g, steps), la, cfg,
                      TrainPass::kIl);
  };
  check_gradients(store, build);
}
