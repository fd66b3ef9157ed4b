#include "adaptnav/agent/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adaptnav {

using nn::Mat;

ModelDims ModelDims::from_config(const Config& cfg) {
  ModelDims d;
  d.hidden = cfg.model.hidden_dim;
  d.heads = cfg.model.heads;
  d.layers = cfg.model.layers;
  d.ffn_mult = cfg.model.ffn_mult;
  d.enc_dim = cfg.encoder.dim;
  d.feat_dim = cfg.world.feature_dim;
  d.dropout = cfg.model.dropout;
  d.validate();
  return d;
}

void ModelDims::validate() const {
  if (hidden < 1 || heads < 1 || layers < 1 || ffn_mult < 1 || enc_dim < 1 ||
      feat_dim < 1 || max_tokens < 4)
    throw std::invalid_argument("agent: dimensions must be positive");
  if (hidden % heads != 0)
    throw std::invalid_argument("agent: hidden must be divisible by heads");
  if (dropout < 0 || dropout >= 1)
    throw std::invalid_argument("agent: dropout must be in [0, 1)");
}

MhaResult multi_head_attention(Graph& g, Var q, Var k, Var v,
                               const Mat* key_valid, const AttnParams& p,
                               int heads, const Mat* action_valid) {
  const int d = static_cast<int>(p.wq.cols());
  if (d % heads != 0)
    throw std::invalid_argument("attention: width not divisible by heads");
  const int dh = d / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(d));
  const Eigen::Index n_q = q.rows();
  const Eigen::Index n_k = k.rows();
  if (key_valid && (key_valid->rows() != 1 || key_valid->cols() != n_k))
    throw std::invalid_argument("attention: key mask shape mismatch");

  Var qp = g.add_rowvec(g.matmul(q, p.wq), p.bq);
  Var kp = g.add_rowvec(g.matmul(k, p.wk), p.bk);
  Var vp = g.add_rowvec(g.matmul(v, p.wv), p.bv);

  Mat full_mask, action_mask;
  if (key_valid) full_mask = key_valid->replicate(n_q, 1);
  if (action_valid) action_mask = *action_valid;

  std::vector<Var> head_outs;
  Var weights_sum, action_sum;
  for (int h = 0; h < heads; ++h) {
    Var qh = g.slice_cols(qp, h * dh, dh);
    Var kh = g.slice_cols(kp, h * dh, dh);
    Var vh = g.slice_cols(vp, h * dh, dh);
    Var logits = g.scale(g.matmul(qh, g.transpose(kh)), inv_scale);
    Var weights = g.softmax_rows(logits, key_valid ? &full_mask : nullptr);
    head_outs.push_back(g.matmul(weights, vh));
    weights_sum = h ? g.add(weights_sum, weights) : weights;
    if (action_valid) {
      Var act = g.softmax_rows(g.row(logits, 0), &action_mask);
      action_sum = h ? g.add(action_sum, act) : act;
    }
  }

  MhaResult r;
  r.out = g.add_rowvec(g.matmul(g.concat_cols(head_outs), p.wo), p.bo);
  r.weights_avg = g.scale(weights_sum, 1.0 / heads);
  if (action_valid) r.action = g.scale(action_sum, 1.0 / heads);
  return r;
}

AgentModel::AgentModel(ModelDims dims, const TokenVocab* vocab,
                       ParamStore* store)
    : dims_(dims), vocab_(vocab), store_(store) {
  dims_.validate();
  if (!vocab_ || !store_)
    throw std::invalid_argument("agent: vocab and parameter store required");
}

void AgentModel::init_params(const ModelDims& dims, int vocab_size,
                             ParamStore& store, Rng& rng) {
  dims.validate();
  const int d = dims.hidden;
  const int f = dims.hidden * dims.ffn_mult;
  auto wstd = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };

  store.create_gaussian("emb.tok", vocab_size, d, wstd(d), rng);
  store.create_gaussian("emb.pos", dims.max_tokens, d, wstd(d), rng);

  for (const char* stack : {"lang", "cross", "dec"}) {
    for (int l = 0; l < dims.layers; ++l) {
      std::string p = std::string(stack) + "." + std::to_string(l) + ".";
      for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
        store.create_gaussian(p + w, d, d, wstd(d), rng);
      for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
        store.create(p + b, Mat::Zero(1, d));
      store.create(p + "ln1.g", Mat::Ones(1, d));
      store.create(p + "ln1.b", Mat::Zero(1, d));
      store.create_gaussian(p + "ffn.w1", d, f, wstd(d), rng);
      store.create(p + "ffn.b1", Mat::Zero(1, f));
      store.create_gaussian(p + "ffn.w2", f, d, wstd(f), rng);
      store.create(p + "ffn.b2", Mat::Zero(1, d));
      store.create(p + "ln2.g", Mat::Ones(1, d));
      store.create(p + "ln2.b", Mat::Zero(1, d));
    }
  }

  store.create_gaussian("pe.img.w", dims.enc_dim, d, wstd(dims.enc_dim), rng);
  store.create("pe.img.b", Mat::Zero(1, d));
  store.create_gaussian("pe.txt.w", dims.enc_dim, d, wstd(dims.enc_dim), rng);
  store.create("pe.txt.b", Mat::Zero(1, d));
  store.create_gaussian("pe.mm.w", 2 * d, d, wstd(2 * d), rng);
  store.create("pe.mm.b", Mat::Zero(1, d));

  store.create_gaussian("vis.w", dims.feat_dim, d, wstd(dims.feat_dim), rng);
  store.create("vis.b", Mat::Zero(1, d));
  store.create_gaussian("stop", 1, d, wstd(d), rng);

  store.create_gaussian("upd.w1", 3 * d, f, wstd(3 * d), rng);
  store.create("upd.b1", Mat::Zero(1, f));
  store.create_gaussian("upd.w2", f, d, wstd(f), rng);
  store.create("upd.b2", Mat::Zero(1, d));
  store.create("upd.ln.g", Mat::Ones(1, d));
  store.create("upd.ln.b", Mat::Zero(1, d));

  store.create_gaussian("critic.w", d, 1, wstd(d), rng);
  store.create("critic.b", Mat::Zero(1, 1));
}

AgentModel::LayerParams AgentModel::layer_params(Graph& g,
                                                 const std::string& p) const {
  LayerParams lp;
  lp.attn.wq = g.param(*store_, p + "attn.wq");
  lp.attn.bq = g.param(*store_, p + "attn.bq");
  lp.attn.wk = g.param(*store_, p + "attn.wk");
  lp.attn.bk = g.param(*store_, p + "attn.bk");
  lp.attn.wv = g.param(*store_, p + "attn.wv");
  lp.attn.bv = g.param(*store_, p + "attn.bv");
  lp.attn.wo = g.param(*store_, p + "attn.wo");
  lp.attn.bo = g.param(*store_, p + "attn.bo");
  lp.ln1g = g.param(*store_, p + "ln1.g");
  lp.ln1b = g.param(*store_, p + "ln1.b");
  lp.w1 = g.param(*store_, p + "ffn.w1");
  lp.b1 = g.param(*store_, p + "ffn.b1");
  lp.w2 = g.param(*store_, p + "ffn.w2");
  lp.b2 = g.param(*store_, p + "ffn.b2");
  lp.ln2g = g.param(*store_, p + "ln2.g");
  lp.ln2b = g.param(*store_, p + "ln2.b");
  return lp;
}

AgentModel::BlockResult AgentModel::attention_block(
    Graph& g, Var q_rows, Var kv_rows, const Mat* key_valid,
    const LayerParams& lp, const Mat* action_valid) const {
  MhaResult mha = multi_head_attention(g, q_rows, kv_rows, kv_rows, key_valid,
                                       lp.attn, dims_.heads, action_valid);
  Var h = g.layer_norm_rows(g.add(q_rows, mha.out), lp.ln1g, lp.ln1b);
  Var ff = g.add_rowvec(
      g.matmul(g.gelu(g.add_rowvec(g.matmul(h, lp.w1), lp.b1)), lp.w2), lp.b2);
  BlockResult r;
  r.out = g.layer_norm_rows(g.add(h, ff), lp.ln2g, lp.ln2b);
  r.weights_avg = mha.weights_avg;
  r.action = mha.action;
  return r;
}

Var AgentModel::dropout(Graph& g, Var x, const ForwardOptions& opts) const {
  if (!opts.train || dims_.dropout <= 0) return x;
  if (!opts.rng)
    throw std::invalid_argument("agent: training forward needs an rng");
  const double keep = 1.0 - dims_.dropout;
  Mat mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      mask(i, j) = opts.rng->uniform() < keep ? 1.0 / keep : 0.0;
  return g.mul(x, g.input(std::move(mask)));
}

AgentModel::Encoded AgentModel::encode_instruction(
    Graph& g, const std::string& instruction) const {
  std::vector<int> ids = vocab_->encode(instruction);
  if (ids.empty()) throw std::invalid_argument("agent: empty instruction");
  std::vector<int> padded;
  padded.reserve(ids.size() + 2);
  padded.push_back(TokenVocab::kCls);
  padded.insert(padded.end(), ids.begin(), ids.end());
  padded.push_back(TokenVocab::kSep);
  if (static_cast<int>(padded.size()) > dims_.max_tokens)
    throw std::invalid_argument("agent: instruction longer than position table");

  std::vector<int> positions(padded.size());
  for (size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);

  Var tok = g.embedding(g.param(*store_, "emb.tok"), padded);
  Var pos = g.embedding(g.param(*store_, "emb.pos"), positions);
  Var x = g.add(tok, pos);
  for (int l = 0; l < dims_.layers; ++l) {
    LayerParams lp = layer_params(g, "lang." + std::to_string(l) + ".");
    x = attention_block(g, x, x, nullptr, lp).out;
  }
  Encoded e;
  e.x = x;
  e.s0 = g.row(x, 0);
  e.len = static_cast<int>(padded.size());
  return e;
}

AgentModel::PromptEncodings AgentModel::encode_prompts(
    Graph& g, const Mat& img_raw, const Mat& txt_raw,
    const std::vector<char>& valid, const ForwardOptions& opts) const {
  const Eigen::Index n = img_raw.rows();
  if (txt_raw.rows() != n || static_cast<Eigen::Index>(valid.size()) != n)
    throw std::invalid_argument("agent: prompt row counts disagree");
  if (n == 0) return PromptEncodings{};
  if (img_raw.cols() != dims_.enc_dim || txt_raw.cols() != dims_.enc_dim)
    throw std::invalid_argument("agent: prompt embedding width mismatch");

  Mat row_mask(n, dims_.hidden);
  Mat valid_row(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = valid[i] ? 1.0 : 0.0;
    row_mask.row(i).setConstant(v);
    valid_row(0, i) = v;
  }
  Var mask = g.input(row_mask);

  Var wi = g.param(*store_, "pe.img.w"), bi = g.param(*store_, "pe.img.b");
  Var wu = g.param(*store_, "pe.txt.w"), bu = g.param(*store_, "pe.txt.b");
  Var wp = g.param(*store_, "pe.mm.w"), bp = g.param(*store_, "pe.mm.b");

  PromptEncodings pe;
  pe.img = g.mul(dropout(g, g.add_rowvec(g.matmul(g.input(img_raw), wi), bi), opts),
                 mask);
  pe.txt = g.mul(dropout(g, g.add_rowvec(g.matmul(g.input(txt_raw), wu), bu), opts),
                 mask);
  Var cat = g.concat_cols({pe.img, pe.txt});
  pe.mm = g.mul(dropout(g, g.add_rowvec(g.matmul(cat, wp), bp), opts), mask);
  pe.valid = valid_row;
  pe.n = static_cast<int>(n);
  return pe;
}

AgentModel::PromptEncodings AgentModel::encode_prompts(
    Graph& g, const RetrievedPromptSet& set, const PromptBase& base,
    const ForwardOptions& opts) const {
  const int n = set.n_max;
  Mat img = Mat::Zero(n, dims_.enc_dim);
  Mat txt = Mat::Zero(n, dims_.enc_dim);
  std::vector<char> valid(set.valid.begin(), set.valid.end());
  for (int i = 0; i < n; ++i) {
    if (!set.valid[i]) continue;
    const ActionPrompt& p = base.prompts.at(set.base_index[i]);
    if (p.img_emb.size() != dims_.enc_dim || p.txt_emb.size() != dims_.enc_dim)
      throw std::invalid_argument("agent: prompt base embedding width mismatch");
    img.row(i) = p.img_emb.transpose();
    txt.row(i) = p.txt_emb.transpose();
  }
  return encode_prompts(g, img, txt, valid, opts);
}

AgentModel::StepResult AgentModel::decide_step(Graph& g, Var state, Var x,
                                               const PromptEncodings& prompts,
                                               const NavGraph& world,
                                               const CandidateSet& cand,
                                               const ForwardOptions& opts) const {
  (void)opts;
  const int instr_len = static_cast<int>(x.rows());
  const int j = static_cast<int>(cand.targets.size());
  if (j == 0) throw std::invalid_argument("agent: empty candidate set");

  // Candidate visual rows: projected approach-view features, then the
  // learned stop embedding.
  Mat raw(j, dims_.feat_dim);
  for (int i = 0; i < j; ++i) {
    const ViewImage& view =
        world.node(cand.node).panorama.at(cand.view_index[i]);
    raw.row(i) = view.feature.transpose();
  }
  Var vis = g.add_rowvec(g.matmul(g.input(std::move(raw)),
                                  g.param(*store_, "vis.w")),
                         g.param(*store_, "vis.b"));
  Var v_t = g.concat_rows({vis, g.param(*store_, "stop")});  // (J+1) x d
  Var k_t = g.concat_rows({state, v_t});                     // (J+2) x d

  // Cross-modal attention over the prompt-augmented instruction memory.
  Var memory = x;
  Mat key_valid(1, instr_len + prompts.n);
  key_valid.setOnes();
  if (prompts.n > 0) {
    memory = g.concat_rows({x, prompts.mm});
    key_valid.block(0, instr_len, 1, prompts.n) = prompts.valid;
  }
  Var q = k_t;
  Var alpha_full;
  for (int l = 0; l < dims_.layers; ++l) {
    LayerParams lp = layer_params(g, "cross." + std::to_string(l) + ".");
    BlockResult b = attention_block(g, q, memory, &key_valid, lp);
    q = b.out;
    alpha_full = b.weights_avg;
  }
  Var alpha = g.row(alpha_full, 0);  // state-row attention over the memory

  Var alpha1 = prompts.n > 0 ? g.slice_cols(alpha, 0, instr_len) : alpha;
  Var x_tilde = g.matmul(alpha1, x);
  Var pi_tilde, pu_tilde;
  if (prompts.n > 0) {
    Var alpha2 = g.slice_cols(alpha, instr_len, prompts.n);
    pi_tilde = g.matmul(alpha2, prompts.img);
    pu_tilde = g.matmul(alpha2, prompts.txt);
  } else {
    pi_tilde = g.input(Mat::Zero(1, dims_.hidden));
    pu_tilde = g.input(Mat::Zero(1, dims_.hidden));
  }

  // Decision self-attention; the action head is the state row's masked
  // distribution over the candidate rows.
  Mat action_valid(1, j + 2);
  action_valid.setOnes();
  action_valid(0, 0) = 0;  // the state key is not an action
  Var dec = q;
  Var beta_full;
  for (int l = 0; l < dims_.layers; ++l) {
    LayerParams lp = layer_params(g, "dec." + std::to_string(l) + ".");
    BlockResult b = attention_block(g, dec, dec, nullptr, lp,
                                    l + 1 == dims_.layers ? &action_valid
                                                          : nullptr);
    dec = b.out;
    if (b.action.valid()) beta_full = b.action;
  }
  Var beta = g.slice_cols(beta_full, 1, j + 1);
  Var v_tilde = g.matmul(beta, v_t);

  // Recurrent update and critic.
  Var cat = g.concat_cols({x_tilde, v_tilde, state});
  Var hidden = g.gelu(g.add_rowvec(g.matmul(cat, g.param(*store_, "upd.w1")),
                                   g.param(*store_, "upd.b1")));
  Var delta = g.add_rowvec(g.matmul(hidden, g.param(*store_, "upd.w2")),
                           g.param(*store_, "upd.b2"));
  Var next_state = g.layer_norm_rows(g.add(state, delta),
                                     g.param(*store_, "upd.ln.g"),
                                     g.param(*store_, "upd.ln.b"));
  Var value = g.add(g.matmul(g.row(dec, 0), g.param(*store_, "critic.w")),
                    g.param(*store_, "critic.b"));

  StepResult r;
  r.beta = beta;
  r.alpha = alpha;
  r.x_tilde = x_tilde;
  r.v_tilde = v_tilde;
  r.pi_tilde = pi_tilde;
  r.pu_tilde = pu_tilde;
  r.next_state = next_state;
  r.value = value;
  r.instr_len = instr_len;
  return r;
}

AgentModel::RolloutResult AgentModel::rollout(
    Graph& g, const NavGraph& world, const Episode& ep,
    const RetrievedPromptSet* prompts, const PromptBase* base,
    RolloutMode mode, int max_steps, Rng* action_rng,
    const ForwardOptions& opts) const {
  if (ep.path.empty()) throw std::invalid_argument("agent: empty episode path");
  if (mode == RolloutMode::kSample && !action_rng)
    throw std::invalid_argument("agent: sampling rollout needs an rng");
  if (prompts && !base)
    throw std::invalid_argument("agent: prompt set without a prompt base");

  Encoded enc = encode_instruction(g, ep.instruction);
  PromptEncodings pe;
  if (prompts) pe = encode_prompts(g, *prompts, *base, opts);

  RolloutResult result;
  int cur = ep.path.front();
  result.nodes.push_back(cur);
  Var state = enc.s0;

  const int horizon =
      mode == RolloutMode::kTeacher ? static_cast<int>(ep.path.size()) : max_steps;
  for (int t = 0; t < horizon; ++t) {
    CandidateSet cand = candidates_at(world, cur);
    StepResult sr = decide_step(g, state, enc.x, pe, world, cand, opts);

    int teacher = -1;
    if (t < static_cast<int>(ep.path.size()) && cur == ep.path[t]) {
      if (t + 1 < static_cast<int>(ep.path.size())) {
        auto it = std::find(cand.targets.begin(), cand.targets.end(),
                            ep.path[t + 1]);
        if (it != cand.targets.end())
          teacher = static_cast<int>(it - cand.targets.begin());
      } else {
        teacher = cand.stop_index();
      }
    }

    int action;
    const Mat& b = sr.beta.val();
    if (mode == RolloutMode::kTeacher) {
      if (teacher < 0)
        throw std::logic_error("agent: teacher action undefined on-path");
      action = teacher;
    } else if (mode == RolloutMode::kGreedy) {
      Eigen::Index arg = 0;
      b.row(0).maxCoeff(&arg);
      action = static_cast<int>(arg);
    } else {
      const double r = action_rng->uniform();
      double cum = 0;
      action = static_cast<int>(b.cols()) - 1;
      for (Eigen::Index i = 0; i < b.cols(); ++i) {
        cum += b(0, i);
        if (r < cum) {
          action = static_cast<int>(i);
          break;
        }
      }
    }

    DecisionStep ds;
    ds.node = cur;
    ds.action = action;
    ds.teacher = teacher;
    ds.beta = b.row(0).transpose();
    ds.alpha = sr.alpha.val().row(0).transpose();
    ds.alpha_instr_len = sr.instr_len;
    ds.x_tilde = sr.x_tilde.val().row(0).transpose();
    ds.v_tilde = sr.v_tilde.val().row(0).transpose();
    ds.pi_tilde = sr.pi_tilde.val().row(0).transpose();
    ds.pu_tilde = sr.pu_tilde.val().row(0).transpose();
    ds.value = sr.value.scalar();
    result.trace.steps.push_back(std::move(ds));

    StepVars sv;
    sv.beta = sr.beta;
    sv.x_tilde = sr.x_tilde;
    sv.v_tilde = sr.v_tilde;
    sv.pi_tilde = sr.pi_tilde;
    sv.pu_tilde = sr.pu_tilde;
    sv.value = sr.value;
    sv.action = action;
    sv.teacher = teacher;
    sv.node = cur;
    result.steps.push_back(sv);

    state = sr.next_state;
    if (action == cand.stop_index()) {
      result.stopped = true;
      break;
    }
    cur = cand.targets[action];
    result.nodes.push_back(cur);
  }
  return result;
}

}  // namespace adaptnav
