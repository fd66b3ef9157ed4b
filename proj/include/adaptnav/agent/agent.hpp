#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "adaptnav/core/config.hpp"
#include "adaptnav/core/rng.hpp"
#include "adaptnav/core/vocab.hpp"
#include "adaptnav/nn/graph.hpp"
#include "adaptnav/nn/params.hpp"
#include "adaptnav/prompts/prompts.hpp"
#include "adaptnav/world/world.hpp"

namespace adaptnav {

using nn::Graph;
using nn::ParamStore;
using nn::Var;

struct ModelDims {
  int hidden = 64;     // transformer width; also the attention logit scale
  int heads = 4;
  int layers = 2;      // depth of each attention stack
  int ffn_mult = 4;    // feed-forward inner width = ffn_mult * hidden
  int enc_dim = 64;    // frozen sub-prompt embedding width
  int feat_dim = 64;   // raw view feature width
  int max_tokens = 64; // positional table size (instruction + specials)
  double dropout = 0.1;

  static ModelDims from_config(const Config& cfg);
  void validate() const;  // throws std::invalid_argument
};

// Per-call forward switches. Dropout draws from `rng` only when training.
struct ForwardOptions {
  bool train = false;
  Rng* rng = nullptr;
};

// One attention layer's projection parameters, already pulled onto a graph.
struct AttnParams {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};

struct MhaResult {
  Var out;          // queries x hidden, after the output projection
  Var weights_avg;  // queries x keys, head-averaged row-stochastic weights
  Var action;       // 1 x keys, masked row-0 distribution (when requested)
};

// Scaled dot-product attention, heads split column-wise, logits scaled by
// 1/sqrt(hidden). `key_valid` (1 x keys) masks key slots for every query;
// `action_valid` additionally produces a row-0 distribution restricted to its
// live slots (used for the action head).
MhaResult multi_head_attention(Graph& g, Var q, Var k, Var v,
                               const nn::Mat* key_valid, const AttnParams& p,
                               int heads,
                               const nn::Mat* action_valid = nullptr);

// What the agent recorded at one decision point (plain values, no graph).
struct DecisionStep {
  int node = -1;
  int action = -1;   // chosen candidate index; stop = candidates.stop_index()
  int teacher = -1;  // ground-truth action when defined at this node
  Eigen::VectorXd beta;      // distribution over J+1 candidates
  Eigen::VectorXd alpha;     // cross-modal row: instruction part then prompts
  int alpha_instr_len = 0;   // length of the instruction part of alpha
  Eigen::VectorXd x_tilde, v_tilde, pi_tilde, pu_tilde;
  double value = 0;  // critic output
};

struct DecisionTrace {
  std::vector<DecisionStep> steps;
};

enum class RolloutMode { kTeacher, kGreedy, kSample };

// The recurrent cross-modal agent. Owns no parameters itself: it names and
// reads them in a ParamStore so the optimizer and checkpoints see one flat
// table.
class AgentModel {
 public:
  AgentModel(ModelDims dims, const TokenVocab* vocab, ParamStore* store);

  // Creates every tensor the model reads (idempotence: throws if any exists).
  static void init_params(const ModelDims& dims, int vocab_size,
                          ParamStore& store, Rng& rng);

  const ModelDims& dims() const { return dims_; }

  struct Encoded {
    Var s0;   // 1 x hidden, the leading-position row
    Var x;    // (tokens + 2) x hidden
    int len;  // rows of x
  };
  Encoded encode_instruction(Graph& g, const std::string& instruction) const;

  struct PromptEncodings {
    Var img, txt, mm;  // n x hidden each; padded rows exactly zero
    nn::Mat valid;     // 1 x n, entries 0/1
    int n = 0;         // slot count (0 = no prompt branch at all)
  };
  PromptEncodings encode_prompts(Graph& g, const nn::Mat& img_raw,
                                 const nn::Mat& txt_raw,
                                 const std::vector<char>& valid,
                                 const ForwardOptions& opts) const;
  PromptEncodings encode_prompts(Graph& g, const RetrievedPromptSet& set,
                                 const PromptBase& base,
                                 const ForwardOptions& opts) const;

  struct StepResult {
    Var beta;        // 1 x (J+1) action distribution
    Var alpha;       // 1 x (instr_len + n) cross-modal attention row
    Var x_tilde, v_tilde, pi_tilde, pu_tilde;  // 1 x hidden attended features
    Var next_state;  // 1 x hidden
    Var value;       // 1 x 1 critic estimate
    int instr_len = 0;
  };
  StepResult decide_step(Graph& g, Var state, Var x,
                         const PromptEncodings& prompts, const NavGraph& world,
                         const CandidateSet& cand,
                         const ForwardOptions& opts) const;

  // Graph-bound per-step handles a loss builder consumes after a rollout.
  struct StepVars {
    Var beta;
    Var x_tilde, v_tilde, pi_tilde, pu_tilde;
    Var value;
    int action = -1;
    int teacher = -1;
    int node = -1;
  };
  struct RolloutResult {
    std::vector<int> nodes;  // visited node ids, starting node included
    bool stopped = false;    // terminated by the stop action
    DecisionTrace trace;
    std::vector<StepVars> steps;
  };
  // `prompts`/`base` may be null for the prompt-free baseline pipeline.
  // kSample draws actions from `action_rng` (required for that mode).
  RolloutResult rollout(Graph& g, const NavGraph& world, const Episode& ep,
                        const RetrievedPromptSet* prompts,
                        const PromptBase* base, RolloutMode mode,
                        int max_steps, Rng* action_rng,
                        const ForwardOptions& opts) const;

 private:
  struct LayerParams {
    AttnParams attn;
    Var ln1g, ln1b;
    Var w1, b1, w2, b2;
    Var ln2g, ln2b;
  };
  LayerParams layer_params(Graph& g, const std::string& prefix) const;

  struct BlockResult {
    Var out;
    Var weights_avg;
    Var action;
  };
  BlockResult attention_block(Graph& g, Var q_rows, Var kv_rows,
                              const nn::Mat* key_valid, const LayerParams& lp,
                              const nn::Mat* action_valid = nullptr) const;

  Var dropout(Graph& g, Var x, const ForwardOptions& opts) const;

  ModelDims dims_;
  const TokenVocab* vocab_;
  ParamStore* store_;
};

}  // namespace adaptnav
