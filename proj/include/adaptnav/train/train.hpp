#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adaptnav/agent/agent.hpp"
#include "adaptnav/encoders/encoders.hpp"
#include "adaptnav/losses/losses.hpp"
#include "adaptnav/metrics/metrics.hpp"
#include "adaptnav/prompts/prompts.hpp"
#include "adaptnav/world/world.hpp"

namespace adaptnav {

struct TrainConfig {
  int batch_size = 16;
  double stage1_lr = 1e-5;
  double stage2_lr = 1e-6;
  int stage1_iters = 2000;
  int stage2_iters = 1000;
  int eval_every = 200;
  int early_stop_evals = 5;  // stop after this many evals without a new best;
                             // 0 disables
  int il_per_rl = 1;         // imitation batches per reinforcement batch
  uint64_t seed = 1;
  double weight_decay = 0.01;
  int n_max = 60;     // retrieved prompt slots per episode
  int max_steps = 15; // rollout horizon for sampled/greedy modes
  LossConfig loss;

  static TrainConfig from_config(const Config& cfg);
  void validate() const;  // throws std::invalid_argument
};

// One optimizer iteration as logged: batch-mean components and the weighted
// total actually differentiated.
struct TrainLogEntry {
  int iter = 0;
  double l_rl = 0, l_il = 0, l_c = 0, l_a = 0, total = 0;
  TrainPass pass = TrainPass::kIl;

  nlohmann::json to_json() const;
};

struct TrainResult {
  double best_spl = -1;  // percentage, from the best validation eval
  int best_iter = -1;
  int iters_run = 0;
  bool early_stopped = false;
  MetricReport best_report;
  std::vector<TrainLogEntry> log;
};

// Two-stage training orchestration: batch assembly, IL/RL alternation,
// AdamW steps, scheduled validation, best-SPL checkpointing.
class Trainer {
 public:
  Trainer(TrainConfig cfg, ModelDims dims, const TokenVocab* vocab,
          WorldStore* worlds, const DualEncoder* encoder);

  // Stage 1 trains the prompt-free baseline from freshly initialized
  // parameters (`store` must be empty). The best-validation-SPL iterate is
  // written to ckpt_path; every iteration appends one JSON line to `log_out`
  // when given. Throws std::runtime_error on a non-finite loss.
  TrainResult train_stage1(const std::vector<Episode>& episodes,
                           ParamStore& store, const std::string& ckpt_path,
                           std::ostream* log_out = nullptr);

  // Stage 2 resumes from a stage-1 checkpoint with the prompt branch active
  // and the stage-2 learning rate. The checkpoint's provenance (dims,
  // encoder spec, vocabulary size) must match this trainer and `base`.
  TrainResult train_stage2(const std::vector<Episode>& episodes,
                           const PromptBase& base, ParamStore& store,
                           const std::string& stage1_ckpt,
                           const std::string& ckpt_path,
                           std::ostream* log_out = nullptr);

  // Greedy rollouts over `eval_episodes` aggregated into one report.
  MetricReport evaluate(const std::vector<Episode>& eval_episodes,
                        const PromptBase* base, ParamStore& store,
                        const std::string& split_name);

  // Provenance header stored in every checkpoint this trainer writes.
  nlohmann::json checkpoint_meta(int stage, int iter, double spl,
                                 const PromptBase* base) const;

  // Throws std::runtime_error unless `meta` matches this trainer's dims,
  // encoder spec, and vocabulary (and `base`'s encoder spec when given).
  void check_compatible(const nlohmann::json& meta,
                        const PromptBase* base) const;

 private:
  struct SplitEpisodes {
    std::vector<Episode> train;
    std::vector<Episode> val;
    std::string val_name;
  };
  SplitEpisodes split_episodes(const std::vector<Episode>& episodes) const;

  TrainResult run(const SplitEpisodes& eps, const PromptBase* base, double lr,
                  int iters, int stage, ParamStore& store,
                  const std::string& ckpt_path, std::ostream* log_out);

  const RetrievedPromptSet& retrieved_for(const Episode& ep,
                                          const PromptBase& base);

  TrainConfig cfg_;
  ModelDims dims_;
  const TokenVocab* vocab_;
  WorldStore* worlds_;
  const DualEncoder* encoder_;
  Rng rng_;
  std::map<std::pair<uint64_t, int64_t>, RetrievedPromptSet> retrieval_cache_;
};

}  // namespace adaptnav
