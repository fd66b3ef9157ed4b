#include "adaptnav/train/train.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "adaptnav/nn/checkpoint.hpp"

namespace adaptnav {

TrainConfig TrainConfig::from_config(const Config& cfg) {
  TrainConfig tc;
  tc.batch_size = cfg.train.batch_size;
  tc.stage1_lr = cfg.train.stage1_lr;
  tc.stage2_lr = cfg.train.stage2_lr;
  tc.stage1_iters = cfg.train.stage1_iters;
  tc.stage2_iters = cfg.train.stage2_iters;
  tc.eval_every = cfg.train.eval_every;
  tc.early_stop_evals = cfg.train.early_stop_evals;
  tc.il_per_rl = cfg.train.il_per_rl;
  tc.seed = cfg.train.seed;
  tc.weight_decay = cfg.train.weight_decay;
  tc.n_max = cfg.prompt.nmax;
  tc.max_steps = cfg.model.max_steps;
  tc.loss = LossConfig::from_config(cfg);
  tc.validate();
  return tc;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train: batch_size < 1");
  if (stage1_lr <= 0 || stage2_lr <= 0)
    throw std::invalid_argument("train: learning rates must be positive");
  if (stage1_iters < 0 || stage2_iters < 0)
    throw std::invalid_argument("train: negative iteration budget");
  if (eval_every < 1) throw std::invalid_argument("train: eval_every < 1");
  if (early_stop_evals < 0)
    throw std::invalid_argument("train: early_stop_evals < 0");
  if (il_per_rl < 0) throw std::invalid_argument("train: il_per_rl < 0");
  if (weight_decay < 0) throw std::invalid_argument("train: weight_decay < 0");
  if (n_max < 1) throw std::invalid_argument("train: n_max < 1");
  if (max_steps < 1) throw std::invalid_argument("train: max_steps < 1");
  loss.validate();
}

nlohmann::json TrainLogEntry::to_json() const {
  return nlohmann::json{{"iter", iter},
                        {"L_RL", l_rl},
                        {"L_IL", l_il},
                        {"L_c", l_c},
                        {"L_a", l_a},
                        {"total", total},
                        {"pass", pass == TrainPass::kIl ? "IL" : "RL"}};
}

Trainer::Trainer(TrainConfig cfg, ModelDims dims, const TokenVocab* vocab,
                 WorldStore* worlds, const DualEncoder* encoder)
    : cfg_(std::move(cfg)),
      dims_(dims),
      vocab_(vocab),
      worlds_(worlds),
      encoder_(encoder),
      rng_(seed_combine(cfg_.seed, hash_str("trainer"))) {
  cfg_.validate();
  dims_.validate();
  if (vocab_ == nullptr || worlds_ == nullptr || encoder_ == nullptr)
    throw std::invalid_argument("trainer: null dependency");
}

Trainer::SplitEpisodes Trainer::split_episodes(
    const std::vector<Episode>& episodes) const {
  SplitEpisodes out;
  std::vector<Episode> val_seen;
  for (const auto& ep : episodes) {
    if (ep.split == "train")
      out.train.push_back(ep);
    else if (ep.split == "val_unseen")
      out.val.push_back(ep);
    else if (ep.split == "val_seen")
      val_seen.push_back(ep);
  }
  out.val_name = "val_unseen";
  if (out.val.empty()) {
    out.val = std::move(val_seen);
    out.val_name = "val_seen";
  }
  if (out.train.empty())
    throw std::invalid_argument("trainer: no training episodes");
  if (out.val.empty())
    throw std::invalid_argument("trainer: no validation episodes");
  return out;
}

const RetrievedPromptSet& Trainer::retrieved_for(const Episode& ep,
                                                 const PromptBase& base) {
  auto key = std::make_pair(ep.world_seed, ep.id);
  auto it = retrieval_cache_.find(key);
  if (it != retrieval_cache_.end()) return it->second;
  RetrievedPromptSet set = retrieve_prompts(
      ep.instruction, base, worlds_->params().vocabs, *encoder_, cfg_.n_max);
  return retrieval_cache_.emplace(key, std::move(set)).first->second;
}

nlohmann::json Trainer::checkpoint_meta(int stage, int iter, double spl,
                                        const PromptBase* base) const {
  return nlohmann::json{
      {"stage", stage},
      {"iter", iter},
      {"spl", spl},
      {"seed", cfg_.seed},
      {"encoder_spec", encoder_->spec()},
      {"base_spec", base != nullptr ? base->encoder_spec : ""},
      {"vocab_size", vocab_->size()},
      {"dims",
       {{"hidden", dims_.hidden},
        {"heads", dims_.heads},
        {"layers", dims_.layers},
        {"ffn_mult", dims_.ffn_mult},
        {"enc_dim", dims_.enc_dim},
        {"feat_dim", dims_.feat_dim},
        {"max_tokens", dims_.max_tokens},
        {"dropout", dims_.dropout}}}};
}

void Trainer::check_compatible(const nlohmann::json& meta,
                               const PromptBase* base) const {
  auto fail = [](const std::string& what) {
    throw std::runtime_error("checkpoint provenance mismatch: " + what);
  };
  if (!meta.contains("dims") || !meta.contains("encoder_spec") ||
      !meta.contains("vocab_size"))
    fail("missing provenance fields");
  const auto& d = meta["dims"];
  if (d.value("hidden", -1) != dims_.hidden ||
      d.value("heads", -1) != dims_.heads ||
      d.value("layers", -1) != dims_.layers ||
      d.value("ffn_mult", -1) != dims_.ffn_mult ||
      d.value("enc_dim", -1) != dims_.enc_dim ||
      d.value("feat_dim", -1) != dims_.feat_dim ||
      d.value("max_tokens", -1) != dims_.max_tokens)
    fail("model dimensions differ");
  if (meta["encoder_spec"].get<std::string>() != encoder_->spec())
    fail("encoder spec differs (checkpoint: " +
         meta["encoder_spec"].get<std::string>() + ", trainer: " +
         encoder_->spec() + ")");
  if (meta["vocab_size"].get<int>() != vocab_->size())
    fail("vocabulary size differs");
  if (base != nullptr && base->encoder_spec != encoder_->spec())
    fail("prompt base encoder spec differs (base: " + base->encoder_spec +
         ", trainer: " + encoder_->spec() + ")");
}

MetricReport Trainer::evaluate(const std::vector<Episode>& eval_episodes,
                               const PromptBase* base, ParamStore& store,
                               const std::string& split_name) {
  if (eval_episodes.empty())
    throw std::invalid_argument("evaluate: no episodes");
  AgentModel model(dims_, vocab_, &store);
  ForwardOptions opts;  // eval mode: no dropout, frozen parameter snapshot
  std::vector<EpisodeResult> results;
  for (const auto& ep : eval_episodes) {
    const NavGraph& world = worlds_->get(ep.world_seed);
    const RetrievedPromptSet* rps =
        base != nullptr ? &retrieved_for(ep, *base) : nullptr;
    Graph g(false);
    auto ro = model.rollout(g, world, ep, rps, base, RolloutMode::kGreedy,
                            cfg_.max_steps, nullptr, opts);
    EpisodeResult r;
    r.predicted = ro.nodes;
    r.reference = ep.path;
    r.graph = &world;
    r.d_th = cfg_.loss.success_radius;
    results.push_back(std::move(r));
  }
  return aggregate(results, split_name);
}

TrainResult Trainer::run(const SplitEpisodes& eps, const PromptBase* base,
                         double lr, int iters, int stage, ParamStore& store,
                         const std::string& ckpt_path, std::ostream* log_out) {
  AgentModel model(dims_, vocab_, &store);
  const bool prompts_on = base != nullptr;
  TrainResult result;
  int evals_since_best = 0;

  auto run_eval = [&](int iter) {
    MetricReport rep = evaluate(eps.val, base, store, eps.val_name);
    if (rep.spl > result.best_spl) {
      result.best_spl = rep.spl;
      result.best_iter = iter;
      result.best_report = rep;
      evals_since_best = 0;
      if (!ckpt_path.empty()) {
        std::string tmp = ckpt_path + ".tmp";
        nn::save_checkpoint(tmp, store,
                            checkpoint_meta(stage, iter, rep.spl, base));
        std::filesystem::rename(tmp, ckpt_path);
      }
    } else {
      ++evals_since_best;
    }
  };

  const int cycle = cfg_.il_per_rl + 1;
  for (int iter = 1; iter <= iters; ++iter) {
    TrainPass pass = (iter - 1) % cycle < cfg_.il_per_rl ? TrainPass::kIl
                                                         : TrainPass::kRl;
    TrainLogEntry entry;
    store.zero_grad();
    std::vector<const Episode*> batch;
    for (int b = 0; b < cfg_.batch_size; ++b)
      batch.push_back(&eps.train[rng_.uniform_int(eps.train.size())]);

    ForwardOptions opts{true, &rng_};
    double sum_rl = 0, sum_il = 0, sum_c = 0, la_val = 0;
    auto diverged = [iter](const char* what) {
      std::ostringstream msg;
      msg << "training diverged: invalid value at iter " << iter << " ("
          << what << ")";
      return std::runtime_error(msg.str());
    };
    try {
    for (const Episode* ep : batch) {
      const NavGraph& world = worlds_->get(ep->world_seed);
      const RetrievedPromptSet* rps =
          prompts_on ? &retrieved_for(*ep, *base) : nullptr;
      Graph g;
      auto ro = model.rollout(
          g, world, *ep, rps, base,
          pass == TrainPass::kIl ? RolloutMode::kTeacher : RolloutMode::kSample,
          cfg_.max_steps, &rng_, opts);

      Var l_rl, l_il, l_c;
      if (pass == TrainPass::kIl) {
        l_il = imitation_loss(g, ro.steps);
      } else {
        auto rewards = progress_rewards(world, ro.nodes, ro.stopped,
                                        ep->path.back(), cfg_.loss);
        l_rl =
            rl_loss(g, ro.steps, discounted_returns(rewards, cfg_.loss.rl_gamma));
      }
      if (prompts_on && cfg_.loss.lambda2 > 0)
        l_c = sequential_consistency_loss(g, ro.steps);

      Var ep_total = total_loss(g, l_rl, l_il, l_c, Var(), cfg_.loss, pass);
      g.backward(g.scale(ep_total, 1.0 / cfg_.batch_size));
      if (l_rl.valid()) sum_rl += l_rl.scalar();
      if (l_il.valid()) sum_il += l_il.scalar();
      if (l_c.valid()) sum_c += l_c.scalar();
    }

    // The alignment loss needs cross-episode negatives, so it runs on its
    // own graph over the whole batch; gradient accumulation is additive, so
    // this equals differentiating one joint batch objective.
    if (pass == TrainPass::kIl && prompts_on && cfg_.loss.lambda3 > 0) {
      Graph ga;
      std::vector<Var> img_rows, txt_rows;
      std::vector<int> group;
      for (size_t bi = 0; bi < batch.size(); ++bi) {
        const RetrievedPromptSet& rps = retrieved_for(*batch[bi], *base);
        if (rps.valid_count() == 0) continue;
        auto pe = model.encode_prompts(ga, rps, *base, opts);
        for (int i = 0; i < pe.n; ++i) {
          if (!rps.valid[i]) continue;
          img_rows.push_back(ga.slice_rows(pe.img, i, 1));
          txt_rows.push_back(ga.slice_rows(pe.txt, i, 1));
          group.push_back(static_cast<int>(bi));
        }
      }
      if (!group.empty()) {
        Var la = modality_alignment_loss(ga, ga.concat_rows(img_rows),
                                         ga.concat_rows(txt_rows), group,
                                         cfg_.loss.tau2);
        la_val = la.scalar();
        ga.backward(ga.scale(la, cfg_.loss.lambda3));
      }
    }
    } catch (const std::domain_error& e) {
      // A saturated action distribution surfaces as a log-domain error long
      // before the batch total reads as NaN; both mean the run diverged.
      throw diverged(e.what());
    } catch (const std::runtime_error& e) {
      throw diverged(e.what());  // non-finite loss caught inside backward
    }

    entry.iter = iter;
    entry.pass = pass;
    entry.l_rl = sum_rl / cfg_.batch_size;
    entry.l_il = sum_il / cfg_.batch_size;
    entry.l_c = sum_c / cfg_.batch_size;
    entry.l_a = la_val;
    entry.total =
        total_loss(entry.l_rl, entry.l_il, entry.l_c, entry.l_a, cfg_.loss, pass);
    if (!std::isfinite(entry.total)) {
      std::ostringstream msg;
      msg << "training diverged: non-finite loss at iter " << iter
          << " (L_RL=" << entry.l_rl << ", L_IL=" << entry.l_il
          << ", L_c=" << entry.l_c << ", L_a=" << entry.l_a << ")";
      throw std::runtime_error(msg.str());
    }
    store.adamw_step(lr, 0.9, 0.999, 1e-8, cfg_.weight_decay);

    result.log.push_back(entry);
    if (log_out != nullptr) *log_out << entry.to_json().dump() << '\n';
    result.iters_run = iter;

    if (iter % cfg_.eval_every == 0 || iter == iters) {
      run_eval(iter);
      if (cfg_.early_stop_evals > 0 &&
          evals_since_best >= cfg_.early_stop_evals) {
        result.early_stopped = true;
        break;
      }
    }
  }
  if (result.best_iter == -1) run_eval(0);  // zero-iteration run: still score
  return result;
}

TrainResult Trainer::train_stage1(const std::vector<Episode>& episodes,
                                  ParamStore& store,
                                  const std::string& ckpt_path,
                                  std::ostream* log_out) {
  if (store.parameter_count() != 0)
    throw std::invalid_argument("stage 1 requires an empty parameter store");
  Rng init_rng(seed_combine(cfg_.seed, hash_str("init")));
  AgentModel::init_params(dims_, vocab_->size(), store, init_rng);
  SplitEpisodes eps = split_episodes(episodes);
  return run(eps, nullptr, cfg_.stage1_lr, cfg_.stage1_iters, 1, store,
             ckpt_path, log_out);
}

TrainResult Trainer::train_stage2(const std::vector<Episode>& episodes,
                                  const PromptBase& base, ParamStore& store,
                                  const std::string& stage1_ckpt,
                                  const std::string& ckpt_path,
                                  std::ostream* log_out) {
  nlohmann::json meta = nn::load_checkpoint(stage1_ckpt, store);
  check_compatible(meta, &base);
  SplitEpisodes eps = split_episodes(episodes);
  return run(eps, &base, cfg_.stage2_lr, cfg_.stage2_iters, 2, store,
             ckpt_path, log_out);
}

}  // namespace adaptnav
