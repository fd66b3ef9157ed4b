#include "adaptnav/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "adaptnav/core/config.hpp"
#include "adaptnav/core/io.hpp"
#include "adaptnav/core/log.hpp"
#include "adaptnav/encoders/encoders.hpp"
#include "adaptnav/metrics/metrics.hpp"
#include "adaptnav/nn/checkpoint.hpp"
#include "adaptnav/prompts/prompts.hpp"
#include "adaptnav/train/train.hpp"
#include "adaptnav/world/world.hpp"

namespace adaptnav {
namespace {

Config load_config(const std::string& path) {
  Config cfg;
  if (!path.empty()) cfg.apply_file(path);
  cfg.validate();
  return cfg;
}

std::vector<Episode> load_episodes(const std::string& path) {
  auto eps = episodes_from_jsonl(read_file(path));
  if (eps.empty()) throw std::runtime_error("no episodes in " + path);
  return eps;
}

// val_unseen if present, else val_seen, else everything.
std::pair<std::vector<Episode>, std::string> pick_eval_split(
    const std::vector<Episode>& eps) {
  for (const char* split : {"val_unseen", "val_seen"}) {
    std::vector<Episode> subset;
    for (const Episode& e : eps)
      if (e.split == split) subset.push_back(e);
    if (!subset.empty()) return {subset, split};
  }
  return {eps, "all"};
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double denom = a.norm() * b.norm();
  if (denom == 0.0) return 0.0;
  return a.dot(b) / denom;
}

int cmd_gen_world(const std::string& config_path, uint64_t seed, bool seed_set,
                  const std::string& out) {
  Config cfg = load_config(config_path);
  if (!seed_set) seed = cfg.data.world_seed_base;
  Vocabularies vocabs = Vocabularies::default_synthetic();
  WorldParams wp = WorldParams::from_config(cfg, vocabs);
  NavGraph g = generate_world(seed, wp);
  atomic_write_file(out, graph_to_json(g));
  std::cout << "world seed=" << seed << " nodes=" << g.nodes.size() << " -> "
            << out << "\n";
  return 0;
}

int cmd_gen_episodes(const std::string& config_path, uint64_t seed,
                     bool seed_set, const std::string& out) {
  Config cfg = load_config(config_path);
  if (seed_set) cfg.data.episode_seed_base = seed;
  Vocabularies vocabs = Vocabularies::default_synthetic();
  WorldStore store(WorldParams::from_config(cfg, vocabs));
  std::vector<Episode> eps = generate_dataset(cfg, store);
  atomic_write_file(out, episodes_to_jsonl(eps));
  int train = 0, seen = 0, unseen = 0;
  for (const Episode& e : eps) {
    if (e.split == "train") ++train;
    else if (e.split == "val_seen") ++seen;
    else ++unseen;
  }
  std::cout << "episodes train=" << train << " val_seen=" << seen
            << " val_unseen=" << unseen << " -> " << out << "\n";
  return 0;
}

int cmd_build_prompt_base(const std::string& config_path,
                          const std::string& episodes_path, double tau1,
                          bool tau1_set, const std::string& out) {
  Config cfg = load_config(config_path);
  if (!tau1_set) tau1 = cfg.prompt.tau1;
  std::vector<Episode> eps = load_episodes(episodes_path);
  std::vector<Episode> train;
  for (const Episode& e : eps)
    if (e.split == "train") train.push_back(e);
  if (train.empty())
    throw std::runtime_error("no training episodes in " + episodes_path);
  Vocabularies vocabs = Vocabularies::default_synthetic();
  WorldStore store(WorldParams::from_config(cfg, vocabs));
  auto encoder = make_encoder(cfg, vocabs);
  PromptBase base = build_prompt_base(train, store, vocabs, *encoder, tau1);
  atomic_write_file(out, prompt_base_to_jsonl(base));
  std::cout << "prompt base: " << base.prompts.size() << " prompts (skipped "
            << base.skipped << " phrases) -> " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& episodes_path,
              int stage, const std::string& ckpt, const std::string& base_path,
              uint64_t seed, bool seed_set, const std::string& out) {
  Config cfg = load_config(config_path);
  if (seed_set) cfg.train.seed = seed;
  std::vector<Episode> eps = load_episodes(episodes_path);
  Vocabularies vocabs = Vocabularies::default_synthetic();
  WorldStore store(WorldParams::from_config(cfg, vocabs));
  auto encoder = make_encoder(cfg, vocabs);
  TokenVocab tv(vocabs);
  ModelDims dims = ModelDims::from_config(cfg);
  TrainConfig tc = TrainConfig::from_config(cfg);
  Trainer trainer(tc, dims, &tv, &store, encoder.get());

  std::ostringstream log_stream;
  ParamStore params;
  TrainResult result;
  if (stage == 1) {
    result = trainer.train_stage1(eps, params, out, &log_stream);
  } else {
    if (ckpt.empty())
      throw std::runtime_error("stage 2 requires --ckpt (stage-1 checkpoint)");
    if (base_path.empty())
      throw std::runtime_error("stage 2 requires --base (prompt base)");
    PromptBase base = prompt_base_from_jsonl(read_file(base_path));
    validate_prompt_base(base, store, *encoder);
    result = trainer.train_stage2(eps, base, params, ckpt, out, &log_stream);
  }
  atomic_write_file(out + ".log.jsonl", log_stream.str());
  std::cout << "stage " << stage << " done: iters=" << result.iters_run
            << " best_spl=" << result.best_spl
            << " best_iter=" << result.best_iter
            << " early_stopped=" << (result.early_stopped ? 1 : 0) << " -> "
            << out << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& ckpt,
             const std::string& episodes_path, const std::string& base_path,
             bool oracle, const std::string& out) {
  Config cfg = load_config(config_path);
  std::vector<Episode> eps = load_episodes(episodes_path);
  auto [eval_eps, split] = pick_eval_split(eps);
  Vocabularies vocabs = Vocabularies::default_synthetic();
  WorldStore store(WorldParams::from_config(cfg, vocabs));

  MetricReport report;
  if (oracle) {
    // Replay the reference paths: upper bound / plumbing check.
    std::vector<EpisodeResult> results;
    for (const Episode& e : eval_eps) {
      EpisodeResult r;
      r.predicted = e.path;
      r.reference = e.path;
      r.graph = &store.get(e.world_seed);
      r.d_th = cfg.metrics.success_radius;
      results.push_back(std::move(r));
    }
    report = aggregate(results, split);
  } else {
    if (ckpt.empty()) throw std::runtime_error("eval requires --ckpt");
    auto encoder = make_encoder(cfg, vocabs);
    TokenVocab tv(vocabs);
    ModelDims dims = ModelDims::from_config(cfg);
    TrainConfig tc = TrainConfig::from_config(cfg);
    Trainer trainer(tc, dims, &tv, &store, encoder.get());

    PromptBase base;
    const PromptBase* base_ptr = nullptr;
    if (!base_path.empty()) {
      base = prompt_base_from_jsonl(read_file(base_path));
      validate_prompt_base(base, store, *encoder);
      base_ptr = &base;
    }
    ParamStore params;
    nlohmann::json meta = load_checkpoint(ckpt, params);
    trainer.check_compatible(meta, base_ptr);
    report = trainer.evaluate(eval_eps, base_ptr, params, split);
  }
  if (!out.empty()) atomic_write_file(out, report.to_json().dump(2) + "\n");
  std::cout << "split=" << report.split << " n=" << report.n_episodes
            << " SR=" << report.sr << " SPL=" << report.spl
            << " nDTW=" << report.ndtw << " SDTW=" << report.sdtw
            << " NE=" << report.ne << " TL=" << report.tl
            << " CLS=" << report.cls << "\n";
  return 0;
}

int cmd_inspect_prompts(const std::string& config_path,
                        const std::string& base_path,
                        const std::string& instruction, int n_max,
                        bool nmax_set) {
  Config cfg = load_config(config_path);
  if (!nmax_set) n_max = cfg.prompt.nmax;
  Vocabularies vocabs = Vocabularies::default_synthetic();
  WorldStore store(WorldParams::from_config(cfg, vocabs));
  auto encoder = make_encoder(cfg, vocabs);
  PromptBase base = prompt_base_from_jsonl(read_file(base_path));
  std::cout << inspect_prompts_text(base, instruction, vocabs, *encoder, n_max,
                                    store);
  return 0;
}

}  // namespace

std::string inspect_prompts_text(const PromptBase& base,
                                 const std::string& instruction,
                                 const Vocabularies& vocabs,
                                 const DualEncoder& encoder, int n_max,
                                 WorldStore& worlds) {
  RetrievedPromptSet set =
      retrieve_prompts(instruction, base, vocabs, encoder, n_max);
  std::ostringstream out;
  int n = set.valid_count();
  if (n == 0) {
    out << "0 prompts retrieved\n";
    return out.str();
  }
  std::vector<ActionPhrase> phrases = extract_action_phrases(instruction, vocabs);
  std::vector<Eigen::VectorXd> queries;
  for (const ActionPhrase& ap : phrases)
    queries.push_back(encoder.encode_text(ap.phrase));

  out << n << " prompts retrieved for " << phrases.size()
      << " action phrases\n";
  int rank = 1;
  for (size_t i = 0; i < set.base_index.size(); ++i) {
    if (!set.valid[i]) continue;  // padded slots are omitted
    const ActionPrompt& p = base.prompts[static_cast<size_t>(set.base_index[i])];
    double sim = -1.0;
    for (const Eigen::VectorXd& q : queries)
      sim = std::max(sim, cosine(q, p.txt_emb));

    std::istringstream ref(p.view_ref);
    std::string ws, node, view;
    if (!std::getline(ref, ws, ':') || !std::getline(ref, node, ':') ||
        !std::getline(ref, view, ':'))
      throw std::runtime_error("malformed view_ref " + p.view_ref);
    const NavGraph& g = worlds.get(std::stoull(ws));
    const ViewImage& v =
        g.node(std::stoi(node)).panorama.at(std::stoul(view));
    out << std::setw(2) << rank << ". \"" << p.phrase << "\"  sim="
        << std::fixed << std::setprecision(3) << sim
        << "  episode=" << p.episode_id << "  view=" << p.view_ref
        << "  labels=[";
    for (size_t k = 0; k < v.labels.size(); ++k) {
      if (k) out << ", ";
      out << v.labels[k];
    }
    out << "]\n";
    out.unsetf(std::ios::fixed);
    ++rank;
  }
  return out.str();
}

int run_cli(std::vector<std::string> args) {
  CLI::App app{"synthetic vision-language navigation pipeline", "adapt-nav"};
  app.require_subcommand(1);

  std::string config_path, out, episodes_path, ckpt, base_path, instruction;
  uint64_t seed = 0;
  double tau1 = 0.07;
  int stage = 1, n_max = 60;
  bool oracle = false;

  auto* gw = app.add_subcommand("gen-world", "generate one navigation graph");
  gw->add_option("--config", config_path, "config file");
  auto* gw_seed = gw->add_option("--seed", seed, "world seed");
  gw->add_option("--out", out, "output JSON path")->required();

  auto* ge = app.add_subcommand("gen-episodes",
                                "generate the full episode dataset");
  ge->add_option("--config", config_path, "config file");
  auto* ge_seed = ge->add_option("--seed", seed, "episode seed base");
  ge->add_option("--out", out, "output JSONL path")->required();

  auto* bp = app.add_subcommand("build-prompt-base",
                                "collect action prompts from training episodes");
  bp->add_option("--config", config_path, "config file");
  bp->add_option("--episodes", episodes_path, "episodes JSONL")->required();
  auto* bp_tau = bp->add_option("--tau1", tau1, "retrieval temperature");
  bp->add_option("--out", out, "output JSONL path")->required();

  auto* tr = app.add_subcommand("train", "train an agent");
  tr->add_option("--config", config_path, "config file");
  tr->add_option("--episodes", episodes_path, "episodes JSONL")->required();
  tr->add_option("--stage", stage, "training stage")
      ->check(CLI::IsMember({1, 2}))
      ->required();
  tr->add_option("--ckpt", ckpt, "stage-1 checkpoint to resume from");
  tr->add_option("--base", base_path, "prompt base JSONL (stage 2)");
  auto* tr_seed = tr->add_option("--seed", seed, "training seed");
  tr->add_option("--out", out, "output checkpoint path")->required();

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--config", config_path, "config file");
  ev->add_option("--ckpt", ckpt, "checkpoint path");
  ev->add_option("--episodes", episodes_path, "episodes JSONL")->required();
  ev->add_option("--base", base_path, "prompt base JSONL");
  ev->add_option("--out", out, "metric report JSON path");
  ev->add_flag("--oracle", oracle, "replay reference paths (diagnostic)")
      ->group("");

  auto* ip = app.add_subcommand("inspect-prompts",
                                "show prompts retrieved for an instruction");
  ip->add_option("--config", config_path, "config file");
  ip->add_option("--base", base_path, "prompt base JSONL")->required();
  ip->add_option("--instruction", instruction, "instruction text")->required();
  auto* ip_nmax = ip->add_option("--nmax", n_max, "retrieval slot count");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
    if (gw->parsed())
      return cmd_gen_world(config_path, seed, gw_seed->count() > 0, out);
    if (ge->parsed())
      return cmd_gen_episodes(config_path, seed, ge_seed->count() > 0, out);
    if (bp->parsed())
      return cmd_build_prompt_base(config_path, episodes_path, tau1,
                                   bp_tau->count() > 0, out);
    if (tr->parsed())
      return cmd_train(config_path, episodes_path, stage, ckpt, base_path,
                       seed, tr_seed->count() > 0, out);
    if (ev->parsed())
      return cmd_eval(config_path, ckpt, episodes_path, base_path, oracle, out);
    if (ip->parsed())
      return cmd_inspect_prompts(config_path, base_path, instruction, n_max,
                                 ip_nmax->count() > 0);
    throw std::runtime_error("no subcommand given");
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace adaptnav
