#include "adaptnav/prompts/prompts.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "adaptnav/core/base64.hpp"
#include "adaptnav/core/log.hpp"

namespace adaptnav {

using nlohmann::json;

int RetrievedPromptSet::valid_count() const {
  int n = 0;
  for (char v : valid) n += (v != 0);
  return n;
}

std::vector<ActionPhrase> extract_action_phrases(const std::string& instruction,
                                                 const Vocabularies& vocabs) {
  std::vector<ActionPhrase> out;
  for (const auto& sent : tokenize_sentences(instruction)) {
    for (size_t j = 0; j < sent.size(); ++j) {
      if (!vocabs.is_object(sent[j])) continue;
      int verb_at = -1;
      for (size_t i = 0; i < j; ++i)
        if (vocabs.is_verb(sent[i])) verb_at = static_cast<int>(i);
      if (verb_at < 0) continue;  // object with no preceding verb
      ActionPhrase ap;
      ap.verb = sent[verb_at];
      ap.object = sent[j];
      std::string phrase;
      for (size_t k = verb_at; k <= j; ++k) {
        if (k > static_cast<size_t>(verb_at)) phrase += " ";
        phrase += sent[k];
      }
      ap.phrase = std::move(phrase);
      out.push_back(std::move(ap));
    }
  }
  return out;
}

ClassEmbeddings compute_class_embeddings(const DualEncoder& encoder,
                                         const Vocabularies& vocabs) {
  ClassEmbeddings ce;
  ce.labels = vocabs.objects;
  ce.embs.resize(static_cast<Eigen::Index>(ce.labels.size()), encoder.dim());
  for (size_t i = 0; i < ce.labels.size(); ++i)
    ce.embs.row(static_cast<Eigen::Index>(i)) =
        encoder.encode_text("a photo of " + ce.labels[i]).transpose();
  return ce;
}

std::pair<int, Eigen::VectorXd> select_image_subprompt(
    const std::vector<const ViewImage*>& path_views, const std::string& label,
    const DualEncoder& encoder, const ClassEmbeddings& classes, double tau1) {
  if (path_views.empty())
    throw std::invalid_argument("prompts: empty view sequence");
  if (tau1 <= 0) throw std::invalid_argument("prompts: tau1 must be > 0");
  auto it = std::find(classes.labels.begin(), classes.labels.end(), label);
  if (it == classes.labels.end())
    throw std::invalid_argument("prompts: unknown label '" + label + "'");
  Eigen::Index target = it - classes.labels.begin();

  int best = 0;
  double best_sim = -2.0;
  Eigen::VectorXd best_emb;
  for (size_t i = 0; i < path_views.size(); ++i) {
    Eigen::VectorXd emb = encoder.encode_image(*path_views[i]);
    double sim = cosine_similarity(emb, classes.embs.row(target).transpose());
    if (sim > best_sim) {  // strict: ties keep the lowest index
      best_sim = sim;
      best = static_cast<int>(i);
      best_emb = std::move(emb);
    }
  }
  // Class distribution of the selected image: softmax over sim/tau1.
  Eigen::VectorXd sims(classes.embs.rows());
  for (Eigen::Index c = 0; c < classes.embs.rows(); ++c)
    sims[c] = cosine_similarity(best_emb, classes.embs.row(c).transpose()) / tau1;
  double mx = sims.maxCoeff();
  Eigen::VectorXd probs = (sims.array() - mx).exp();
  probs /= probs.sum();
  return {best, probs};
}

PromptBase build_prompt_base(const std::vector<Episode>& episodes,
                             WorldStore& store, const Vocabularies& vocabs,
                             const DualEncoder& encoder, double tau1) {
  PromptBase base;
  base.encoder_spec = encoder.spec();
  ClassEmbeddings classes = compute_class_embeddings(encoder, vocabs);
  for (const auto& ep : episodes) {
    if (ep.split != "train")
      throw std::invalid_argument(
          "prompts: prompt base must be built from training episodes only");
    const NavGraph& graph = store.get(ep.world_seed);
    for (const auto& ap : extract_action_phrases(ep.instruction, vocabs)) {
      const SubPath* sp = ep.sub_path_for(ap.object);
      if (!sp) {
        ++base.skipped;
        log_warn("prompt base: episode " + std::to_string(ep.id) +
                 " has no sub-path for object '" + ap.object + "', skipped");
        continue;
      }
      // View pool: every view of every node along the annotated slice.
      std::vector<const ViewImage*> views;
      std::vector<std::pair<int, int>> refs;  // (node, view index)
      for (int i = sp->first; i <= sp->last; ++i) {
        const WorldNode& n = graph.node(ep.path[i]);
        for (size_t v = 0; v < n.panorama.size(); ++v) {
          views.push_back(&n.panorama[v]);
          refs.emplace_back(n.id, static_cast<int>(v));
        }
      }
      auto [sel, probs] =
          select_image_subprompt(views, ap.object, encoder, classes, tau1);
      (void)probs;
      ActionPrompt p;
      p.phrase = ap.phrase;
      p.verb = ap.verb;
      p.object = ap.object;
      p.episode_id = ep.id;
      p.view_ref = std::to_string(ep.world_seed) + ":" +
                   std::to_string(refs[sel].first) + ":" +
                   std::to_string(refs[sel].second);
      p.img_emb = encoder.encode_image(*views[sel]);
      p.txt_emb = encoder.encode_text(ap.phrase);
      base.prompts.push_back(std::move(p));
    }
  }
  return base;
}

RetrievedPromptSet retrieve_prompts(const std::string& instruction,
                                    const PromptBase& base,
                                    const Vocabularies& vocabs,
                                    const DualEncoder& encoder, int n_max) {
  if (n_max < 1) throw std::invalid_argument("prompts: n_max must be >= 1");
  RetrievedPromptSet set;
  set.n_max = n_max;
  set.base_index.assign(n_max, -1);
  set.valid.assign(n_max, 0);

  auto phrases = extract_action_phrases(instruction, vocabs);
  if (phrases.empty() || base.prompts.empty()) return set;

  // Per-phrase ranking of all base prompts by text-sub-prompt cosine.
  std::vector<std::vector<int>> rankings;
  for (const auto& ap : phrases) {
    Eigen::VectorXd q = encoder.encode_text(ap.phrase);
    std::vector<std::pair<double, int>> scored;
    scored.reserve(base.prompts.size());
    for (size_t i = 0; i < base.prompts.size(); ++i)
      scored.emplace_back(-cosine_similarity(q, base.prompts[i].txt_emb),
                          static_cast<int>(i));
    std::stable_sort(scored.begin(), scored.end());
    std::vector<int> order;
    order.reserve(scored.size());
    for (auto& [neg, idx] : scored) order.push_back(idx);
    rankings.push_back(std::move(order));
  }

  // Round-robin across phrases, deduplicating by base index.
  std::set<int> taken;
  int filled = 0;
  for (size_t depth = 0; filled < n_max && depth < base.prompts.size(); ++depth) {
    for (const auto& order : rankings) {
      if (filled >= n_max) break;
      int idx = order[depth];
      if (!taken.insert(idx).second) continue;
      set.base_index[filled] = idx;
      set.valid[filled] = 1;
      ++filled;
    }
  }
  return set;
}

std::string prompt_base_to_jsonl(const PromptBase& base) {
  std::ostringstream os;
  json header = {{"encoder_spec", base.encoder_spec}, {"skipped", base.skipped}};
  os << header.dump() << "\n";
  for (const auto& p : base.prompts) {
    json line = {{"phrase", p.phrase},
                 {"verb", p.verb},
                 {"object", p.object},
                 {"episode_id", p.episode_id},
                 {"view_ref", p.view_ref},
                 {"img_emb", encode_f32le(p.img_emb)},
                 {"txt_emb", encode_f32le(p.txt_emb)}};
    os << line.dump() << "\n";
  }
  return os.str();
}

PromptBase prompt_base_from_jsonl(const std::string& text) {
  PromptBase base;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("prompt base: bad json on line " +
                               std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("encoder_spec")) {  // header line
      base.encoder_spec = j.at("encoder_spec").get<std::string>();
      base.skipped = j.value("skipped", 0);
      continue;
    }
    ActionPrompt p;
    p.phrase = j.at("phrase").get<std::string>();
    p.verb = j.at("verb").get<std::string>();
    p.object = j.at("object").get<std::string>();
    p.episode_id = j.at("episode_id").get<int64_t>();
    p.view_ref = j.at("view_ref").get<std::string>();
    p.img_emb = decode_f32le(j.at("img_emb").get<std::string>());
    p.txt_emb = decode_f32le(j.at("txt_emb").get<std::string>());
    base.prompts.push_back(std::move(p));
  }
  return base;
}

void validate_prompt_base(const PromptBase& base, WorldStore& store,
                          const DualEncoder& encoder) {
  for (size_t i = 0; i < base.prompts.size(); ++i) {
    const ActionPrompt& p = base.prompts[i];
    std::istringstream ref(p.view_ref);
    std::string ws, node, view;
    if (!std::getline(ref, ws, ':') || !std::getline(ref, node, ':') ||
        !std::getline(ref, view, ':'))
      throw std::runtime_error("prompt base: malformed view_ref " + p.view_ref);
    const NavGraph& g = store.get(std::stoull(ws));
    const ViewImage& v = g.node(std::stoi(node)).panorama.at(std::stoul(view));
    if ((encoder.encode_image(v) - p.img_emb).cwiseAbs().maxCoeff() > 1e-6)
      throw std::runtime_error("prompt base: image embedding at line " +
                               std::to_string(i + 1) +
                               " not regenerable with this encoder");
    if ((encoder.encode_text(p.phrase) - p.txt_emb).cwiseAbs().maxCoeff() > 1e-6)
      throw std::runtime_error("prompt base: text embedding at line " +
                               std::to_string(i + 1) +
                               " not regenerable with this encoder");
  }
}

}  // namespace adaptnav
