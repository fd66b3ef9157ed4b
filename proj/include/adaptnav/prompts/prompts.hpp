#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adaptnav/core/vocab.hpp"
#include "adaptnav/encoders/encoders.hpp"
#include "adaptnav/world/world.hpp"

namespace adaptnav {

// A verb+object span extracted from an instruction sentence.
struct ActionPhrase {
  std::string verb;
  std::string object;
  std::string phrase;  // tokens from the verb through the object word
};

// An aligned (image sub-prompt, text sub-prompt) pair collected from one
// training episode.
struct ActionPrompt {
  std::string phrase;
  std::string verb;
  std::string object;
  int64_t episode_id = 0;
  std::string view_ref;     // "<world_seed>:<node_id>:<view_index>"
  Eigen::VectorXd img_emb;  // unit-norm, frozen
  Eigen::VectorXd txt_emb;  // unit-norm, frozen
};

struct PromptBase {
  std::vector<ActionPrompt> prompts;
  std::string encoder_spec;  // provenance: which encoder produced embeddings
  int skipped = 0;           // phrases dropped for missing sub-path annotation
};

// Up to n_max retrieved prompts; `base_index[i] == -1` marks a padded slot.
struct RetrievedPromptSet {
  int n_max = 0;
  std::vector<int> base_index;
  std::vector<char> valid;

  int valid_count() const;
};

// One entry per object-word occurrence that has a verb before it in the same
// sentence; the verb is the nearest preceding one.
std::vector<ActionPhrase> extract_action_phrases(const std::string& instruction,
                                                 const Vocabularies& vocabs);

// Precomputed "a photo of {label}" embeddings for the full object vocabulary.
struct ClassEmbeddings {
  std::vector<std::string> labels;
  Eigen::MatrixXd embs;  // one row per label, unit-norm
};
ClassEmbeddings compute_class_embeddings(const DualEncoder& encoder,
                                         const Vocabularies& vocabs);

// Scores every view against the label's phrase embedding; returns the
// raw-cosine argmax (ties -> lowest index) plus the selected view's
// class-probability vector softmax(sim/tau1) over the vocabulary.
std::pair<int, Eigen::VectorXd> select_image_subprompt(
    const std::vector<const ViewImage*>& path_views, const std::string& label,
    const DualEncoder& encoder, const ClassEmbeddings& classes, double tau1);

// Collects one prompt per extracted phrase of every training episode; image
// sub-prompts come only from views along the object's annotated sub-path.
PromptBase build_prompt_base(const std::vector<Episode>& episodes,
                             WorldStore& store, const Vocabularies& vocabs,
                             const DualEncoder& encoder, double tau1);

// Per-phrase cosine ranking over text sub-prompts, merged round-robin across
// phrases, deduplicated, padded to n_max.
RetrievedPromptSet retrieve_prompts(const std::string& instruction,
                                    const PromptBase& base,
                                    const Vocabularies& vocabs,
                                    const DualEncoder& encoder, int n_max);

std::string prompt_base_to_jsonl(const PromptBase& base);
PromptBase prompt_base_from_jsonl(const std::string& text);

// Recomputes every stored embedding from its phrase/view and compares;
// throws std::runtime_error on mismatch beyond f32 quantization error.
void validate_prompt_base(const PromptBase& base, WorldStore& store,
                          const DualEncoder& encoder);

}  // namespace adaptnav
