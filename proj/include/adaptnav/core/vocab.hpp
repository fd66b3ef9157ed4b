#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace adaptnav {

// Object/location words (the M class labels used for retrieval) and verbs.
struct Vocabularies {
  std::vector<std::string> objects;
  std::vector<std::string> verbs;

  bool is_object(const std::string& token) const;
  bool is_verb(const std::string& token) const;
  int object_index(const std::string& token) const;  // -1 when absent

  // Throws when a set is empty or the sets overlap.
  void validate() const;

  static Vocabularies default_synthetic();
};

// Lowercases and splits on non-alphanumeric runs.
std::vector<std::string> tokenize(const std::string& text);

// Sentence-segmented tokens: sentences end at '.', '!' or '?'.
std::vector<std::vector<std::string>> tokenize_sentences(const std::string& text);

// Token-id table for the instruction encoder: fixed specials, then template
// connectives, verbs, objects. Unknown tokens map to kUnk.
class TokenVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;

  explicit TokenVocab(const Vocabularies& vocabs);

  int id(const std::string& token) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(id); }

  // Token ids for a raw string (no specials added).
  std::vector<int> encode(const std::string& text) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace adaptnav
