#include "adaptnav/core/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_set>

namespace adaptnav {

bool Vocabularies::is_object(const std::string& token) const {
  return std::find(objects.begin(), objects.end(), token) != objects.end();
}

bool Vocabularies::is_verb(const std::string& token) const {
  return std::find(verbs.begin(), verbs.end(), token) != verbs.end();
}

int Vocabularies::object_index(const std::string& token) const {
  auto it = std::find(objects.begin(), objects.end(), token);
  return it == objects.end() ? -1 : static_cast<int>(it - objects.begin());
}

void Vocabularies::validate() const {
  if (objects.empty()) throw std::invalid_argument("vocab: empty object set");
  if (verbs.empty()) throw std::invalid_argument("vocab: empty verb set");
  std::unordered_set<std::string> seen(objects.begin(), objects.end());
  if (seen.size() != objects.size())
    throw std::invalid_argument("vocab: duplicate object word");
  for (const auto& v : verbs) {
    if (seen.count(v))
      throw std::invalid_argument("vocab: '" + v + "' in both sets");
  }
}

Vocabularies Vocabularies::default_synthetic() {
  Vocabularies v;
  v.objects = {"kitchen", "bedroom",   "hallway", "bathroom", "office",
               "library", "balcony",   "closet",  "staircase", "lounge",
               "pantry",  "studio",    "garage",  "attic",     "cellar",
               "porch",   "chair",     "table",   "sofa",      "window",
               "mirror",  "plant",     "lamp",    "shelf"};
  v.verbs = {"walk", "go",   "enter",    "exit", "stop",
             "head", "move", "approach", "pass", "leave"};
  return v;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> tokenize_sentences(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> sent;
  std::string cur;
  auto flush_token = [&] {
    if (!cur.empty()) {
      sent.push_back(cur);
      cur.clear();
    }
  };
  auto flush_sentence = [&] {
    flush_token();
    if (!sent.empty()) {
      out.push_back(sent);
      sent.clear();
    }
  };
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (ch == '.' || ch == '!' || ch == '?') {
      flush_sentence();
    } else {
      flush_token();
    }
  }
  flush_sentence();
  return out;
}

TokenVocab::TokenVocab(const Vocabularies& vocabs) {
  tokens_ = {"<pad>", "<unk>", "<cls>", "<sep>"};
  const std::vector<std::string> connectives = {
      "the", "a",  "to",   "into", "toward", "through", "out",
      "of",  "at", "past", "then", "and",    "photo",   "by"};
  for (const auto& t : connectives) tokens_.push_back(t);
  for (const auto& t : vocabs.verbs) tokens_.push_back(t);
  for (const auto& t : vocabs.objects) tokens_.push_back(t);
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) {
    if (!ids_.emplace(tokens_[i], i).second)
      throw std::invalid_argument("token vocab: duplicate token " + tokens_[i]);
  }
}

int TokenVocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> TokenVocab::encode(const std::string& text) const {
  std::vector<int> out;
  for (const auto& t : tokenize(text)) out.push_back(id(t));
  return out;
}

}  // namespace adaptnav
