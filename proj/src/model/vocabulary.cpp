#include "prokd/model/vocabulary.hpp"

namespace prokd::model {

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

Vocabulary Vocabulary::from_corpora(std::initializer_list<const corpus::Corpus*> corpora) {
  Vocabulary v;
  for (const auto* c : corpora)
    for (const auto& s : c->sentences)
      for (const auto& t : s.tokens) v.add(t);
  return v;
}

std::size_t Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::size_t Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

}  // namespace prokd::model
