#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "prokd/corpus/corpus.hpp"

namespace prokd::model {

// Token inventory shared by both languages. Index 0 is PAD (window padding),
// index 1 is UNK (out-of-vocabulary tokens).
class Vocabulary {
 public:
  static constexpr std::size_t pad = 0;
  static constexpr std::size_t unk = 1;

  Vocabulary();
  // Adds every token of the corpora in order of first appearance.
  static Vocabulary from_corpora(std::initializer_list<const corpus::Corpus*> corpora);

  std::size_t add(const std::string& token);
  std::size_t index(std::string_view token) const;  // unk if absent
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace prokd::model
