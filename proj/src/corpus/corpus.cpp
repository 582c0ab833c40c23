#include "prokd/corpus/corpus.hpp"

#include "prokd/error.hpp"

namespace prokd::corpus {

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw Error("corpus", "unknown split '" + s + "'");
}

std::size_t Corpus::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::size_t Corpus::entity_count(const LabelScheme& scheme) const {
  std::size_t n = 0;
  for (const auto& s : sentences)
    for (int t : s.labels) n += scheme.is_begin(t) ? 1 : 0;
  return n;
}

bool Corpus::labeled() const noexcept {
  if (sentences.empty()) return false;
  for (const auto& s : sentences)
    if (!s.labeled()) return false;
  return true;
}

Corpus Corpus::without_labels() const {
  Corpus c = *this;
  for (auto& s : c.sentences) s.labels.clear();
  return c;
}

std::vector<BioViolation> validate_bio(std::span<const int> labels, const LabelScheme& scheme) {
  std::vector<BioViolation> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i];
    if (!scheme.is_inside(t)) continue;
    if (i == 0) {
      out.push_back({i, t, scheme.tag(t) + " at sentence start"});
      continue;
    }
    const int prev = labels[i - 1];
    if (prev == LabelScheme::outside) {
      out.push_back({i, t, scheme.tag(t) + " after O"});
    } else if (scheme.type_of(prev) != scheme.type_of(t)) {
      out.push_back({i, t, scheme.tag(t) + " after " + scheme.tag(prev)});
    }
  }
  return out;
}

std::size_t repair_bio(std::vector<int>& labels, const LabelScheme& scheme) {
  std::size_t repaired = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i];
    if (!scheme.is_inside(t)) continue;
    const bool ok = i > 0 && labels[i - 1] != LabelScheme::outside &&
                    scheme.type_of(labels[i - 1]) == scheme.type_of(t);
    if (!ok) {
      labels[i] = scheme.begin_of(scheme.type_of(t));
      ++repaired;
    }
  }
  return repaired;
}

}  // namespace prokd::corpus
