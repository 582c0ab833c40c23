#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "prokd/corpus/label_scheme.hpp"

namespace prokd::corpus {

enum class Split { train, dev, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// A sentence of atomic tokens. `labels` is empty for unlabeled text and
// otherwise holds one tag index per token.
struct Sentence {
  std::vector<std::string> tokens;
  std::string language;
  std::vector<int> labels;

  std::size_t size() const noexcept { return tokens.size(); }
  bool labeled() const noexcept { return !labels.empty(); }

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Corpus {
  std::string language;
  Split split = Split::train;
  std::vector<Sentence> sentences;

  std::size_t size() const noexcept { return sentences.size(); }
  std::size_t token_count() const noexcept;
  // Number of B- tags; equals the entity count for BIO-consistent labels.
  std::size_t entity_count(const LabelScheme& scheme) const;
  bool labeled() const noexcept;
  // Copy with every label sequence removed.
  Corpus without_labels() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct BioViolation {
  std::size_t position;
  int tag;
  std::string reason;
};

// Empty iff the sequence is BIO-consistent: every I-t follows B-t or I-t.
std::vector<BioViolation> validate_bio(std::span<const int> labels, const LabelScheme& scheme);

// Rewrites each dangling I-t to B-t; returns the number of repairs.
std::size_t repair_bio(std::vector<int>& labels, const LabelScheme& scheme);

}  // namespace prokd::corpus
