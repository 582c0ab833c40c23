#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "prokd/corpus/corpus.hpp"
#include "prokd/diffcore/tensor.hpp"
#include "prokd/model/ner_model.hpp"

namespace prokd::train {

// Frozen teacher probabilities for every token of a target corpus.
struct TeacherSnapshot {
  diff::Tensor probs;                         // tokens x tags, corpus order
  std::vector<std::uint64_t> sentence_lengths;  // corpus positions

  std::size_t tokens() const { return probs.rows(); }
  std::size_t tags() const { return probs.cols(); }
  // Offset of sentence s in `probs`.
  std::vector<std::size_t> offsets() const;
  // Throws unless the snapshot lines up with the corpus sentence by sentence.
  void check_matches(const corpus::Corpus& corpus) const;
};

// Runs the teacher with dropout off over every sentence. Every corpus token
// must be in the teacher's vocabulary.
TeacherSnapshot snapshot_teacher(model::NerModel& teacher, const corpus::Corpus& target);

// Layout: "PROKD-SNAPSHOT v1\n", then little-endian uint64 token count, tag
// count, sentence count, the sentence lengths, and tokens x tags float64 rows.
void write_snapshot(std::ostream& out, const TeacherSnapshot& snap);
void write_snapshot_file(const std::string& path, const TeacherSnapshot& snap);
TeacherSnapshot read_snapshot(std::istream& in);
TeacherSnapshot read_snapshot_file(const std::string& path);

// 64-bit FNV-1a digest of a file's bytes.
std::uint64_t file_digest(const std::string& path);
// Digest of the serialized snapshot.
std::uint64_t snapshot_digest(const TeacherSnapshot& snap);

}  // namespace prokd::train
