#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "prokd/corpus/corpus.hpp"
#include "prokd/error.hpp"

namespace prokd::corpus {

struct ConllIssue {
  std::size_t line;  // 1-based
  std::string message;
};

// All problems found in one input, each with its line number.
class ConllError : public Error {
 public:
  explicit ConllError(std::vector<ConllIssue> issues);
  const std::vector<ConllIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConllIssue> issues_;
};

struct ConllOptions {
  // Sentences longer than this are split into several sentences.
  std::size_t max_length = 64;
  // Rewrite dangling I-t to B-t instead of rejecting the input.
  bool lenient = false;
  // Unlabeled input has one token per line and no tag column.
  bool labeled = true;
  // Empty: take the language from the file header line, if any.
  std::string language;
  Split split = Split::train;
};

// Lines are "token <whitespace> ... tag" (the last column is the tag), blank
// lines separate sentences and lines starting with -DOCSTART- are skipped.
Corpus parse_conll(std::istream& in, const LabelScheme& scheme, const ConllOptions& options = {});
Corpus read_conll_file(const std::string& path, const LabelScheme& scheme, const ConllOptions& options = {});

// Writes a versioned header line, then one "token tag" line per token (just
// the token for unlabeled sentences) and a blank line after each sentence.
void write_conll(std::ostream& out, const Corpus& corpus, const LabelScheme& scheme);
void write_conll_file(const std::string& path, const Corpus& corpus, const LabelScheme& scheme);

}  // namespace prokd::corpus
