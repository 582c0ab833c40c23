#include "prokd/corpus/conll.hpp"

#include <fstream>
#include <sstream>

namespace prokd::corpus {

namespace {

constexpr const char* kHeader = "-DOCSTART- prokd-conll v1";

std::string describe(const std::vector<ConllIssue>& issues) {
  std::ostringstream os;
  os << issues.size() << " problem(s) in CoNLL input";
  for (const auto& i : issues) os << "\n  line " << i.line << ": " << i.message;
  return os.str();
}

struct PendingSentence {
  Sentence sentence;
  std::vector<std::size_t> lines;
};

// Split at the last position <= max_length that does not start inside an
// entity; fall back to a hard cut (continuation re-tagged B-t) for entities
// longer than max_length.
void emit(PendingSentence& pending, std::size_t max_length, const LabelScheme& scheme,
          std::vector<Sentence>& out) {
  Sentence& s = pending.sentence;
  std::size_t start = 0;
  while (s.tokens.size() - start > max_length) {
    std::size_t cut = start + max_length;
    if (s.labeled()) {
      std::size_t c = cut;
      while (c > start && scheme.is_inside(s.labels[c])) --c;
      if (c > start) cut = c;
    }
    Sentence piece;
    piece.language = s.language;
    piece.tokens.assign(s.tokens.begin() + start, s.tokens.begin() + cut);
    if (s.labeled()) piece.labels.assign(s.labels.begin() + start, s.labels.begin() + cut);
    out.push_back(std::move(piece));
    start = cut;
    if (s.labeled() && scheme.is_inside(s.labels[start]))
      s.labels[start] = scheme.begin_of(scheme.type_of(s.labels[start]));
  }
  Sentence rest;
  rest.language = s.language;
  rest.tokens.assign(s.tokens.begin() + start, s.tokens.end());
  if (s.labeled()) rest.labels.assign(s.labels.begin() + start, s.labels.end());
  out.push_back(std::move(rest));
}

}  // namespace

ConllError::ConllError(std::vector<ConllIssue> issues)
    : Error("corpus", describe(issues)), issues_(std::move(issues)) {}

Corpus parse_conll(std::istream& in, const LabelScheme& scheme, const ConllOptions& options) {
  if (options.max_length == 0) throw Error("corpus", "max_length must be positive");
  Corpus corpus;
  corpus.split = options.split;
  corpus.language = options.language;
  std::vector<ConllIssue> issues;
  PendingSentence pending;

  auto finish = [&]() {
    if (pending.sentence.tokens.empty()) return;
    if (options.labeled) {
      if (options.lenient) {
        repair_bio(pending.sentence.labels, scheme);
      } else {
        for (const auto& v : validate_bio(pending.sentence.labels, scheme))
          issues.push_back({pending.lines[v.position], "BIO violation: " + v.reason});
      }
    }
    pending.sentence.language = corpus.language;
    emit(pending, options.max_length, scheme, corpus.sentences);
    pending = PendingSentence{};
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("-DOCSTART-", 0) == 0) {
      std::istringstream hs(line);
      std::string field;
      while (hs >> field) {
        if (field.rfind("language=", 0) == 0 && options.language.empty()) corpus.language = field.substr(9);
      }
      continue;
    }
    std::istringstream ls(line);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(std::move(f));
    if (fields.empty()) {
      finish();
      continue;
    }
    pending.sentence.tokens.push_back(fields.front());
    pending.lines.push_back(lineno);
    if (!options.labeled) continue;
    if (fields.size() < 2) {
      issues.push_back({lineno, "missing tag column for token '" + fields.front() + "'"});
      pending.sentence.labels.push_back(LabelScheme::outside);
      continue;
    }
    auto tag = scheme.index(fields.back());
    if (!tag) {
      issues.push_back({lineno, "unknown tag '" + fields.back() + "'"});
      pending.sentence.labels.push_back(LabelScheme::outside);
      continue;
    }
    pending.sentence.labels.push_back(*tag);
  }
  finish();
  if (!issues.empty()) throw ConllError(std::move(issues));
  if (corpus.language.empty()) corpus.language = "unknown";
  for (auto& s : corpus.sentences) s.language = corpus.language;
  return corpus;
}

Corpus read_conll_file(const std::string& path, const LabelScheme& scheme, const ConllOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("corpus", "cannot open " + path);
  return parse_conll(in, scheme, options);
}

void write_conll(std::ostream& out, const Corpus& corpus, const LabelScheme& scheme) {
  out << kHeader << " language=" << corpus.language << " split=" << to_string(corpus.split) << '\n';
  for (const auto& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.tokens[i];
      if (s.labeled()) out << ' ' << scheme.tag(s.labels[i]);
      out << '\n';
    }
    out << '\n';
  }
}

void write_conll_file(const std::string& path, const Corpus& corpus, const LabelScheme& scheme) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("corpus", "cannot write " + path);
  write_conll(out, corpus, scheme);
  if (!out) throw Error("corpus", "write failed for " + path);
}

}  // namespace prokd::corpus
