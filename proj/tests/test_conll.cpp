#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <doctest.h>

#include "prokd/corpus/conll.hpp"
#include "prokd/corpus/synthetic.hpp"
#include "prokd/error.hpp"
#include "support.hpp"

using namespace prokd;
using namespace prokd::corpus;

namespace {

Corpus parse(const std::string& text, ConllOptions opt = {}) {
  std::istringstream in(text);
  return parse_conll(in, LabelScheme{}, opt);
}

std::vector<ConllIssue> issues_of(const std::string& text, ConllOptions opt = {}) {
  try {
    parse(text, opt);
  } catch (const ConllError& e) {
    return e.issues();
  }
  return {};
}

}  // namespace

TEST_SUITE("conll") {
  TEST_CASE("minimal well-formed input") {
    const auto c = parse("John B-PER\nruns O\n\n");
    REQUIRE(c.size() == 1);
    CHECK(c.token_count() == 2);
    CHECK(c.entity_count(LabelScheme{}) == 1);
    CHECK(c.sentences[0].tokens == std::vector<std::string>{"John", "runs"});
  }

  TEST_CASE("docstart lines are skipped and a final blank line is optional") {
    const auto c = parse("-DOCSTART- -X- O O\n\nEU B-ORG\nrejects O\n\nPeter B-PER\nBlackburn I-PER");
    REQUIRE(c.size() == 2);
    CHECK(c.sentences[1].labels == std::vector<int>{1, 2});
  }

  TEST_CASE("multi-column lines take the first and last column") {
    const auto c = parse("EU NNP B-NP B-ORG\nrejects VBZ B-VP O\n");
    CHECK(c.sentences[0].labels == std::vector<int>{5, 0});
  }

  TEST_CASE("strict mode rejects I-t at sentence start with its line number") {
    const auto issues = issues_of("John B-PER\n\nParis I-LOC\nis O\n");
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].line == 3);
  }

  TEST_CASE("every violation in a crafted error corpus is reported at its line") {
    const std::string text =
        "-DOCSTART- prokd-conll v1 language=en split=train\n"  // 1
        "Anna B-PER\n"                                          // 2
        "lives O\n"                                             // 3
        "in O\n"                                                // 4
        "Oslo I-LOC\n"                                          // 5
        "\n"                                                    // 6
        "Acme B-ORG\n"                                          // 7
        "Corp I-LOC\n"                                          // 8
        "\n"                                                    // 9
        "x O\n"                                                 // 10
        "y I-MISC\n"                                            // 11
        "z I-MISC\n"                                            // 12
        "w B-ZZZ\n";                                            // 13
    const auto issues = issues_of(text);
    REQUIRE(issues.size() == 4);
    std::vector<std::size_t> lines;
    for (const auto& i : issues) lines.push_back(i.line);
    std::sort(lines.begin(), lines.end());
    CHECK(lines == std::vector<std::size_t>{5, 8, 11, 13});
    bool unknown = false;
    for (const auto& i : issues) unknown = unknown || (i.line == 13 && i.message.find("unknown tag") != std::string::npos);
    CHECK(unknown);
  }

  TEST_CASE("lenient mode repairs dangling I-t") {
    ConllOptions opt;
    opt.lenient = true;
    const auto c = parse("Paris I-LOC\nis O\n", opt);
    CHECK(c.sentences[0].labels == std::vector<int>{3, 0});
  }

  TEST_CASE("long sentences are split, never truncated") {
    std::string text;
    for (int i = 0; i < 10; ++i) text += "w" + std::to_string(i) + (i == 3 ? " B-PER\n" : i == 4 ? " I-PER\n" : " O\n");
    ConllOptions opt;
    opt.max_length = 4;
    const auto c = parse(text, opt);
    CHECK(c.token_count() == 10);
    for (const auto& s : c.sentences) {
      CHECK(s.size() <= 4);
      CHECK(validate_bio(s.labels, LabelScheme{}).empty());
    }
    // The entity is kept whole.
    bool whole = false;
    for (const auto& s : c.sentences)
      for (std::size_t i = 0; i + 1 < s.size(); ++i) whole = whole || (s.tokens[i] == "w3" && s.tokens[i + 1] == "w4");
    CHECK(whole);
  }

  TEST_CASE("unlabeled input") {
    ConllOptions opt;
    opt.labeled = false;
    const auto c = parse("hola\nmundo\n\nadios\n", opt);
    CHECK(c.size() == 2);
    CHECK_FALSE(c.labeled());
  }

  TEST_CASE("header line sets the language") {
    const auto c = parse("-DOCSTART- prokd-conll v1 language=es split=test\nMadrid B-LOC\n");
    CHECK(c.language == "es");
    CHECK(c.sentences[0].language == "es");
  }

  TEST_CASE("round trip on a 1000-sentence generated corpus") {
    const LabelScheme scheme;
    SyntheticSpec spec;
    spec.source_train = 1000;
    spec.shift_table = {{"zeta", 6, 0.67, 3, 0.6}};
    const auto g = generate_synthetic(spec, scheme);
    REQUIRE(g.source_train.size() == 1000);
    for (const auto* c : {&g.source_train, &g.target_test}) {
      std::ostringstream out;
      write_conll(out, *c, scheme);
      std::istringstream in(out.str());
      ConllOptions opt;
      opt.split = c->split;
      const auto back = parse_conll(in, scheme, opt);
      CHECK(back == *c);
      std::ostringstream again;
      write_conll(again, back, scheme);
      CHECK(again.str() == out.str());
    }
  }

  TEST_CASE("unreadable files are runtime errors") {
    CHECK_THROWS_AS(read_conll_file("/nonexistent/file.conll", LabelScheme{}), Error);
  }

  TEST_CASE("supplied CoNLL-2003 English train file has 14,987 sentences and 23,499 entities") {
    const char* path = std::getenv("PROKD_CONLL2003_TRAIN");
    if (!path) return;
    ConllOptions opt;
    opt.max_length = 1000;
    opt.lenient = true;
    const auto c = read_conll_file(path, LabelScheme{}, opt);
    CHECK(c.size() == 14987);
    CHECK(c.entity_count(LabelScheme{}) == 23499);
  }
}
