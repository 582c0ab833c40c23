#include <algorithm>
#include <set>

#include <doctest.h>

#include "prokd/corpus/batching.hpp"
#include "prokd/corpus/corpus.hpp"
#include "prokd/corpus/gold_store.hpp"
#include "prokd/corpus/label_scheme.hpp"
#include "prokd/error.hpp"

using namespace prokd;
using namespace prokd::corpus;

namespace {

std::vector<int> tags(const LabelScheme& s, std::initializer_list<const char*> names) {
  std::vector<int> out;
  for (const auto* n : names) out.push_back(*s.index(n));
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("default label scheme") {
    const LabelScheme s;
    CHECK(s.size() == 9);
    CHECK(s.tag(0) == "O");
    CHECK(s.tags() == std::vector<std::string>{"O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG", "B-MISC",
                                               "I-MISC"});
    CHECK(*s.index("I-ORG") == 6);
    CHECK_FALSE(s.index("B-XYZ").has_value());
    CHECK(LabelScheme({"A", "B", "C"}).size() == 7);
    CHECK_THROWS_AS(LabelScheme(std::vector<std::string>{}), Error);
    CHECK_THROWS_AS(LabelScheme({"PER", "PER"}), Error);
  }

  TEST_CASE("validate_bio examples") {
    const LabelScheme s;
    CHECK(validate_bio(tags(s, {"O", "B-PER", "I-PER"}), s).empty());
    const auto v1 = validate_bio(tags(s, {"O", "I-PER"}), s);
    REQUIRE(v1.size() == 1);
    CHECK(v1[0].position == 1);
    const auto v2 = validate_bio(tags(s, {"B-LOC", "I-ORG"}), s);
    REQUIRE(v2.size() == 1);
    CHECK(v2[0].position == 1);
    CHECK(validate_bio(tags(s, {"I-MISC", "I-MISC", "O", "I-PER"}), s).size() == 2);
    CHECK(validate_bio(tags(s, {"B-PER", "B-PER", "I-PER", "I-PER", "O", "B-LOC"}), s).empty());
  }

  TEST_CASE("lenient repair rewrites dangling I-t to B-t") {
    const LabelScheme s;
    auto labels = tags(s, {"I-LOC", "I-LOC", "O", "B-PER", "I-ORG"});
    CHECK(repair_bio(labels, s) == 2);
    CHECK(labels == tags(s, {"B-LOC", "I-LOC", "O", "B-PER", "B-ORG"}));
    CHECK(validate_bio(labels, s).empty());
  }

  TEST_CASE("corpus counts and label removal") {
    const LabelScheme s;
    Corpus c;
    c.language = "en";
    c.sentences.push_back({{"John", "runs"}, "en", tags(s, {"B-PER", "O"})});
    c.sentences.push_back({{"New", "York", "and", "Bob"}, "en", tags(s, {"B-LOC", "I-LOC", "O", "B-PER"})});
    CHECK(c.token_count() == 6);
    CHECK(c.entity_count(s) == 3);
    CHECK(c.labeled());
    const auto u = c.without_labels();
    CHECK_FALSE(u.labeled());
    CHECK(u.sentences[1].tokens == c.sentences[1].tokens);
  }

  TEST_CASE("split names round-trip") {
    for (auto sp : {Split::train, Split::dev, Split::test}) CHECK(split_from_string(to_string(sp)) == sp);
    CHECK_THROWS_AS(split_from_string("holdout"), Error);
  }

  TEST_CASE("batch sizes for 10 sentences in batches of 4") {
    const BatchIterator it(10, 4, 1);
    const auto batches = it.epoch(0);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 4);
    CHECK(batches[1].size() == 4);
    CHECK(batches[2].size() == 2);
    CHECK(it.batches_per_epoch() == 3);
    std::vector<std::size_t> all;
    for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(all[i] == i);
  }

  TEST_CASE("batches are reproducible per seed and vary across epochs") {
    const BatchIterator a(25, 4, 42), b(25, 4, 42), c(25, 4, 43);
    CHECK(a.epoch(3) == b.epoch(3));
    CHECK(a.epoch(0) != c.epoch(0));
    std::set<std::vector<corpus::Batch>> perms;
    for (std::size_t e = 0; e < 5; ++e) perms.insert(a.epoch(e));
    CHECK(perms.size() == 5);
  }

  TEST_CASE("batch iterator rejects empty corpora and zero batch size") {
    CHECK_THROWS_AS(BatchIterator(0, 4, 1), Error);
    CHECK_THROWS_AS(BatchIterator(4, 0, 1), Error);
  }

  TEST_CASE("derived seeds differ per stream and index") {
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
  }

  TEST_CASE("gold store logs every access") {
    GoldStore g;
    g.seal("target.test", {{1, 2}, {0}});
    CHECK(g.contains("target.test"));
    CHECK(g.access_log().empty());
    CHECK(g.open("target.test", "evaluate").size() == 2);
    REQUIRE(g.access_log().size() == 1);
    CHECK(g.access_log()[0].find("evaluate") != std::string::npos);
    CHECK_THROWS_AS(g.open("target.train", "evaluate"), Error);
    g.clear_log();
    CHECK(g.access_log().empty());
  }
}
