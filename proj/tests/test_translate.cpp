#include "doctest.h"

#include <fstream>

#include "ptx/corpus.hpp"
#include "ptx/translate.hpp"
#include "ptx/util.hpp"
#include "support/tempdir.hpp"

using namespace ptx;
using testsupport::TempDir;

namespace {

TranslationTable table_with(const std::map<std::string, std::map<std::string, double>>& t) {
  TranslationTable table;
  table.t = t;
  return table;
}

}  // namespace

TEST_CASE("topk orders by probability with lexicographic ties") {
  const TranslationTable table = table_with({{"c1", {{"car", 0.7}, {"ball", 0.3}}}});
  CHECK(topk(table, "c1", 1) == std::vector<std::string>{"car"});
  CHECK(topk(table, "c1", 5) == std::vector<std::string>{"car", "ball"});

  const TranslationTable tied = table_with({{"c1", {{"a", 0.5}, {"b", 0.5}}}});
  CHECK(topk(tied, "c1", 1) == std::vector<std::string>{"a"});
  CHECK(topk(table, "zz", 3).empty());
  CHECK_THROWS_AS(topk(table, "c1", 0), Error);
}

TEST_CASE("translate_utterance emits K guesses per known token") {
  const TranslationTable table = table_with({{"c2", {{"work", 0.9}, {"job", 0.1}}}});

  SUBCASE("a known pseudoterm returns its best translation") {
    const Prediction p = translate_utterance(table, "uC", {"c2"}, 1);
    CHECK(p.words == std::vector<std::string>{"work"});
    CHECK(p.oov_terms.empty());
    CHECK(p.k == 1);
  }
  SUBCASE("an empty line yields an empty prediction") {
    const Prediction p = translate_utterance(table, "uX", {}, 1);
    CHECK(p.words.empty());
    CHECK(p.oov_terms.empty());
  }
  SUBCASE("unknown pseudoterms go to oov") {
    const Prediction p = translate_utterance(table, "uY", {"c9"}, 1);
    CHECK(p.words.empty());
    CHECK(p.oov_terms == std::vector<std::string>{"c9"});
  }
  SUBCASE("NULL is never translated") {
    const Prediction p = translate_utterance(table, "uZ", {TranslationTable::kNull, "c2"}, 1);
    CHECK(p.words == std::vector<std::string>{"work"});
    CHECK(p.oov_terms.empty());
  }
}

TEST_CASE("repeated tokens double the multiset") {
  const TranslationTable table = table_with({{"c2", {{"work", 0.9}, {"job", 0.1}}}});
  const Prediction once = translate_utterance(table, "u", {"c2"}, 2);
  const Prediction twice = translate_utterance(table, "u", {"c2", "c2"}, 2);
  CHECK(once.words == std::vector<std::string>{"work", "job"});
  CHECK(twice.words == std::vector<std::string>{"work", "job", "work", "job"});
  CHECK(twice.words.size() == 2 * once.words.size());
}

TEST_CASE("prediction size is bounded by K times the line length") {
  const TranslationTable table =
      table_with({{"c1", {{"a", 0.6}, {"b", 0.4}}}, {"c2", {{"x", 1.0}}}});
  for (int k = 1; k <= 4; ++k) {
    const Prediction p = translate_utterance(table, "u", {"c1", "c2", "c9", "c1"}, k);
    CHECK(p.words.size() <= static_cast<std::size_t>(k) * 4);
    CHECK(p.oov_terms == std::vector<std::string>{"c9"});
  }
}

TEST_CASE("a trained table sends a work-cluster pseudoterm to its co-occurring word") {
  // Four utterances; c1 appears where "yes well ..." is said, c2 where
  // "work" is said (plus one noisy co-occurrence). After training, c2's
  // best translation is the word unique to its lines.
  const auto& sw = ptx::StopwordList::default_english();
  auto content = [&sw](const std::string& text) {
    return filter_stopwords(tokenize(text), sw);
  };
  const std::vector<ParallelPair> pairs{
      {{"c1"}, content("yes well and the car")},
      {{"c1", "c2"}, content("yes well and hows it going")},
      {{"c2"}, content("this work")},
      {{"c2"}, content("call him from work")},
  };
  const TranslationTable table = train(pairs, 5, 0.01).table;
  CHECK(topk(table, "c2", 1) == std::vector<std::string>{"work"});
  const Prediction p = translate_utterance(table, "uC", {"c2"}, 1);
  CHECK(p.words == std::vector<std::string>{"work"});
}

TEST_CASE("predictions file round trips") {
  TempDir tmp;
  std::vector<Prediction> preds;
  preds.push_back({"u1", 2, {"work", "job"}, {}});
  preds.push_back({"u2", 2, {}, {"c7", "c9"}});
  const std::string p1 = tmp.file("preds.jsonl");
  save_predictions(preds, p1);
  const auto loaded = load_predictions(p1);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].words == preds[0].words);
  CHECK(loaded[1].oov_terms == preds[1].oov_terms);
  CHECK(loaded[1].k == 2);

  const std::string p2 = tmp.file("preds2.jsonl");
  save_predictions(loaded, p2);
  std::ifstream f1(p1), f2(p2);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
}
