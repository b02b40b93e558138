#include "doctest.h"

#include <cmath>
#include <fstream>

#include "ptx/model1.hpp"
#include "ptx/rng.hpp"
#include "ptx/util.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace ptx;
using testsupport::TempDir;

namespace {

std::vector<ParallelPair> random_tiny_corpus(Rng& rng, int max_pairs = 4, int max_len = 3,
                                             int vocab = 5) {
  const auto word = [](const char* prefix, std::int64_t i) {
    return std::string(prefix) + std::to_string(i);
  };
  std::vector<ParallelPair> pairs;
  const int n = static_cast<int>(rng.next_int(1, max_pairs));
  for (int p = 0; p < n; ++p) {
    ParallelPair pair;
    const int slen = static_cast<int>(rng.next_int(1, max_len));
    const int tlen = static_cast<int>(rng.next_int(1, max_len));
    for (int i = 0; i < slen; ++i) pair.source.push_back(word("f", rng.next_int(0, vocab - 1)));
    for (int i = 0; i < tlen; ++i) pair.target.push_back(word("e", rng.next_int(0, vocab - 1)));
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

double row_sum(const TranslationTable& table, const std::string& f) {
  double sum = 0.0;
  for (const auto& [e, p] : table.t.at(f)) sum += p;
  return sum;
}

double max_count_diff(const CountTable& a, const CountTable& b) {
  double worst = 0.0;
  auto scan = [&](const CountTable& x, const CountTable& y) {
    for (const auto& [f, row] : x) {
      for (const auto& [e, c] : row) {
        double other = 0.0;
        auto fit = y.find(f);
        if (fit != y.end()) {
          auto eit = fit->second.find(e);
          if (eit != fit->second.end()) other = eit->second;
        }
        worst = std::max(worst, std::abs(c - other));
      }
    }
  };
  scan(a, b);
  scan(b, a);
  return worst;
}

}  // namespace

TEST_CASE("digamma matches known values and the recurrence") {
  CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-12));
  CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-12));
  CHECK(digamma(10.0) == doctest::Approx(2.2517525890667211).epsilon(1e-12));
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const double x = 0.05 + 20.0 * rng.next_double();
    CHECK(digamma(x + 1.0) == doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-10));
  }
}

TEST_CASE("uniform initialization covers co-occurring targets plus NULL") {
  SUBCASE("singleton support") {
    const std::vector<ParallelPair> pairs{{{"c1"}, {"car"}}};
    const TranslationTable t = init_uniform(pairs);
    CHECK(t.prob("c1", "car") == 1.0);
    CHECK(t.prob(TranslationTable::kNull, "car") == 1.0);
    CHECK(t.target_vocab_size == 1);
  }
  SUBCASE("two targets split evenly") {
    const std::vector<ParallelPair> pairs{{{"c1"}, {"car", "red"}}};
    const TranslationTable t = init_uniform(pairs);
    CHECK(t.prob("c1", "car") == 0.5);
    CHECK(t.prob("c1", "red") == 0.5);
  }
  SUBCASE("empty-source pairs are skipped; all-empty is an error") {
    const std::vector<ParallelPair> pairs{{{}, {"car"}}, {{"c1"}, {"ball"}}};
    const TranslationTable t = init_uniform(pairs);
    CHECK(!t.t.count("car"));
    CHECK(t.prob("c1", "ball") == 1.0);
    CHECK_THROWS_AS(init_uniform({{{}, {"car"}}}), Error);
  }
}

TEST_CASE("one em iteration on a single-candidate corpus pins the translation") {
  const std::vector<ParallelPair> pairs{{{"c1"}, {"car"}}, {{"c1"}, {"car"}}};
  const TranslationTable t0 = init_uniform(pairs, 1e-9);
  const TranslationTable t1 = em_iteration(pairs, t0);
  CHECK(t1.prob("c1", "car") == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expected counts match the enumeration oracle on the spec corpus") {
  const std::vector<ParallelPair> pairs{{{"c1", "c2"}, {"car"}}, {{"c1"}, {"ball"}}};
  const TranslationTable table = init_uniform(pairs);
  const CountTable fast = expected_counts(pairs, table);
  const CountTable slow = oracles::enumerate_expected_counts(pairs, table);
  CHECK(max_count_diff(fast, slow) < 1e-10);
}

TEST_CASE("oracle sanity: a single pair splits its count with NULL") {
  const std::vector<ParallelPair> pairs{{{"c1"}, {"car"}}};
  const TranslationTable table = init_uniform(pairs);
  const CountTable counts = oracles::enumerate_expected_counts(pairs, table);
  CHECK(counts.at("c1").at("car") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(counts.at(TranslationTable::kNull).at("car") == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("expected counts match enumeration on random tiny corpora") {
  Rng rng(93);
  for (int trial = 0; trial < 40; ++trial) {
    const auto pairs = random_tiny_corpus(rng);
    TranslationTable table;
    try {
      table = init_uniform(pairs);
    } catch (const Error&) {
      continue;
    }
    // Also run one EM step first so probabilities are non-uniform.
    const TranslationTable warmed = em_iteration(pairs, table);
    const CountTable fast = expected_counts(pairs, warmed);
    const CountTable slow = oracles::enumerate_expected_counts(pairs, warmed);
    CHECK(max_count_diff(fast, slow) < 1e-10);
  }
}

TEST_CASE("rows stay normalized through em iterations") {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pairs = random_tiny_corpus(rng, 6, 3, 4);
    TranslationTable table;
    try {
      table = init_uniform(pairs, 0.01);
    } catch (const Error&) {
      continue;
    }
    for (int it = 0; it < 3; ++it) {
      table = em_iteration(pairs, table);
      for (const auto& [f, row] : table.t) {
        CHECK(row_sum(table, f) == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("log likelihood is non-decreasing in the prior-free limit") {
  const std::vector<ParallelPair> pairs{
      {{"c1", "c2"}, {"car", "red"}},
      {{"c1"}, {"car"}},
      {{"c2", "c3"}, {"red", "ball"}},
      {{"c3"}, {"ball", "ball"}},
  };
  const TrainResult result = train(pairs, 8, 1e-9);
  for (std::size_t i = 1; i < result.log_likelihoods.size(); ++i) {
    CHECK(result.log_likelihoods[i] >= result.log_likelihoods[i - 1] - 1e-9);
  }
}

TEST_CASE("training is invariant to pair order") {
  std::vector<ParallelPair> pairs{
      {{"c1", "c2"}, {"car"}},
      {{"c2"}, {"red", "ball"}},
      {{"c3", "c1"}, {"ball"}},
  };
  const TranslationTable a = train(pairs, 4, 0.01).table;
  std::reverse(pairs.begin(), pairs.end());
  const TranslationTable b = train(pairs, 4, 0.01).table;
  REQUIRE(a.t.size() == b.t.size());
  for (const auto& [f, row] : a.t) {
    for (const auto& [e, p] : row) {
      CHECK(p == doctest::Approx(b.prob(f, e)).epsilon(1e-12));
    }
  }
}

TEST_CASE("a planted one-to-one lexicon is recovered") {
  Rng rng(123);
  const int types = 10;
  std::vector<ParallelPair> pairs;
  for (int n = 0; n < 150; ++n) {
    ParallelPair pair;
    const int len = static_cast<int>(rng.next_int(2, 4));
    for (int i = 0; i < len; ++i) {
      const auto t = rng.next_int(0, types - 1);
      pair.source.push_back("f" + std::to_string(t));
      pair.target.push_back("e" + std::to_string(t));
    }
    pairs.push_back(std::move(pair));
  }
  const TranslationTable table = train(pairs, 5, 0.01).table;
  for (int t = 0; t < types; ++t) {
    const auto& row = table.t.at("f" + std::to_string(t));
    const auto best = std::max_element(row.begin(), row.end(), [](const auto& a, const auto& b) {
      return a.second < b.second;
    });
    CHECK(best->first == "e" + std::to_string(t));
  }
}

TEST_CASE("model file round trips byte-identically") {
  TempDir tmp;
  const std::vector<ParallelPair> pairs{
      {{"c1", "c2"}, {"car", "red"}},
      {{"c2"}, {"ball"}},
  };
  const TranslationTable table = train(pairs, 3, 0.01).table;
  const std::string p1 = tmp.file("model.tsv");
  save_translation_table(table, p1);
  const TranslationTable loaded = load_translation_table(p1);
  CHECK(loaded.t.size() == table.t.size());

  const std::string p2 = tmp.file("model2.tsv");
  save_translation_table(loaded, p2);
  std::ifstream f1(p1), f2(p2);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  const std::string bad = tmp.file("bad.tsv");
  std::ofstream(bad) << "only\ttwo\n";
  CHECK_THROWS_AS(load_translation_table(bad), Error);
}
