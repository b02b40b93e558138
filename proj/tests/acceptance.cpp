// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// fail. Criteria are property- and oracle-based at desk scale; thresholds
// and tolerances are fixed here, not tuned at runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ptx/cluster.hpp"
#include "ptx/corpus.hpp"
#include "ptx/eval.hpp"
#include "ptx/features.hpp"
#include "ptx/model1.hpp"
#include "ptx/pipeline.hpp"
#include "ptx/pseudotext.hpp"
#include "ptx/rng.hpp"
#include "ptx/synth.hpp"
#include "ptx/translate.hpp"
#include "ptx/utd.hpp"
#include "ptx/util.hpp"
#include "support/oracles.hpp"
#include "support/stats.hpp"
#include "support/tempdir.hpp"

using namespace ptx;

namespace {

struct Criterion {
  int number;
  std::string name;
  std::function<bool(std::string&)> run;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing file " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------- C1

bool criterion1(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20260801);
  int checked = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<ParallelPair> pairs;
    const int num_pairs = static_cast<int>(rng.next_int(1, 4));
    for (int p = 0; p < num_pairs; ++p) {
      ParallelPair pair;
      for (int i = static_cast<int>(rng.next_int(1, 3)); i > 0; --i) {
        pair.source.push_back("f" + std::to_string(rng.next_int(0, 4)));
      }
      for (int i = static_cast<int>(rng.next_int(1, 3)); i > 0; --i) {
        pair.target.push_back("e" + std::to_string(rng.next_int(0, 4)));
      }
      pairs.push_back(std::move(pair));
    }
    TranslationTable table = init_uniform(pairs, 0.01);
    // Check both the uniform table and a warmed, non-uniform one.
    for (int round = 0; round < 2; ++round) {
      const CountTable fast = expected_counts(pairs, table);
      const CountTable slow = oracles::enumerate_expected_counts(pairs, table);
      for (const auto& [f, row] : fast) {
        for (const auto& [e, c] : row) {
          double other = 0.0;
          auto fit = slow.find(f);
          if (fit != slow.end()) {
            auto eit = fit->second.find(e);
            if (eit != fit->second.end()) other = eit->second;
          }
          worst = std::max(worst, std::abs(c - other));
        }
      }
      table = em_iteration(pairs, table);
      ++checked;
    }
  }
  const double elapsed = seconds_since(start);
  detail = strprintf("%d corpora, max |count diff| %.2e, %.2fs", checked / 2, worst, elapsed);
  return worst < 1e-10 && elapsed < 5.0;
}

// ---------------------------------------------------------------- C2

bool criterion2(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  SynthConfig config;
  config.num_source_types = 30;
  config.num_calls = 40;
  config.utterances_per_call = 10;
  config.stopword_insert_rate = 0.3;
  config.seed = 2;
  const SynthCorpus sc = generate_corpus(config);

  const Pseudotext pt = generate_oracle_pseudotext(sc.corpus);
  std::set<std::string> all_ids;
  for (const Utterance& u : sc.corpus.utterances()) all_ids.insert(u.utterance_id);
  const auto pairs = assemble_pairs(
      pt, all_ids, [&sc](const std::string& id) { return sc.corpus.at(id).translation; },
      StopwordList::default_english());
  const TranslationTable table = train(pairs, 5, 0.01).table;

  std::map<std::string, int> occurrences;
  for (const auto& pair : pairs) {
    for (const auto& f : pair.source) ++occurrences[f];
  }
  int eligible = 0, recovered = 0;
  for (const auto& [f, count] : occurrences) {
    if (count < 10) continue;
    ++eligible;
    const auto best = topk(table, f, 1);
    if (!best.empty() && best[0] == sc.lexicon.at(f)) ++recovered;
  }
  const double elapsed = seconds_since(start);
  detail = strprintf("%d/%d eligible types recovered, %.2fs", recovered, eligible, elapsed);
  return eligible > 0 && recovered >= static_cast<int>(std::ceil(0.95 * eligible)) &&
         elapsed < 30.0;
}

// ---------------------------------------------------------------- C3

FeatureMatrix noisy_planted(const std::string& id, const std::vector<float>& pattern,
                            int pattern_frames, int dim, int at, int total, double sigma,
                            Rng& rng) {
  FeatureMatrix fm;
  fm.utterance_id = id;
  fm.dim = dim;
  fm.num_frames = total;
  fm.data.resize(static_cast<std::size_t>(total) * dim);
  for (auto& v : fm.data) v = static_cast<float>(rng.next_gaussian());
  for (int t = 0; t < pattern_frames; ++t) {
    for (int d = 0; d < dim; ++d) {
      fm.at(at + t, d) = pattern[static_cast<std::size_t>(t) * dim + d] +
                         static_cast<float>(sigma * rng.next_gaussian());
    }
  }
  return fm;
}

bool criterion3(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const int dim = 20;
  Rng rng(33);
  int recovered = 0;
  for (int pair_idx = 0; pair_idx < 20; ++pair_idx) {
    const std::vector<float> pattern = make_template(60, dim, rng.next_u64());
    const int at_a = static_cast<int>(rng.next_int(20, 60));
    const int at_b = static_cast<int>(rng.next_int(20, 60));
    std::vector<FeatureMatrix> db;
    db.push_back(noisy_planted("a", pattern, 60, dim, at_a, 150, 0.05, rng));
    db.push_back(noisy_planted("b", pattern, 60, dim, at_b, 150, 0.05, rng));
    const auto matches = discover_matches(db, UtdParams{});
    for (const Match& m : matches) {
      const Segment& sa = m.a.utterance_id == "a" ? m.a : m.b;
      const Segment& sb = m.a.utterance_id == "a" ? m.b : m.a;
      const int ov_a = std::min(sa.end_frame, at_a + 60) - std::max(sa.start_frame, at_a);
      const int ov_b = std::min(sb.end_frame, at_b + 60) - std::max(sb.start_frame, at_b);
      if (ov_a >= 48 && ov_b >= 48) {  // 80% of the planted span
        ++recovered;
        break;
      }
    }
  }

  // Negative control: all-noise corpus under a fixed seed.
  Rng noise_rng(99);
  std::vector<FeatureMatrix> noise_db;
  for (int i = 0; i < 20; ++i) {
    noise_db.push_back(
        noisy_planted(strprintf("n%02d", i), {}, 0, dim, 0, 150, 0.0, noise_rng));
  }
  const auto noise_matches = discover_matches(noise_db, UtdParams{}, 4);

  const double elapsed = seconds_since(start);
  detail = strprintf("%d/20 pairs recovered, %zu noise matches, %.2fs", recovered,
                     noise_matches.size(), elapsed);
  return recovered >= 19 && noise_matches.empty() && elapsed < 60.0;
}

// ---------------------------------------------------------------- C4

double cross_call_recall(const SynthCorpus& sc, const std::vector<Match>& matches) {
  struct GoldSpan {
    std::string utt;
    std::string call;
    int start, end;
  };
  std::map<std::string, std::vector<GoldSpan>> gold;  // type -> spans
  for (std::size_t i = 0; i < sc.corpus.size(); ++i) {
    const Utterance& u = sc.corpus.utterances()[i];
    const double shift = sc.features[i].frame_shift_ms;
    for (const AlignedWord& w : u.word_alignment.value()) {
      gold[w.word].push_back({u.utterance_id, u.call_id,
                              static_cast<int>(std::llround(w.start_s * 1000.0 / shift)),
                              static_cast<int>(std::llround(w.end_s * 1000.0 / shift))});
    }
  }
  auto covered = [&](const GoldSpan& g, const Segment& s) {
    if (s.utterance_id != g.utt) return false;
    const int ov = std::min(s.end_frame, g.end) - std::max(s.start_frame, g.start);
    return ov * 2 >= (g.end - g.start);  // at least half the word
  };
  int total = 0, hit = 0;
  for (const auto& [type, spans] : gold) {
    for (std::size_t i = 0; i < spans.size(); ++i) {
      for (std::size_t j = i + 1; j < spans.size(); ++j) {
        if (spans[i].call == spans[j].call) continue;
        ++total;
        for (const Match& m : matches) {
          if ((covered(spans[i], m.a) && covered(spans[j], m.b)) ||
              (covered(spans[i], m.b) && covered(spans[j], m.a))) {
            ++hit;
            break;
          }
        }
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / total;
}

bool criterion4(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> settings{0.0, 0.3, 0.6};
  int wins = 0, losses = 0;
  std::vector<double> means(3, 0.0);
  const int num_seeds = 12;
  for (int seed = 0; seed < num_seeds; ++seed) {
    std::vector<double> recall(3);
    for (std::size_t s = 0; s < settings.size(); ++s) {
      SynthConfig config;
      config.num_source_types = 5;
      config.num_calls = 4;
      config.utterances_per_call = 3;
      config.words_per_utterance = {2, 3};
      config.frames_per_word = {55, 65};
      config.dim = 16;
      config.noise_sigma = 0.05;
      config.speaker_distortion = settings[s];
      config.seed = 1000 + seed;
      const SynthCorpus sc = generate_corpus(config);
      const auto matches = discover_matches(sc.features, UtdParams{}, 4);
      recall[s] = cross_call_recall(sc, matches);
      means[s] += recall[s] / num_seeds;
    }
    if (recall[0] > recall[2]) {
      ++wins;
    } else if (recall[0] < recall[2]) {
      ++losses;
    }
  }
  const double p = testsupport::sign_test_p(wins, losses);
  const double elapsed = seconds_since(start);
  detail = strprintf("mean recall %.2f/%.2f/%.2f at distortion 0/0.3/0.6, "
                     "sign test p=%.4g over %d seeds, %.2fs",
                     means[0], means[1], means[2], p, num_seeds, elapsed);
  return means[0] >= means[1] && means[1] >= means[2] && wins + losses >= 10 && p < 0.05;
}

// ---------------------------------------------------------------- C5

bool criterion5(std::string& detail) {
  testsupport::TempDir tmp("ptx_acc5");
  SynthConfig config;
  config.num_source_types = 10;
  config.num_calls = 6;
  config.utterances_per_call = 6;
  config.words_per_utterance = {2, 4};
  config.frames_per_word = {55, 65};
  config.dim = 16;
  config.noise_sigma = 0.05;
  config.speaker_distortion = 0.5;
  config.stopword_insert_rate = 0.2;
  config.seed = 505;
  const SynthCorpus sc = generate_corpus(config);

  DataSources sources;
  sources.features = [&sc](const std::string& id) { return sc.features[sc.corpus.rank(id)]; };
  sources.translation = [&sc](const std::string& id) { return sc.corpus.at(id).translation; };
  sources.transcript = [&sc](const std::string& id) { return sc.corpus.at(id).transcript; };

  auto run = [&](bool oracle, SplitMode mode, const std::string& dir) {
    PipelineConfig pc;
    pc.out_dir = tmp.file(dir);
    pc.split_mode = mode;
    pc.ratio = 0.8;
    pc.seed = 17;
    pc.oracle = oracle;
    pc.ks = {1, 5};
    pc.jobs = 4;
    return run_pipeline(sc.corpus, sources, pc);
  };
  const RunReport oracle_call = run(true, SplitMode::call, "oracle_call");
  const RunReport utd_call = run(false, SplitMode::call, "utd_call");
  const RunReport utd_utt = run(false, SplitMode::utterance, "utd_utt");

  bool ok = true;
  std::string parts;
  for (std::size_t i = 0; i < 2; ++i) {
    const double ro = oracle_call.k_results[i].pr.recall;
    const double rc = utd_call.k_results[i].pr.recall;
    const double ru = utd_utt.k_results[i].pr.recall;
    ok = ok && ro >= rc && ru >= rc;
    parts += strprintf("K=%d oracle %.3f >= utd-call %.3f, utd-utt %.3f >= utd-call; ",
                       oracle_call.k_results[i].k, ro, rc, ru);
  }
  detail = parts;
  return ok;
}

// ---------------------------------------------------------------- C6

bool criterion6(std::string& detail) {
  Rng rng(606);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  auto pick = [&](int lo, int hi) { return static_cast<int>(rng.next_int(lo, hi)); };
  double worst = 0.0;
  int exact_mismatches = 0;

  for (int trial = 0; trial < 100; ++trial) {
    // corr@K + corpus P/R on random records.
    std::vector<EvalRecord> records;
    for (int r = 0, n = pick(1, 4); r < n; ++r) {
      std::vector<std::string> pred, gold;
      for (int i = pick(0, 5); i > 0; --i) pred.push_back(vocab[static_cast<std::size_t>(pick(0, 4))]);
      for (int i = pick(0, 5); i > 0; --i) gold.push_back(vocab[static_cast<std::size_t>(pick(0, 4))]);
      EvalRecord rec;
      rec.pred_at_k = to_multiset(pred);
      rec.gold = to_multiset(gold);
      rec.corr = corr_at_k(rec.pred_at_k, rec.gold);
      if (rec.corr != oracles::corr_brute(pred, gold)) ++exact_mismatches;
      records.push_back(std::move(rec));
    }
    const PrecisionRecall pr = corpus_pr(records);
    std::int64_t corr = 0, np = 0, ng = 0;
    for (const auto& r : records) {
      corr += r.corr;
      np += static_cast<std::int64_t>(multiset_size(r.pred_at_k));
      ng += static_cast<std::int64_t>(multiset_size(r.gold));
    }
    const double brute_p = np == 0 ? 0.0 : static_cast<double>(corr) / np;
    const double brute_r = ng == 0 ? 0.0 : static_cast<double>(corr) / ng;
    worst = std::max({worst, std::abs(pr.precision - brute_p), std::abs(pr.recall - brute_r)});

    // purity + coverage on a random clustering over a random aligned corpus.
    std::vector<Utterance> utts;
    const int num_utts = pick(1, 3);
    for (int u = 0; u < num_utts; ++u) {
      Utterance utt;
      utt.utterance_id = "u" + std::to_string(u);
      utt.call_id = "c" + std::to_string(u % 2);
      utt.speaker_id = "s";
      utt.features_ref = "x";
      std::vector<AlignedWord> alignment;
      double t = 0.1 * pick(0, 3);
      for (int w = 0, nw = pick(1, 3); w < nw; ++w) {
        const double len = 0.1 * pick(2, 6);
        alignment.push_back({vocab[static_cast<std::size_t>(pick(0, 4))], t, t + len});
        t += len + 0.1 * pick(0, 2);
      }
      utt.duration_s = t + 0.1 * pick(1, 3);
      utt.translation = "x";
      utt.word_alignment = std::move(alignment);
      utts.push_back(std::move(utt));
    }
    const Corpus corpus(std::move(utts));
    Clustering clustering;
    int node = 0;
    for (int c = 0, nc = pick(0, 3); c < nc; ++c) {
      std::vector<Occurrence> occs;
      for (int o = 0, no = pick(1, 4); o < no; ++o) {
        const auto& u = corpus.utterances()[static_cast<std::size_t>(pick(0, num_utts - 1))];
        const int frames = static_cast<int>(std::llround(u.duration_s * 100.0));
        const int s = pick(0, std::max(0, frames - 12));
        occs.push_back({node++, {u.utterance_id, s, s + pick(5, 12)}});
      }
      clustering.clusters.push_back({"c" + std::to_string(c + 1), std::move(occs)});
    }
    worst = std::max(worst, std::abs(cluster_purity(clustering, corpus, 10.0) -
                                     oracles::purity_brute(clustering, corpus, 10.0)));
    worst = std::max(worst, std::abs(audio_coverage(clustering, corpus, 10.0) -
                                     oracles::coverage_brute(clustering, corpus, 10.0)));

    // OOV on random pseudotexts.
    Pseudotext train_pt, test_pt;
    for (int l = 0, nl = pick(1, 3); l < nl; ++l) {
      std::vector<std::string> labels;
      for (int i = pick(0, 4); i > 0; --i) labels.push_back(vocab[static_cast<std::size_t>(pick(0, 4))]);
      train_pt.lines.push_back({"tr" + std::to_string(l), std::move(labels)});
    }
    for (int l = 0, nl = pick(1, 3); l < nl; ++l) {
      std::vector<std::string> labels;
      for (int i = pick(0, 4); i > 0; --i) labels.push_back(vocab[static_cast<std::size_t>(pick(0, 4))]);
      test_pt.lines.push_back({"te" + std::to_string(l), std::move(labels)});
    }
    const OovStats stats = oov_stats(train_pt, test_pt);
    const auto [brute_tokens, brute_rate] = oracles::oov_brute(train_pt, test_pt);
    if (stats.tokens != brute_tokens) ++exact_mismatches;
    worst = std::max(worst, std::abs(stats.rate - brute_rate));
  }
  detail = strprintf("100 instances, %d exact mismatches, max ratio diff %.2e", exact_mismatches,
                     worst);
  return exact_mismatches == 0 && worst < 1e-12;
}

// ---------------------------------------------------------------- C7

bool criterion7(std::string& detail) {
  testsupport::TempDir tmp("ptx_acc7");
  SynthConfig config;
  config.num_source_types = 6;
  config.num_calls = 5;
  config.utterances_per_call = 4;
  config.words_per_utterance = {2, 3};
  config.frames_per_word = {55, 65};
  config.dim = 12;
  config.noise_sigma = 0.03;
  config.speaker_distortion = 0.1;
  config.stopword_insert_rate = 0.2;
  config.seed = 707;
  const SynthCorpus sc = generate_corpus(config);

  DataSources sources;
  sources.features = [&sc](const std::string& id) { return sc.features[sc.corpus.rank(id)]; };
  sources.translation = [&sc](const std::string& id) { return sc.corpus.at(id).translation; };
  sources.transcript = [&sc](const std::string& id) { return sc.corpus.at(id).transcript; };

  auto run = [&](const std::string& dir, int jobs) {
    PipelineConfig pc;
    pc.out_dir = tmp.file(dir);
    pc.split_mode = SplitMode::call;
    pc.ratio = 0.75;
    pc.seed = 11;
    pc.jobs = jobs;
    run_pipeline(sc.corpus, sources, pc);
  };
  run("r1", 1);
  run("r2", 1);
  run("r8", 8);

  bool ok = true;
  std::string diffs;
  for (const char* name : {"matches.tsv", "clusters.json", "model.tsv", "report.json"}) {
    const std::string a = slurp(tmp.file("r1/" + std::string(name)));
    const std::string b = slurp(tmp.file("r2/" + std::string(name)));
    const std::string c = slurp(tmp.file("r8/" + std::string(name)));
    if (a != b || a != c) {
      ok = false;
      diffs += std::string(name) + " ";
    }
  }
  detail = ok ? "4 outputs byte-identical across reruns and jobs {1,8}"
              : "differing outputs: " + diffs;
  return ok;
}

// ---------------------------------------------------------------- C8

bool criterion8(std::string& detail) {
  testsupport::TempDir tmp("ptx_acc8");
  Rng rng(808);
  bool ok = true;
  std::string fails;

  auto check_roundtrip = [&](const std::string& name, const std::string& p1,
                             const std::string& p2) {
    if (slurp(p1) != slurp(p2)) {
      ok = false;
      fails += name + " ";
    }
  };

  // Feature files.
  for (int trial = 0; trial < 10; ++trial) {
    FeatureMatrix fm;
    fm.utterance_id = "u";
    fm.dim = static_cast<int>(rng.next_int(1, 20));
    fm.num_frames = static_cast<int>(rng.next_int(1, 50));
    fm.frame_shift_ms = trial % 2 ? 10.0f : 12.5f;
    fm.data.resize(static_cast<std::size_t>(fm.dim) * fm.num_frames);
    for (auto& v : fm.data) {
      v = static_cast<float>(rng.next_gaussian() * std::pow(10.0, rng.next_int(-20, 20)));
    }
    save_features(fm, tmp.file("f1.ptft"));
    save_features(load_features(tmp.file("f1.ptft")), tmp.file("f2.ptft"));
    check_roundtrip("features", tmp.file("f1.ptft"), tmp.file("f2.ptft"));
  }

  // A real mini-run supplies matches, clusters, pseudotext and a model.
  SynthConfig config;
  config.num_source_types = 5;
  config.num_calls = 3;
  config.utterances_per_call = 3;
  config.frames_per_word = {55, 65};
  config.dim = 12;
  config.noise_sigma = 0.02;
  config.seed = 88;
  const SynthCorpus sc = generate_corpus(config);
  const auto matches = discover_matches(sc.features, UtdParams{}, 4);
  save_matches(matches, tmp.file("m1.tsv"));
  save_matches(load_matches(tmp.file("m1.tsv")), tmp.file("m2.tsv"));
  check_roundtrip("matches", tmp.file("m1.tsv"), tmp.file("m2.tsv"));

  const Clustering clustering = cluster_matches(
      matches, 0.5, [&sc](const std::string& id) { return sc.corpus.rank(id); });
  save_clusters(clustering, tmp.file("c1.json"));
  save_clusters(load_clusters(tmp.file("c1.json")), tmp.file("c2.json"));
  check_roundtrip("clusters", tmp.file("c1.json"), tmp.file("c2.json"));

  const Pseudotext pt = generate_pseudotext(clustering, sc.corpus);
  save_pseudotext(pt, tmp.file("p1.txt"));
  save_pseudotext(load_pseudotext(tmp.file("p1.txt")), tmp.file("p2.txt"));
  check_roundtrip("pseudotext", tmp.file("p1.txt"), tmp.file("p2.txt"));

  std::set<std::string> ids;
  for (const Utterance& u : sc.corpus.utterances()) ids.insert(u.utterance_id);
  const auto pairs = assemble_pairs(
      pt, ids, [&sc](const std::string& id) { return sc.corpus.at(id).translation; },
      StopwordList::default_english());
  const TranslationTable table = train(pairs, 5, 0.01).table;
  save_translation_table(table, tmp.file("t1.tsv"));
  save_translation_table(load_translation_table(tmp.file("t1.tsv")), tmp.file("t2.tsv"));
  check_roundtrip("model", tmp.file("t1.tsv"), tmp.file("t2.tsv"));

  detail = ok ? "feature/match/cluster/pseudotext/model files stable"
              : "failed round trips: " + fails;
  return ok;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "Model 1 expected counts match alignment enumeration (1e-10)", criterion1},
      {2, "oracle training recovers a planted lexicon (>=95% of eligible types)", criterion2},
      {3, "plant-and-recover discovery (>=19/20, clean negative control)", criterion3},
      {4, "cross-speaker distortion degrades match recall monotonically", criterion4},
      {5, "oracle recall >= UTD recall; utterance split >= call split", criterion5},
      {6, "metrics match brute-force references on 100 random instances", criterion6},
      {7, "run-all outputs byte-identical across reruns and jobs settings", criterion7},
      {8, "all file formats survive save-load-save byte-identically", criterion8},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double elapsed = seconds_since(start);
    std::printf("%s criterion %d: %s [%s] (%.2fs)\n", ok ? "PASS" : "FAIL", c.number,
                c.name.c_str(), detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
