#include "ptx/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "ptx/cluster.hpp"
#include "ptx/translate.hpp"
#include "ptx/util.hpp"

namespace ptx {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

DataSources file_sources(const Corpus& corpus, const std::string& features_dir,
                         const std::string& manifest_dir) {
  DataSources sources;
  sources.features = [&corpus, features_dir, manifest_dir](const std::string& id) {
    const Utterance& u = corpus.at(id);
    fs::path p(u.features_ref);
    if (!features_dir.empty()) {
      p = fs::path(features_dir) / p.filename();
    } else if (p.is_relative() && !manifest_dir.empty()) {
      p = fs::path(manifest_dir) / p;
    }
    return load_features(p.string(), id);
  };
  sources.translation = [&corpus](const std::string& id) { return corpus.at(id).translation; };
  sources.transcript = [&corpus](const std::string& id) { return corpus.at(id).transcript; };
  return sources;
}

std::vector<ParallelPair> assemble_pairs(
    const Pseudotext& pt, const std::set<std::string>& side_ids,
    const std::function<std::string(const std::string&)>& translation,
    const StopwordList& stopwords) {
  std::vector<ParallelPair> pairs;
  for (const auto& [id, labels] : pt.lines) {
    if (!side_ids.count(id)) continue;
    ParallelPair pair;
    pair.source = labels;
    const std::vector<std::string> tokens = tokenize(translation(id));
    pair.target = filter_stopwords(tokens, stopwords);
    if (pair.target.empty()) pair.target = tokens;  // stopword-only translations still count
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

namespace {

template <typename Fn>
auto run_stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error("stage " + name + ": " + e.what());
  }
}

std::string hex_digest(std::uint64_t h) { return strprintf("%016llx", static_cast<unsigned long long>(h)); }

std::uint64_t digest_features(const std::vector<FeatureMatrix>& db) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const FeatureMatrix& fm : db) {
    h = fnv1a(fm.utterance_id, h);
    h = fnv1a(&fm.dim, sizeof(fm.dim), h);
    h = fnv1a(&fm.num_frames, sizeof(fm.num_frames), h);
    h = fnv1a(fm.data.data(), fm.data.size() * sizeof(float), h);
  }
  return h;
}

ordered_json params_json(const PipelineConfig& config) {
  ordered_json p;
  p["split_mode"] = split_mode_name(config.split_mode);
  p["ratio"] = config.ratio;
  p["seed"] = config.seed;
  p["oracle"] = config.oracle;
  p["utd"] = {{"sim_threshold", config.utd.sim_threshold},
              {"min_seed_frames", config.utd.min_seed_frames},
              {"max_gap_frames", config.utd.max_gap_frames},
              {"band_radius_frames", config.utd.band_radius_frames},
              {"dtw_score_threshold", config.utd.dtw_score_threshold},
              {"min_match_frames", config.utd.min_match_frames},
              {"max_match_frames", config.utd.max_match_frames}};
  p["overlap_threshold"] = config.overlap_threshold;
  p["iterations"] = config.iterations;
  p["alpha"] = config.alpha;
  p["ks"] = config.ks;
  p["macro"] = config.macro;
  return p;
}

}  // namespace

RunReport run_pipeline(const Corpus& corpus, const DataSources& sources,
                       const PipelineConfig& config) {
  if (corpus.empty()) throw Error("run_pipeline: corpus is empty");
  if (config.ks.empty()) throw Error("run_pipeline: need at least one K");
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);

  RunReport report;
  report.mode = config.oracle ? "oracle" : "utd";
  double frame_shift_ms = config.frame_shift_ms;

  ordered_json run_info;
  run_info["mode"] = report.mode;
  run_info["params"] = params_json(config);
  run_info["jobs"] = config.jobs;

  // Term discovery sees nothing but the audio features; in oracle mode the
  // clustering is simulated from transcripts instead.
  Pseudotext pt;
  std::vector<Match> matches;
  Clustering clustering;
  if (config.oracle) {
    pt = run_stage("pseudotext", [&] {
      std::vector<std::string> ids;
      for (const Utterance& u : corpus.utterances()) ids.push_back(u.utterance_id);
      return generate_oracle_pseudotext(ids, sources.transcript);
    });
  } else {
    std::vector<FeatureMatrix> db = run_stage("features", [&] {
      std::vector<FeatureMatrix> loaded;
      loaded.reserve(corpus.size());
      for (const Utterance& u : corpus.utterances()) {
        loaded.push_back(sources.features(u.utterance_id));
      }
      return loaded;
    });
    if (!db.empty()) frame_shift_ms = db.front().frame_shift_ms;
    run_info["features_digest"] = hex_digest(digest_features(db));

    matches = run_stage("discover",
                        [&] { return discover_matches(db, config.utd, config.jobs); });
    save_matches(matches, (out_dir / "matches.tsv").string());

    clustering = run_stage("cluster", [&] {
      auto rank = [&corpus](const std::string& id) { return corpus.rank(id); };
      Clustering c = cluster_matches(matches, config.overlap_threshold, rank);
      c.score_threshold = config.utd.dtw_score_threshold;
      return c;
    });
    save_clusters(clustering, (out_dir / "clusters.json").string());

    pt = run_stage("pseudotext", [&] { return generate_pseudotext(clustering, corpus); });
  }
  save_pseudotext(pt, (out_dir / "pseudotext.txt").string());
  report.num_matches = matches.size();
  report.num_clusters = clustering.clusters.size();

  const Split split = run_stage(
      "split", [&] { return split_corpus(corpus, config.split_mode, config.ratio, config.seed); });
  save_split(split, (out_dir / "split.json").string());

  // Model 1 training on the train side only; the trainer never sees a test
  // translation.
  const TrainResult trained = run_stage("train", [&] {
    const auto pairs = assemble_pairs(pt, split.train_ids, sources.translation, config.stopwords);
    return train(pairs, config.iterations, config.alpha);
  });
  report.train_log_likelihoods = trained.log_likelihoods;
  save_translation_table(trained.table, (out_dir / "model.tsv").string());

  // Translate and score the test side for each K.
  Pseudotext train_pt, test_pt;
  train_pt.source = test_pt.source = pt.source;
  for (const auto& line : pt.lines) {
    (split.train_ids.count(line.first) ? train_pt : test_pt).lines.push_back(line);
  }
  train_pt.rebuild_index();
  test_pt.rebuild_index();

  for (int k : config.ks) {
    std::vector<Prediction> predictions;
    std::vector<EvalRecord> records;
    run_stage("translate", [&] {
      for (const auto& [id, labels] : test_pt.lines) {
        predictions.push_back(translate_utterance(trained.table, id, labels, k));
      }
      return 0;
    });
    save_predictions(predictions, (out_dir / strprintf("predictions_k%d.jsonl", k)).string());
    run_stage("evaluate", [&] {
      for (const Prediction& pred : predictions) {
        records.push_back(
            make_record(pred, sources.translation(pred.utterance_id), config.stopwords));
      }
      return 0;
    });
    KResult kr;
    kr.k = k;
    kr.pr = corpus_pr(records, config.macro);
    for (const EvalRecord& r : records) {
      kr.corr += r.corr;
      kr.pred_tokens += static_cast<std::int64_t>(multiset_size(r.pred_at_k));
      kr.gold_tokens += static_cast<std::int64_t>(multiset_size(r.gold));
    }
    report.k_results.push_back(kr);
  }

  run_stage("diagnose", [&] {
    report.oov = oov_stats(train_pt, test_pt);
    const bool aligned = std::all_of(corpus.utterances().begin(), corpus.utterances().end(),
                                     [](const Utterance& u) { return u.word_alignment.has_value(); });
    if (!config.oracle && aligned) {
      report.purity = cluster_purity(clustering, corpus, frame_shift_ms);
      report.cluster_counts = cluster_mapping_stats(clustering, corpus, frame_shift_ms);
    }
    if (!config.oracle) {
      report.coverage = audio_coverage(clustering, corpus, frame_shift_ms);
      report.locality = match_locality(matches, corpus, frame_shift_ms);
    }
    return 0;
  });

  save_report(report, config, (out_dir / "report.json").string());

  std::uint64_t manifest_digest = 0xcbf29ce484222325ull;
  for (const Utterance& u : corpus.utterances()) {
    manifest_digest = fnv1a(u.utterance_id, manifest_digest);
    manifest_digest = fnv1a(u.translation, manifest_digest);
  }
  run_info["manifest_digest"] = hex_digest(manifest_digest);
  std::ofstream run_out(out_dir / "run.json", std::ios::binary);
  if (!run_out) throw Error("cannot write run.json");
  run_out << run_info.dump(2) << '\n';

  return report;
}

void save_report(const RunReport& report, const PipelineConfig& config, const std::string& path) {
  ordered_json j;
  j["mode"] = report.mode;
  j["params"] = params_json(config);
  ordered_json metrics = ordered_json::object();
  for (const KResult& kr : report.k_results) {
    ordered_json m;
    m["precision"] = kr.pr.precision;
    m["recall"] = kr.pr.recall;
    m["corr"] = kr.corr;
    m["pred_tokens"] = kr.pred_tokens;
    m["gold_tokens"] = kr.gold_tokens;
    metrics[std::to_string(kr.k)] = std::move(m);
  }
  j["metrics"] = std::move(metrics);

  ordered_json diag;
  diag["oov"] = {{"tokens", report.oov.tokens}, {"rate", report.oov.rate}};
  if (report.purity) diag["purity"] = *report.purity;
  if (report.coverage) diag["coverage"] = *report.coverage;
  if (report.locality) {
    ordered_json loc = ordered_json::object();
    for (const auto& [which, stats] : *report.locality) {
      ordered_json entry;
      entry["count"] = stats.count;
      entry["match_share"] = stats.match_share;
      if (stats.accuracy) {
        entry["accuracy"] = *stats.accuracy;
      } else {
        entry["accuracy"] = nullptr;
      }
      loc[locality_name(which)] = std::move(entry);
    }
    diag["locality"] = std::move(loc);
  }
  if (report.cluster_counts) {
    diag["cluster_counts"] = {{"num_clusters", report.cluster_counts->num_clusters},
                              {"one_to_one", report.cluster_counts->one_to_one},
                              {"many_to_one_types", report.cluster_counts->many_to_one_types},
                              {"uncovered_gold_types", report.cluster_counts->uncovered_gold_types}};
  }
  diag["num_matches"] = report.num_matches;
  diag["num_clusters"] = report.num_clusters;
  j["diagnostics"] = std::move(diag);
  j["train_log_likelihoods"] = report.train_log_likelihoods;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write report " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for report " + path);
}

}  // namespace ptx
