// ptx: discover-and-translate pipeline for speech paired with text
// translations. Stages exchange plain files so any of them can be swapped
// for an external tool.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"

#include "ptx/cluster.hpp"
#include "ptx/corpus.hpp"
#include "ptx/eval.hpp"
#include "ptx/features.hpp"
#include "ptx/model1.hpp"
#include "ptx/pipeline.hpp"
#include "ptx/pseudotext.hpp"
#include "ptx/synth.hpp"
#include "ptx/translate.hpp"
#include "ptx/utd.hpp"
#include "ptx/util.hpp"
#include "ptx/wav.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadArgs = 2;
constexpr int kExitStageFailure = 3;

struct GlobalOpts {
  std::string out_dir;
  int jobs = 1;
  std::int64_t seed = 0;
};

ptx::StopwordList stopwords_or_default(const std::string& path) {
  return path.empty() ? ptx::StopwordList::default_english() : ptx::load_stopwords(path);
}

std::vector<std::string> sorted_feature_files(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ptft") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ptx::Error("no .ptft files found in " + dir);
  return files;
}

int cmd_synth(const std::string& config_path, const GlobalOpts& g, bool has_seed) {
  ptx::SynthConfig config = config_path.empty() ? ptx::SynthConfig{}
                                                : ptx::load_synth_config(config_path);
  if (has_seed) config.seed = g.seed;
  const ptx::SynthCorpus synth = ptx::generate_corpus(config);

  const fs::path out(g.out_dir);
  fs::create_directories(out / "features");
  ptx::save_manifest(synth.corpus, (out / "manifest.jsonl").string());
  for (const ptx::FeatureMatrix& fm : synth.features) {
    ptx::save_features(fm, (out / "features" / (fm.utterance_id + ".ptft")).string());
  }
  ptx::save_lexicon(synth.lexicon, (out / "lexicon.json").string());
  ptx::save_synth_config(config, (out / "synth_config.json").string());
  std::cerr << "synth: wrote " << synth.corpus.size() << " utterances in "
            << synth.corpus.calls().size() << " calls to " << g.out_dir << "\n";
  return kExitOk;
}

int cmd_features(const std::string& manifest_path, const std::string& config_path,
                 const GlobalOpts& g) {
  const ptx::Corpus corpus = ptx::load_manifest(manifest_path);
  const ptx::FeatureConfig config =
      config_path.empty() ? ptx::FeatureConfig{} : ptx::load_feature_config(config_path);
  const fs::path out(g.out_dir);
  fs::create_directories(out);
  const fs::path manifest_dir = fs::path(manifest_path).parent_path();

  std::vector<const ptx::Utterance*> todo;
  for (const ptx::Utterance& u : corpus.utterances()) todo.push_back(&u);
  ptx::parallel_for(todo.size(), g.jobs, [&](std::size_t i) {
    const ptx::Utterance& u = *todo[i];
    fs::path audio(u.features_ref);
    if (audio.extension() != ".wav") {
      throw ptx::Error("features: utterance \"" + u.utterance_id +
                       "\" does not reference a .wav file");
    }
    if (audio.is_relative()) audio = manifest_dir / audio;
    const ptx::WavData wav = ptx::load_wav(audio.string());
    ptx::FeatureConfig cfg = config;
    cfg.sample_rate_hz = wav.sample_rate_hz;
    const ptx::FeatureMatrix fm = ptx::compute_mfcc(wav.samples, cfg, u.utterance_id);
    ptx::save_features(fm, (out / (u.utterance_id + ".ptft")).string());
  });
  std::cerr << "features: wrote " << todo.size() << " feature files to " << g.out_dir << "\n";
  return kExitOk;
}

int cmd_discover(const std::string& features_dir, const std::string& params_path,
                 const std::string& out_path, const GlobalOpts& g) {
  const ptx::UtdParams params =
      params_path.empty() ? ptx::UtdParams{} : ptx::load_utd_params(params_path);
  std::vector<ptx::FeatureMatrix> db;
  for (const std::string& f : sorted_feature_files(features_dir)) {
    db.push_back(ptx::load_features(f));
  }
  const std::vector<ptx::Match> matches = ptx::discover_matches(db, params, g.jobs);
  ptx::save_matches(matches, out_path);
  std::cerr << "discover: " << matches.size() << " matches over " << db.size()
            << " utterances\n";
  return kExitOk;
}

int cmd_cluster(const std::string& matches_path, double overlap, const std::string& out_path,
                const std::string& manifest_path) {
  const std::vector<ptx::Match> matches = ptx::load_matches(matches_path);
  ptx::Clustering clustering;
  if (manifest_path.empty()) {
    clustering = ptx::cluster_matches(matches, overlap);
  } else {
    const ptx::Corpus corpus = ptx::load_manifest(manifest_path);
    clustering = ptx::cluster_matches(
        matches, overlap, [&corpus](const std::string& id) { return corpus.rank(id); });
  }
  ptx::save_clusters(clustering, out_path);
  std::cerr << "cluster: " << clustering.clusters.size() << " clusters over "
            << clustering.num_occurrences() << " occurrences\n";
  return kExitOk;
}

int cmd_pseudotext(const std::string& clusters_path, bool oracle,
                   const std::string& manifest_path, const std::string& out_path) {
  const ptx::Corpus corpus = ptx::load_manifest(manifest_path);
  ptx::Pseudotext pt;
  if (oracle) {
    pt = ptx::generate_oracle_pseudotext(corpus);
  } else {
    if (clusters_path.empty()) {
      throw ptx::Error("pseudotext: need --clusters unless --oracle is given");
    }
    pt = ptx::generate_pseudotext(ptx::load_clusters(clusters_path), corpus);
  }
  ptx::save_pseudotext(pt, out_path);
  return kExitOk;
}

int cmd_split(const std::string& manifest_path, const std::string& mode, double ratio,
              const std::string& out_path, const GlobalOpts& g) {
  const ptx::Corpus corpus = ptx::load_manifest(manifest_path);
  const ptx::Split split =
      ptx::split_corpus(corpus, ptx::parse_split_mode(mode), ratio, g.seed);
  ptx::save_split(split, out_path);
  std::cerr << "split: " << split.train_ids.size() << " train / " << split.test_ids.size()
            << " test\n";
  return kExitOk;
}

int cmd_train(const std::string& pt_path, const std::string& manifest_path,
              const std::string& split_path, int iters, double alpha,
              const std::string& stopwords_path, const std::string& out_path) {
  const ptx::Pseudotext pt = ptx::load_pseudotext(pt_path);
  const ptx::Corpus corpus = ptx::load_manifest(manifest_path);
  const ptx::Split split = ptx::load_split(split_path);
  const ptx::StopwordList stopwords = stopwords_or_default(stopwords_path);
  const auto pairs = ptx::assemble_pairs(
      pt, split.train_ids, [&corpus](const std::string& id) { return corpus.at(id).translation; },
      stopwords);
  const ptx::TrainResult result = ptx::train(pairs, iters, alpha);
  for (std::size_t it = 0; it < result.log_likelihoods.size(); ++it) {
    std::cerr << ptx::strprintf("train: iteration %zu log-likelihood %.6f\n", it + 1,
                                result.log_likelihoods[it]);
  }
  ptx::save_translation_table(result.table, out_path);
  return kExitOk;
}

int cmd_translate(const std::string& model_path, const std::string& pt_path,
                  const std::string& split_path, int k, const std::string& out_path) {
  const ptx::TranslationTable table = ptx::load_translation_table(model_path);
  const ptx::Pseudotext pt = ptx::load_pseudotext(pt_path);
  const ptx::Split split = ptx::load_split(split_path);
  std::vector<ptx::Prediction> predictions;
  for (const auto& [id, labels] : pt.lines) {
    if (!split.test_ids.count(id)) continue;
    predictions.push_back(ptx::translate_utterance(table, id, labels, k));
  }
  ptx::save_predictions(predictions, out_path);
  std::cerr << "translate: " << predictions.size() << " test utterances at K=" << k << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& predictions_path, const std::string& manifest_path,
                 const std::string& stopwords_path, bool macro, const std::string& format,
                 const std::string& out_path) {
  const std::vector<ptx::Prediction> predictions = ptx::load_predictions(predictions_path);
  const ptx::Corpus corpus = ptx::load_manifest(manifest_path);
  const ptx::StopwordList stopwords = stopwords_or_default(stopwords_path);
  if (predictions.empty()) throw ptx::Error("evaluate: predictions file is empty");

  std::vector<ptx::EvalRecord> records;
  std::int64_t corr = 0, pred_tokens = 0, gold_tokens = 0;
  for (const ptx::Prediction& p : predictions) {
    records.push_back(ptx::make_record(p, corpus.at(p.utterance_id).translation, stopwords));
    corr += records.back().corr;
    pred_tokens += static_cast<std::int64_t>(ptx::multiset_size(records.back().pred_at_k));
    gold_tokens += static_cast<std::int64_t>(ptx::multiset_size(records.back().gold));
  }
  const ptx::PrecisionRecall pr = ptx::corpus_pr(records, macro);
  const int k = predictions.front().k;
  for (const ptx::Prediction& p : predictions) {
    if (p.k != k) throw ptx::Error("evaluate: predictions mix different K values");
  }

  std::string body;
  if (format == "tsv") {
    body = ptx::strprintf("k\tprecision\trecall\tcorr\tpred_tokens\tgold_tokens\n"
                          "%d\t%.6f\t%.6f\t%lld\t%lld\t%lld\n",
                          k, pr.precision, pr.recall, static_cast<long long>(corr),
                          static_cast<long long>(pred_tokens),
                          static_cast<long long>(gold_tokens));
  } else {
    body = ptx::strprintf("{\n  \"k\": %d,\n  \"precision\": %.9f,\n  \"recall\": %.9f,\n"
                          "  \"corr\": %lld,\n  \"pred_tokens\": %lld,\n  \"gold_tokens\": %lld,\n"
                          "  \"num_utterances\": %zu\n}\n",
                          k, pr.precision, pr.recall, static_cast<long long>(corr),
                          static_cast<long long>(pred_tokens),
                          static_cast<long long>(gold_tokens), records.size());
  }
  if (out_path.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ptx::Error("cannot write " + out_path);
    out << body;
  }
  return kExitOk;
}

int cmd_diagnose(const std::string& manifest_path, const std::string& matches_path,
                 const std::string& clusters_path, const std::string& train_pt_path,
                 const std::string& test_pt_path, double frame_shift_ms,
                 const std::string& format, const std::string& out_path) {
  const ptx::Corpus corpus = ptx::load_manifest(manifest_path);
  const bool aligned =
      std::all_of(corpus.utterances().begin(), corpus.utterances().end(),
                  [](const ptx::Utterance& u) { return u.word_alignment.has_value(); });

  std::optional<double> purity, coverage;
  std::optional<ptx::ClusterCounts> counts;
  std::optional<ptx::LocalityTable> locality;
  std::optional<ptx::OovStats> oov;

  if (!clusters_path.empty()) {
    const ptx::Clustering clustering = ptx::load_clusters(clusters_path);
    coverage = ptx::audio_coverage(clustering, corpus, frame_shift_ms);
    if (aligned) {
      purity = ptx::cluster_purity(clustering, corpus, frame_shift_ms);
      counts = ptx::cluster_mapping_stats(clustering, corpus, frame_shift_ms);
    }
  }
  if (!matches_path.empty()) {
    locality = ptx::match_locality(ptx::load_matches(matches_path), corpus, frame_shift_ms);
  }
  if (!train_pt_path.empty() && !test_pt_path.empty()) {
    oov = ptx::oov_stats(ptx::load_pseudotext(train_pt_path), ptx::load_pseudotext(test_pt_path));
  }

  std::string body;
  if (format == "tsv") {
    std::string s;
    if (locality) {
      s += "# locality\nmetric\twithin_utterance\twithin_call\tcross_call\n";
      s += "match_share";
      for (auto which : {ptx::MatchLocality::within_utterance, ptx::MatchLocality::within_call,
                         ptx::MatchLocality::cross_call}) {
        s += ptx::strprintf("\t%.6f", locality->at(which).match_share);
      }
      s += "\naccuracy";
      for (auto which : {ptx::MatchLocality::within_utterance, ptx::MatchLocality::within_call,
                         ptx::MatchLocality::cross_call}) {
        const auto& acc = locality->at(which).accuracy;
        s += acc ? ptx::strprintf("\t%.6f", *acc) : "\t-";
      }
      s += "\n";
    }
    if (oov) {
      s += ptx::strprintf("# oov\ntokens\trate\n%lld\t%.6f\n",
                          static_cast<long long>(oov->tokens), oov->rate);
    }
    if (purity) s += ptx::strprintf("# purity\n%.6f\n", *purity);
    if (coverage) s += ptx::strprintf("# coverage\n%.6f\n", *coverage);
    if (counts) {
      s += ptx::strprintf("# cluster_counts\nnum_clusters\tone_to_one\tmany_to_one_types\t"
                          "uncovered_gold_types\n%lld\t%lld\t%lld\t%lld\n",
                          static_cast<long long>(counts->num_clusters),
                          static_cast<long long>(counts->one_to_one),
                          static_cast<long long>(counts->many_to_one_types),
                          static_cast<long long>(counts->uncovered_gold_types));
    }
    body = s;
  } else {
    std::string s = "{\n";
    bool first = true;
    auto field = [&](const std::string& text) {
      if (!first) s += ",\n";
      s += text;
      first = false;
    };
    if (purity) field(ptx::strprintf("  \"purity\": %.9f", *purity));
    if (coverage) field(ptx::strprintf("  \"coverage\": %.9f", *coverage));
    if (oov) {
      field(ptx::strprintf("  \"oov\": {\"tokens\": %lld, \"rate\": %.9f}",
                           static_cast<long long>(oov->tokens), oov->rate));
    }
    if (locality) {
      std::string loc = "  \"locality\": {";
      bool loc_first = true;
      for (const auto& [which, stats] : *locality) {
        if (!loc_first) loc += ", ";
        loc_first = false;
        loc += "\"" + ptx::locality_name(which) + "\": {";
        loc += ptx::strprintf("\"count\": %lld, \"match_share\": %.9f, \"accuracy\": ",
                              static_cast<long long>(stats.count), stats.match_share);
        loc += stats.accuracy ? ptx::strprintf("%.9f", *stats.accuracy) : "null";
        loc += "}";
      }
      loc += "}";
      field(loc);
    }
    if (counts) {
      field(ptx::strprintf("  \"cluster_counts\": {\"num_clusters\": %lld, \"one_to_one\": %lld, "
                           "\"many_to_one_types\": %lld, \"uncovered_gold_types\": %lld}",
                           static_cast<long long>(counts->num_clusters),
                           static_cast<long long>(counts->one_to_one),
                           static_cast<long long>(counts->many_to_one_types),
                           static_cast<long long>(counts->uncovered_gold_types)));
    }
    s += "\n}\n";
    body = s;
  }
  if (out_path.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ptx::Error("cannot write " + out_path);
    out << body;
  }
  return kExitOk;
}

int cmd_run_all(const std::string& manifest_path, const std::string& features_dir,
                const std::string& split_mode, double ratio, bool oracle,
                const std::vector<int>& ks, int iters, double alpha, double overlap,
                const std::string& utd_params_path, const std::string& stopwords_path,
                bool macro, const GlobalOpts& g) {
  const ptx::Corpus corpus = ptx::load_manifest(manifest_path);
  ptx::PipelineConfig config;
  config.out_dir = g.out_dir;
  config.split_mode = ptx::parse_split_mode(split_mode);
  config.ratio = ratio;
  config.seed = g.seed;
  config.oracle = oracle;
  if (!utd_params_path.empty()) config.utd = ptx::load_utd_params(utd_params_path);
  config.overlap_threshold = overlap;
  config.iterations = iters;
  config.alpha = alpha;
  config.ks = ks;
  config.jobs = g.jobs;
  config.macro = macro;
  config.stopwords = stopwords_or_default(stopwords_path);

  const std::string manifest_dir = fs::path(manifest_path).parent_path().string();
  const ptx::DataSources sources = ptx::file_sources(corpus, features_dir, manifest_dir);
  const ptx::RunReport report = ptx::run_pipeline(corpus, sources, config);

  for (const ptx::KResult& kr : report.k_results) {
    std::cerr << ptx::strprintf("run-all [%s]: P@%d %.4f R@%d %.4f\n", report.mode.c_str(), kr.k,
                                kr.pr.precision, kr.k, kr.pr.recall);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ptx: unsupervised term discovery + bag-of-words translation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--out-dir", g.out_dir, "Output directory for stages that write multiple files");
  app.add_option("--jobs", g.jobs, "Worker threads for parallel stages")->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed (splitting, synthesis)");

  std::string synth_config;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted words");
  synth->add_option("--config", synth_config, "Synth config JSON");

  std::string feat_manifest, feat_config;
  auto* features = app.add_subcommand("features", "Extract MFCC features from wav files");
  features->add_option("--manifest", feat_manifest, "Corpus manifest")->required();
  features->add_option("--config", feat_config, "Feature config JSON");

  std::string disc_dir, disc_params, disc_out;
  auto* discover = app.add_subcommand("discover", "Discover repeated acoustic patterns");
  discover->add_option("--features-dir", disc_dir, "Directory of .ptft files")->required();
  discover->add_option("--params", disc_params, "UTD params JSON");
  discover->add_option("--out", disc_out, "Output matches TSV")->required();

  std::string clu_matches, clu_out, clu_manifest;
  double clu_overlap = 0.5;
  auto* cluster = app.add_subcommand("cluster", "Cluster matched segments into pseudoterms");
  cluster->add_option("--matches", clu_matches, "Matches TSV")->required();
  cluster->add_option("--overlap", clu_overlap, "Fractional overlap threshold");
  cluster->add_option("--manifest", clu_manifest, "Manifest (for label ordering)");
  cluster->add_option("--out", clu_out, "Output clusters JSON")->required();

  std::string pt_clusters, pt_manifest, pt_out;
  bool pt_oracle = false;
  auto* pseudotext = app.add_subcommand("pseudotext", "Emit per-utterance pseudoterm sequences");
  pseudotext->add_option("--clusters", pt_clusters, "Clusters JSON");
  pseudotext->add_flag("--oracle", pt_oracle, "Use gold transcripts instead of clusters");
  pseudotext->add_option("--manifest", pt_manifest, "Corpus manifest")->required();
  pseudotext->add_option("--out", pt_out, "Output pseudotext file")->required();

  std::string spl_manifest, spl_mode = "utterance", spl_out;
  double spl_ratio = 0.9;
  auto* split = app.add_subcommand("split", "Create a train/test split");
  split->add_option("--manifest", spl_manifest, "Corpus manifest")->required();
  split->add_option("--mode", spl_mode, "call or utterance");
  split->add_option("--ratio", spl_ratio, "Train fraction");
  split->add_option("--out", spl_out, "Output split JSON")->required();

  std::string tr_pt, tr_manifest, tr_split, tr_stopwords, tr_out;
  int tr_iters = 5;
  double tr_alpha = 0.01;
  auto* train = app.add_subcommand("train", "Train the Model 1 translation table");
  train->add_option("--pseudotext", tr_pt, "Pseudotext file")->required();
  train->add_option("--manifest", tr_manifest, "Corpus manifest (translations)")->required();
  train->add_option("--split", tr_split, "Split JSON (train side is used)")->required();
  train->add_option("--iters", tr_iters, "EM iterations");
  train->add_option("--alpha", tr_alpha, "Dirichlet prior hyperparameter");
  train->add_option("--stopwords", tr_stopwords, "Stopword file (default: bundled list)");
  train->add_option("--out", tr_out, "Output model TSV")->required();

  std::string xl_model, xl_pt, xl_split, xl_out;
  int xl_k = 1;
  auto* translate = app.add_subcommand("translate", "Translate test-side pseudotext");
  translate->add_option("--model", xl_model, "Model TSV")->required();
  translate->add_option("--pseudotext", xl_pt, "Pseudotext file")->required();
  translate->add_option("--split", xl_split, "Split JSON (test side is used)")->required();
  translate->add_option("--k", xl_k, "Guesses per pseudoterm")->check(CLI::PositiveNumber);
  translate->add_option("--out", xl_out, "Output predictions JSONL")->required();

  std::string ev_preds, ev_manifest, ev_stopwords, ev_format = "json", ev_out;
  bool ev_macro = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against translations");
  evaluate->add_option("--predictions", ev_preds, "Predictions JSONL")->required();
  evaluate->add_option("--manifest", ev_manifest, "Corpus manifest")->required();
  evaluate->add_option("--stopwords", ev_stopwords, "Stopword file");
  evaluate->add_flag("--macro", ev_macro, "Macro-average instead of micro");
  evaluate->add_option("--format", ev_format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}));
  evaluate->add_option("--out", ev_out, "Output file (default stdout)");

  std::string dg_manifest, dg_matches, dg_clusters, dg_train_pt, dg_test_pt;
  std::string dg_format = "json", dg_out;
  double dg_shift = 10.0;
  auto* diagnose = app.add_subcommand("diagnose", "Purity, coverage, OOV and locality reports");
  diagnose->add_option("--manifest", dg_manifest, "Corpus manifest")->required();
  diagnose->add_option("--matches", dg_matches, "Matches TSV (locality)");
  diagnose->add_option("--clusters", dg_clusters, "Clusters JSON (purity, coverage)");
  diagnose->add_option("--train-pseudotext", dg_train_pt, "Train-side pseudotext (OOV)");
  diagnose->add_option("--test-pseudotext", dg_test_pt, "Test-side pseudotext (OOV)");
  diagnose->add_option("--frame-shift-ms", dg_shift, "Frame shift for time alignment");
  diagnose->add_option("--format", dg_format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}));
  diagnose->add_option("--out", dg_out, "Output file (default stdout)");

  std::string ra_manifest, ra_features_dir, ra_mode = "call", ra_utd_params, ra_stopwords;
  double ra_ratio = 0.9, ra_alpha = 0.01, ra_overlap = 0.5;
  int ra_iters = 5;
  bool ra_oracle = false, ra_macro = false;
  std::vector<int> ra_ks{1, 5};
  auto* run_all = app.add_subcommand("run-all", "Run the full pipeline into --out-dir");
  run_all->add_option("--manifest", ra_manifest, "Corpus manifest")->required();
  run_all->add_option("--features-dir", ra_features_dir, "Directory of .ptft files");
  run_all->add_option("--split-mode", ra_mode, "call or utterance");
  run_all->add_option("--ratio", ra_ratio, "Train fraction");
  run_all->add_flag("--oracle", ra_oracle, "Oracle pseudotext from transcripts");
  run_all->add_option("--k", ra_ks, "Guesses per pseudoterm (repeatable or comma separated)")
      ->delimiter(',');
  run_all->add_option("--iters", ra_iters, "EM iterations");
  run_all->add_option("--alpha", ra_alpha, "Dirichlet prior hyperparameter");
  run_all->add_option("--overlap", ra_overlap, "Cluster overlap threshold");
  run_all->add_option("--utd-params", ra_utd_params, "UTD params JSON");
  run_all->add_option("--stopwords", ra_stopwords, "Stopword file");
  run_all->add_flag("--macro", ra_macro, "Macro-average P/R");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadArgs;
  }

  try {
    if (*synth) {
      if (g.out_dir.empty()) throw ptx::Error("synth: --out-dir is required");
      return cmd_synth(synth_config, g, seed_opt->count() > 0);
    }
    if (*features) {
      if (g.out_dir.empty()) throw ptx::Error("features: --out-dir is required");
      return cmd_features(feat_manifest, feat_config, g);
    }
    if (*discover) return cmd_discover(disc_dir, disc_params, disc_out, g);
    if (*cluster) return cmd_cluster(clu_matches, clu_overlap, clu_out, clu_manifest);
    if (*pseudotext) return cmd_pseudotext(pt_clusters, pt_oracle, pt_manifest, pt_out);
    if (*split) return cmd_split(spl_manifest, spl_mode, spl_ratio, spl_out, g);
    if (*train) {
      return cmd_train(tr_pt, tr_manifest, tr_split, tr_iters, tr_alpha, tr_stopwords, tr_out);
    }
    if (*translate) return cmd_translate(xl_model, xl_pt, xl_split, xl_k, xl_out);
    if (*evaluate) {
      return cmd_evaluate(ev_preds, ev_manifest, ev_stopwords, ev_macro, ev_format, ev_out);
    }
    if (*diagnose) {
      return cmd_diagnose(dg_manifest, dg_matches, dg_clusters, dg_train_pt, dg_test_pt, dg_shift,
                          dg_format, dg_out);
    }
    if (*run_all) {
      if (g.out_dir.empty()) throw ptx::Error("run-all: --out-dir is required");
      return cmd_run_all(ra_manifest, ra_features_dir, ra_mode, ra_ratio, ra_oracle, ra_ks,
                         ra_iters, ra_alpha, ra_overlap, ra_utd_params, ra_stopwords, ra_macro, g);
    }
  } catch (const ptx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageFailure;
  }
  return kExitBadArgs;
}
