#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ptx/corpus.hpp"
#include "ptx/eval.hpp"
#include "ptx/features.hpp"
#include "ptx/model1.hpp"
#include "ptx/pseudotext.hpp"
#include "ptx/utd.hpp"

namespace ptx {

/// Where each stage gets its data. Stages only ever touch the accessor they
/// are entitled to (discovery: features; training: train-side translations;
/// evaluation: test-side translations), so tests can wrap these with
/// recorders and assert the information flow.
struct DataSources {
  std::function<FeatureMatrix(const std::string& utterance_id)> features;
  std::function<std::string(const std::string& utterance_id)> translation;
  std::function<std::optional<std::string>(const std::string& utterance_id)> transcript;
};

/// File-backed sources. Feature path resolution: with a nonempty
/// features_dir, features_dir/<filename of features_ref>; otherwise the
/// features_ref itself, resolved against manifest_dir when relative. Text
/// comes from the manifest fields.
DataSources file_sources(const Corpus& corpus, const std::string& features_dir = "",
                         const std::string& manifest_dir = "");

struct PipelineConfig {
  std::string out_dir;
  SplitMode split_mode = SplitMode::call;
  double ratio = 0.9;
  std::int64_t seed = 0;
  bool oracle = false;
  UtdParams utd;
  double overlap_threshold = 0.5;
  int iterations = 5;
  double alpha = 0.01;
  std::vector<int> ks = {1, 5};
  int jobs = 1;
  bool macro = false;
  StopwordList stopwords = StopwordList::default_english();
  double frame_shift_ms = 10.0;  // used when no features pass through (oracle diagnostics)
};

struct KResult {
  int k = 1;
  PrecisionRecall pr;
  std::int64_t corr = 0;
  std::int64_t pred_tokens = 0;
  std::int64_t gold_tokens = 0;
};

struct RunReport {
  std::string mode;
  std::vector<KResult> k_results;
  std::optional<double> purity;
  std::optional<double> coverage;
  OovStats oov;
  std::optional<LocalityTable> locality;
  std::optional<ClusterCounts> cluster_counts;
  std::vector<double> train_log_likelihoods;
  std::size_t num_matches = 0;
  std::size_t num_clusters = 0;
};

/// Builds Model 1 training pairs for the given side of the split. A target
/// that loses every token to stopword filtering falls back to the full token
/// list so the pair still contributes.
std::vector<ParallelPair> assemble_pairs(
    const Pseudotext& pt, const std::set<std::string>& side_ids,
    const std::function<std::string(const std::string&)>& translation,
    const StopwordList& stopwords);

/// Full protocol: term discovery over the combined audio, training on the
/// train side only, translation and evaluation on the test side. Writes all
/// stage outputs plus run.json and report.json under config.out_dir.
RunReport run_pipeline(const Corpus& corpus, const DataSources& sources,
                       const PipelineConfig& config);

void save_report(const RunReport& report, const PipelineConfig& config, const std::string& path);

}  // namespace ptx
