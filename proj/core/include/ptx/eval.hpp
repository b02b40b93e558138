#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptx/cluster.hpp"
#include "ptx/corpus.hpp"
#include "ptx/pseudotext.hpp"
#include "ptx/translate.hpp"

namespace ptx {

/// Word multiset as type -> count.
using Multiset = std::map<std::string, int>;

Multiset to_multiset(const std::vector<std::string>& words);
std::size_t multiset_size(const Multiset& m);

struct EvalRecord {
  std::string utterance_id;
  Multiset pred_at_k;
  Multiset gold;
  int corr = 0;
};

/// Content words of the reference translation; falls back to the full token
/// multiset when stopword filtering empties a nonempty translation.
Multiset gold_set(const std::string& translation, const StopwordList& stopwords);

/// |pred ∩ gold| under multiset intersection (per-type min of counts).
int corr_at_k(const Multiset& pred, const Multiset& gold);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Micro-averaged corpus precision/recall; macro (mean of per-utterance
/// ratios) behind the flag.
PrecisionRecall corpus_pr(const std::vector<EvalRecord>& records, bool macro = false);

EvalRecord make_record(const Prediction& prediction, const std::string& translation,
                       const StopwordList& stopwords);

// --- diagnostics over gold alignments ---

/// Gold word whose time span maximally overlaps the segment; empty string
/// when nothing overlaps. Ties go to the earlier word.
std::string overlap_label(const Segment& segment, const Utterance& utterance,
                          double frame_shift_ms);

/// Occurrence-weighted purity: the share of occurrences matching their
/// cluster's plurality label (plurality ties resolved to the
/// lexicographically smallest label).
double cluster_purity(const Clustering& clustering, const Corpus& corpus, double frame_shift_ms);

/// Fraction of frames covered by at least one occurrence; per-utterance
/// frame counts are derived from duration_s at the given shift.
double audio_coverage(const Clustering& clustering, const Corpus& corpus, double frame_shift_ms);

struct OovStats {
  std::int64_t tokens = 0;
  double rate = 0.0;
};

/// Test tokens whose type never occurs in the training lines.
OovStats oov_stats(const Pseudotext& train, const Pseudotext& test);

enum class MatchLocality { within_utterance, within_call, cross_call };

struct LocalityStats {
  std::int64_t count = 0;
  double match_share = 0.0;
  std::optional<double> accuracy;  // absent without alignments or matches
};

using LocalityTable = std::map<MatchLocality, LocalityStats>;

LocalityTable match_locality(const std::vector<Match>& matches, const Corpus& corpus,
                             double frame_shift_ms);

struct ClusterCounts {
  std::int64_t num_clusters = 0;
  std::int64_t one_to_one = 0;          // pure clusters whose plurality label is theirs alone
  std::int64_t many_to_one_types = 0;   // distinct plurality labels over the remaining clusters
  std::int64_t uncovered_gold_types = 0;
};

ClusterCounts cluster_mapping_stats(const Clustering& clustering, const Corpus& corpus,
                                    double frame_shift_ms);

std::string locality_name(MatchLocality locality);

}  // namespace ptx
