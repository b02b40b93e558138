#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ptx/features.hpp"

namespace ptx {

struct Segment {
  std::string utterance_id;
  int start_frame = 0;
  int end_frame = 0;  // exclusive

  int length() const { return end_frame - start_frame; }
  auto key() const { return std::tie(utterance_id, start_frame, end_frame); }
  bool operator==(const Segment&) const = default;
};

inline bool operator<(const Segment& a, const Segment& b) { return a.key() < b.key(); }

/// One discovered pair of acoustically similar segments. Canonical
/// orientation: a <= b under (utterance_id, start, end) ordering.
struct Match {
  Segment a;
  Segment b;
  double score = 0.0;  // mean per-step cosine along the DTW path, clamped to [0, 1]
};

struct UtdParams {
  double sim_threshold = 0.80;      // per-cell cosine threshold for seeding
  int min_seed_frames = 30;         // ~0.3 s at 10 ms shift
  int max_gap_frames = 5;
  int band_radius_frames = 10;
  double dtw_score_threshold = 0.85;
  int min_match_frames = 50;        // ~0.5 s
  int max_match_frames = 300;
};

void validate(const UtdParams& p);

/// Dense Ta x Tb matrix of frame cosine similarities.
struct SimilarityMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;  // row-major

  float at(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }
};

/// S[i][j] = cos(A_i, B_j); zero-norm frames yield 0.
SimilarityMatrix cosine_similarity_matrix(const FeatureMatrix& a, const FeatureMatrix& b);

/// A run of above-threshold cells along one diagonal of a similarity matrix.
/// offset = j - i; the run spans rows [i_start, i_end).
struct Seed {
  int offset = 0;
  int i_start = 0;
  int i_end = 0;
};

/// Scans every diagonal for runs of cells >= sim_threshold whose internal
/// gaps are each <= max_gap_frames and whose span is >= min_seed_frames.
/// Output sorted by (offset, i_start).
std::vector<Seed> find_diagonal_seeds(const SimilarityMatrix& s, const UtdParams& params);

/// Band-constrained DTW around the seed diagonal with greedy outward
/// extension of the segment boundaries. Returns a match only if both sides
/// are within [min_match_frames, max_match_frames], the path-mean similarity
/// is >= dtw_score_threshold, and same-utterance segments do not overlap.
std::optional<Match> refine_match_dtw(const FeatureMatrix& a, const FeatureMatrix& b,
                                      const Seed& seed, const UtdParams& params);

/// All-pairs discovery (every unordered pair, including each utterance with
/// itself). Duplicates are collapsed keeping the max score; output is in
/// canonical order and independent of the processing schedule.
std::vector<Match> discover_matches(const std::vector<FeatureMatrix>& db, const UtdParams& params,
                                    int jobs = 1);

// --- file formats ---

/// TSV with header: utt_a start_a end_a utt_b start_b end_b score (6 decimals).
void save_matches(const std::vector<Match>& matches, const std::string& path);
std::vector<Match> load_matches(const std::string& path);

UtdParams load_utd_params(const std::string& path);
void save_utd_params(const UtdParams& params, const std::string& path);

}  // namespace ptx
