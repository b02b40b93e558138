#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ptx/utd.hpp"

namespace ptx {

/// One merged segment occurrence; the node of the match graph.
struct Occurrence {
  int node_id = 0;
  Segment segment;
};

/// Hard partition of occurrences into pseudoterm clusters, labels c1..cM.
struct Clustering {
  std::vector<std::pair<std::string, std::vector<Occurrence>>> clusters;
  double overlap_threshold = 0.5;
  double score_threshold = 0.0;

  std::size_t num_occurrences() const {
    std::size_t n = 0;
    for (const auto& [label, occ] : clusters) n += occ.size();
    return n;
  }
};

/// Identifies each match side with a node, merging sides on the same
/// utterance whose fractional overlap |x∩y| / min(|x|,|y|) >= rho
/// (transitively, via union-find). A merged node's extent is the interval
/// union of its member sides. side_map[2*m] and side_map[2*m+1] give the
/// node ids of match m's a and b sides.
struct MergeResult {
  std::vector<Occurrence> nodes;
  std::vector<int> side_map;
};
MergeResult merge_overlapping(const std::vector<Match>& matches, double rho);

/// Connected components of the node graph with one edge per match. Labels
/// are assigned c1, c2, ... in order of each component's earliest occurrence
/// under `utt_rank` (utterance manifest order when available, lexicographic
/// id order otherwise), then start_frame.
Clustering connected_components(const MergeResult& merged, const std::vector<Match>& matches,
                                const std::function<std::size_t(const std::string&)>& utt_rank = {});

/// merge_overlapping + connected_components.
Clustering cluster_matches(const std::vector<Match>& matches, double rho,
                           const std::function<std::size_t(const std::string&)>& utt_rank = {});

// --- file format: JSON map {"c1": [{"utt":..., "start":..., "end":...}, ...]} ---
void save_clusters(const Clustering& clustering, const std::string& path);
Clustering load_clusters(const std::string& path);

}  // namespace ptx
