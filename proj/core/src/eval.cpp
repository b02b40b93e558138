#include "ptx/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ptx/util.hpp"

namespace ptx {

Multiset to_multiset(const std::vector<std::string>& words) {
  Multiset m;
  for (const auto& w : words) ++m[w];
  return m;
}

std::size_t multiset_size(const Multiset& m) {
  std::size_t n = 0;
  for (const auto& [w, c] : m) n += static_cast<std::size_t>(c);
  return n;
}

Multiset gold_set(const std::string& translation, const StopwordList& stopwords) {
  const std::vector<std::string> tokens = tokenize(translation);
  const std::vector<std::string> content = filter_stopwords(tokens, stopwords);
  if (!content.empty()) return to_multiset(content);
  if (!tokens.empty()) return to_multiset(tokens);  // no content words: keep the stopwords
  return {};
}

int corr_at_k(const Multiset& pred, const Multiset& gold) {
  int corr = 0;
  for (const auto& [w, c] : pred) {
    auto it = gold.find(w);
    if (it != gold.end()) corr += std::min(c, it->second);
  }
  return corr;
}

PrecisionRecall corpus_pr(const std::vector<EvalRecord>& records, bool macro) {
  if (records.empty()) throw Error("corpus_pr: no records");
  PrecisionRecall pr;
  if (macro) {
    double p_sum = 0.0, r_sum = 0.0;
    for (const EvalRecord& r : records) {
      const auto np = multiset_size(r.pred_at_k);
      const auto ng = multiset_size(r.gold);
      p_sum += np == 0 ? 0.0 : static_cast<double>(r.corr) / static_cast<double>(np);
      r_sum += ng == 0 ? 0.0 : static_cast<double>(r.corr) / static_cast<double>(ng);
    }
    pr.precision = p_sum / static_cast<double>(records.size());
    pr.recall = r_sum / static_cast<double>(records.size());
  } else {
    std::int64_t corr = 0, pred = 0, gold = 0;
    for (const EvalRecord& r : records) {
      corr += r.corr;
      pred += static_cast<std::int64_t>(multiset_size(r.pred_at_k));
      gold += static_cast<std::int64_t>(multiset_size(r.gold));
    }
    pr.precision = pred == 0 ? 0.0 : static_cast<double>(corr) / static_cast<double>(pred);
    pr.recall = gold == 0 ? 0.0 : static_cast<double>(corr) / static_cast<double>(gold);
  }
  return pr;
}

EvalRecord make_record(const Prediction& prediction, const std::string& translation,
                       const StopwordList& stopwords) {
  EvalRecord record;
  record.utterance_id = prediction.utterance_id;
  record.pred_at_k = to_multiset(prediction.words);
  record.gold = gold_set(translation, stopwords);
  record.corr = corr_at_k(record.pred_at_k, record.gold);
  return record;
}

std::string overlap_label(const Segment& segment, const Utterance& utterance,
                          double frame_shift_ms) {
  if (!utterance.word_alignment) {
    throw Error("overlap_label: utterance \"" + utterance.utterance_id + "\" has no alignment");
  }
  const double start_s = segment.start_frame * frame_shift_ms / 1000.0;
  const double end_s = segment.end_frame * frame_shift_ms / 1000.0;
  std::string best;
  double best_overlap = 0.0;
  for (const AlignedWord& w : *utterance.word_alignment) {
    const double overlap = std::min(end_s, w.end_s) - std::max(start_s, w.start_s);
    if (overlap > best_overlap) {  // strict: ties keep the earlier word
      best_overlap = overlap;
      best = w.word;
    }
  }
  return best;
}

namespace {

// Labels for every occurrence of one cluster, plus the plurality label
// (ties to the lexicographically smallest label).
struct LabeledCluster {
  std::vector<std::string> labels;
  std::string plurality;
  std::int64_t agreeing = 0;
};

LabeledCluster label_cluster(const std::vector<Occurrence>& occs, const Corpus& corpus,
                             double frame_shift_ms) {
  LabeledCluster lc;
  std::map<std::string, std::int64_t> votes;
  for (const Occurrence& o : occs) {
    std::string label = overlap_label(o.segment, corpus.at(o.segment.utterance_id),
                                      frame_shift_ms);
    ++votes[label];
    lc.labels.push_back(std::move(label));
  }
  for (const auto& [label, count] : votes) {
    if (count > lc.agreeing) {  // map order makes ties lexicographic-smallest
      lc.agreeing = count;
      lc.plurality = label;
    }
  }
  return lc;
}

}  // namespace

double cluster_purity(const Clustering& clustering, const Corpus& corpus,
                      double frame_shift_ms) {
  std::int64_t agree = 0, total = 0;
  for (const auto& [label, occs] : clustering.clusters) {
    const LabeledCluster lc = label_cluster(occs, corpus, frame_shift_ms);
    agree += lc.agreeing;
    total += static_cast<std::int64_t>(occs.size());
  }
  return total == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(total);
}

double audio_coverage(const Clustering& clustering, const Corpus& corpus,
                      double frame_shift_ms) {
  std::map<std::string, std::vector<std::pair<int, int>>> intervals;
  for (const auto& [label, occs] : clustering.clusters) {
    for (const Occurrence& o : occs) {
      intervals[o.segment.utterance_id].push_back({o.segment.start_frame, o.segment.end_frame});
    }
  }
  std::int64_t covered = 0, total = 0;
  for (const Utterance& u : corpus.utterances()) {
    const auto frames = static_cast<std::int64_t>(std::llround(u.duration_s * 1000.0 / frame_shift_ms));
    total += frames;
    auto it = intervals.find(u.utterance_id);
    if (it == intervals.end()) continue;
    auto& spans = it->second;
    std::sort(spans.begin(), spans.end());
    std::int64_t end = 0;
    for (auto [s, e] : spans) {
      const std::int64_t cs = std::max<std::int64_t>(std::max(s, 0), end);
      const std::int64_t ce = std::min<std::int64_t>(e, frames);
      if (ce > cs) covered += ce - cs;
      end = std::max(end, ce);
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
}

OovStats oov_stats(const Pseudotext& train, const Pseudotext& test) {
  std::set<std::string> train_vocab;
  for (const auto& [id, labels] : train.lines) train_vocab.insert(labels.begin(), labels.end());
  OovStats stats;
  std::int64_t total = 0;
  for (const auto& [id, labels] : test.lines) {
    for (const auto& label : labels) {
      ++total;
      if (!train_vocab.count(label)) ++stats.tokens;
    }
  }
  stats.rate = total == 0 ? 0.0 : static_cast<double>(stats.tokens) / static_cast<double>(total);
  return stats;
}

LocalityTable match_locality(const std::vector<Match>& matches, const Corpus& corpus,
                             double frame_shift_ms) {
  LocalityTable table;
  for (auto loc :
       {MatchLocality::within_utterance, MatchLocality::within_call, MatchLocality::cross_call}) {
    table[loc] = {};
  }
  struct Tally {
    std::int64_t correct = 0;
    std::int64_t labeled = 0;
  };
  std::map<MatchLocality, Tally> tallies;
  const bool have_alignments = [&] {
    for (const Utterance& u : corpus.utterances()) {
      if (!u.word_alignment) return false;
    }
    return !corpus.empty();
  }();

  for (const Match& m : matches) {
    const Utterance& ua = corpus.at(m.a.utterance_id);
    const Utterance& ub = corpus.at(m.b.utterance_id);
    MatchLocality loc;
    if (m.a.utterance_id == m.b.utterance_id) {
      loc = MatchLocality::within_utterance;
    } else if (ua.call_id == ub.call_id) {
      loc = MatchLocality::within_call;
    } else {
      loc = MatchLocality::cross_call;
    }
    ++table[loc].count;
    if (have_alignments) {
      const std::string la = overlap_label(m.a, ua, frame_shift_ms);
      const std::string lb = overlap_label(m.b, ub, frame_shift_ms);
      ++tallies[loc].labeled;
      if (!la.empty() && la == lb) ++tallies[loc].correct;
    }
  }

  for (auto& [loc, stats] : table) {
    stats.match_share =
        matches.empty() ? 0.0
                        : static_cast<double>(stats.count) / static_cast<double>(matches.size());
    if (have_alignments && stats.count > 0) {
      stats.accuracy = static_cast<double>(tallies[loc].correct) /
                       static_cast<double>(tallies[loc].labeled);
    }
  }
  return table;
}

ClusterCounts cluster_mapping_stats(const Clustering& clustering, const Corpus& corpus,
                                    double frame_shift_ms) {
  ClusterCounts counts;
  counts.num_clusters = static_cast<std::int64_t>(clustering.clusters.size());

  std::set<std::string> gold_types;
  for (const Utterance& u : corpus.utterances()) {
    if (!u.word_alignment) {
      throw Error("cluster_mapping_stats: utterance \"" + u.utterance_id +
                  "\" has no alignment");
    }
    for (const AlignedWord& w : *u.word_alignment) gold_types.insert(w.word);
  }

  std::map<std::string, std::int64_t> plurality_owners;  // label -> clusters with it
  std::vector<std::pair<std::string, bool>> cluster_info;  // (plurality, all members agree)
  for (const auto& [label, occs] : clustering.clusters) {
    const LabeledCluster lc = label_cluster(occs, corpus, frame_shift_ms);
    const bool pure = lc.agreeing == static_cast<std::int64_t>(occs.size());
    if (!lc.plurality.empty()) ++plurality_owners[lc.plurality];
    cluster_info.push_back({lc.plurality, pure});
  }

  std::set<std::string> many_to_one_labels;
  for (const auto& [plurality, pure] : cluster_info) {
    if (plurality.empty()) continue;  // cluster of unlabeled occurrences
    if (pure && plurality_owners[plurality] == 1) {
      ++counts.one_to_one;
    } else {
      many_to_one_labels.insert(plurality);
    }
  }
  counts.many_to_one_types = static_cast<std::int64_t>(many_to_one_labels.size());

  std::set<std::string> covered;
  for (const auto& [label, owners] : plurality_owners) covered.insert(label);
  for (const auto& g : gold_types) {
    if (!covered.count(g)) ++counts.uncovered_gold_types;
  }
  return counts;
}

std::string locality_name(MatchLocality locality) {
  switch (locality) {
    case MatchLocality::within_utterance:
      return "within_utterance";
    case MatchLocality::within_call:
      return "within_call";
    case MatchLocality::cross_call:
      return "cross_call";
  }
  throw Error("unknown locality");
}

}  // namespace ptx
