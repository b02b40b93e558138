#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ptx/cluster.hpp"
#include "ptx/corpus.hpp"

namespace ptx {

/// Per-utterance label sequences: a partial, noisy stand-in transcription.
/// Lines are kept in corpus (or file) order; utterances with no labels stay
/// present with an empty sequence.
struct Pseudotext {
  enum class Source { utd, oracle };

  Source source = Source::utd;
  std::vector<std::pair<std::string, std::vector<std::string>>> lines;

  const std::vector<std::string>* find(const std::string& utterance_id) const;
  void rebuild_index();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

/// Labels of each utterance's occurrences, ordered by (start, end, label).
Pseudotext generate_pseudotext(const Clustering& clustering, const Corpus& corpus);

/// Perfect-clustering simulation from gold transcripts: each line is the
/// tokenized transcript, so every source word type is its own pure cluster.
Pseudotext generate_oracle_pseudotext(const Corpus& corpus);

/// Same, with transcripts fetched per utterance id (lets callers route the
/// access through an observable source).
Pseudotext generate_oracle_pseudotext(
    const std::vector<std::string>& utterance_ids,
    const std::function<std::optional<std::string>(const std::string&)>& transcript);

// --- file format: one line per utterance, "utterance_id<TAB>label label ..." ---
void save_pseudotext(const Pseudotext& pt, const std::string& path);
Pseudotext load_pseudotext(const std::string& path, Pseudotext::Source source = Pseudotext::Source::utd);

}  // namespace ptx
