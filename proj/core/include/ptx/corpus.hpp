#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace ptx {

/// One aligned word in a gold transcript. Times are seconds from utterance start.
struct AlignedWord {
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct Utterance {
  std::string utterance_id;
  std::string call_id;
  std::string speaker_id;
  std::string features_ref;  // path to the feature file for this utterance
  double duration_s = 0.0;
  std::string translation;                          // target-language text
  std::optional<std::string> transcript;            // source text, diagnostics only
  std::optional<std::vector<AlignedWord>> word_alignment;
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Utterance> utterances);

  const std::vector<Utterance>& utterances() const { return utterances_; }
  std::size_t size() const { return utterances_.size(); }
  bool empty() const { return utterances_.empty(); }

  const Utterance& at(const std::string& utterance_id) const;
  bool contains(const std::string& utterance_id) const;
  /// Position of the utterance in manifest order.
  std::size_t rank(const std::string& utterance_id) const;

  /// call_id -> utterance ids in manifest order.
  const std::vector<std::pair<std::string, std::vector<std::string>>>& calls() const { return calls_; }

 private:
  std::vector<Utterance> utterances_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::pair<std::string, std::vector<std::string>>> calls_;
};

enum class SplitMode { call, utterance };

struct Split {
  SplitMode mode = SplitMode::utterance;
  double ratio = 0.9;
  std::int64_t seed = 0;
  std::set<std::string> train_ids;
  std::set<std::string> test_ids;
};

class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::set<std::string> words);

  bool contains(const std::string& word) const { return words_.count(word) != 0; }
  const std::set<std::string>& words() const { return words_; }

  /// The bundled 127-word English list (also shipped as data/stopwords_en.txt).
  static const StopwordList& default_english();

 private:
  std::set<std::string> words_;
};

/// Lowercase, strip punctuation from token edges, split on whitespace.
/// Internal punctuation (hyphens, apostrophes) is preserved.
std::vector<std::string> tokenize(const std::string& text);

std::vector<std::string> filter_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordList& stopwords);

/// Deterministic 90/10-style split. Utterance mode puts round(ratio*N)
/// shuffled utterances in train; call mode assigns whole shuffled calls to
/// train until the train utterance count first reaches ceil(ratio*N).
Split split_corpus(const Corpus& corpus, SplitMode mode, double ratio, std::int64_t seed);

// --- file formats ---

/// Manifest: UTF-8 JSON lines, one utterance per line. Keys: utterance_id,
/// call_id, speaker_id, features, duration_s, translation, optional
/// transcript, optional alignment as [[word, start_s, end_s], ...].
Corpus load_manifest(const std::string& path);
void save_manifest(const Corpus& corpus, const std::string& path);

Split load_split(const std::string& path);
void save_split(const Split& split, const std::string& path);

/// One word per line; '#' starts a comment; entries are lowercased.
StopwordList load_stopwords(const std::string& path);

std::string split_mode_name(SplitMode mode);
SplitMode parse_split_mode(const std::string& name);

}  // namespace ptx
