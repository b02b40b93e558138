#pragma once

#include <string>
#include <vector>

#include "ptx/model1.hpp"

namespace ptx {

/// Bag-of-words output for one utterance: K guesses per in-vocabulary
/// pseudoterm token (duplicate tokens contribute duplicate guesses).
struct Prediction {
  std::string utterance_id;
  int k = 1;
  std::vector<std::string> words;      // multiset, in emission order
  std::vector<std::string> oov_terms;  // unknown source types, first-seen order
};

/// The K most probable targets for f; ties broken lexicographically, fewer
/// than K only when the support is smaller, empty when f is unknown.
std::vector<std::string> topk(const TranslationTable& table, const std::string& f, int k);

/// NULL is never translated; unknown types are collected as OOV.
Prediction translate_utterance(const TranslationTable& table, const std::string& utterance_id,
                               const std::vector<std::string>& line, int k);

// --- file format: JSON lines {"utterance_id":..., "K":..., "words":[...], "oov":[...]} ---
void save_predictions(const std::vector<Prediction>& predictions, const std::string& path);
std::vector<Prediction> load_predictions(const std::string& path);

}  // namespace ptx
