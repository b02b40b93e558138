#include "ptx/translate.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

#include "ptx/util.hpp"

namespace ptx {

std::vector<std::string> topk(const TranslationTable& table, const std::string& f, int k) {
  if (k < 1) throw Error("topk: K must be >= 1");
  auto it = table.t.find(f);
  if (it == table.t.end()) return {};
  std::vector<std::pair<std::string, double>> entries(it->second.begin(), it->second.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(std::min<std::size_t>(entries.size(), static_cast<std::size_t>(k)));
  for (const auto& [e, prob] : entries) {
    if (out.size() == static_cast<std::size_t>(k)) break;
    out.push_back(e);
  }
  return out;
}

Prediction translate_utterance(const TranslationTable& table, const std::string& utterance_id,
                               const std::vector<std::string>& line, int k) {
  Prediction pred;
  pred.utterance_id = utterance_id;
  pred.k = k;
  std::set<std::string> seen_oov;
  for (const auto& f : line) {
    if (f == TranslationTable::kNull) continue;
    if (!table.has_source(f)) {
      if (seen_oov.insert(f).second) pred.oov_terms.push_back(f);
      continue;
    }
    for (auto& w : topk(table, f, k)) pred.words.push_back(std::move(w));
  }
  return pred;
}

void save_predictions(const std::vector<Prediction>& predictions, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write predictions file " + path);
  for (const Prediction& p : predictions) {
    nlohmann::ordered_json j;
    j["utterance_id"] = p.utterance_id;
    j["K"] = p.k;
    j["words"] = p.words;
    j["oov"] = p.oov_terms;
    out << j.dump() << '\n';
  }
  if (!out) throw Error("write failed for predictions file " + path);
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predictions file " + path);
  std::vector<Prediction> predictions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Prediction p;
      p.utterance_id = j.at("utterance_id").get<std::string>();
      p.k = j.at("K").get<int>();
      p.words = j.at("words").get<std::vector<std::string>>();
      p.oov_terms = j.at("oov").get<std::vector<std::string>>();
      predictions.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error(strprintf("predictions file line %zu: %s", line_no, e.what()));
    }
  }
  return predictions;
}

}  // namespace ptx
