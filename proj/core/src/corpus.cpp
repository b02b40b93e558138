#include "ptx/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ptx/rng.hpp"
#include "ptx/util.hpp"

namespace ptx {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Corpus::Corpus(std::vector<Utterance> utterances) : utterances_(std::move(utterances)) {
  std::unordered_map<std::string, std::size_t> call_pos;
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    const Utterance& u = utterances_[i];
    if (!index_.emplace(u.utterance_id, i).second) {
      throw Error("duplicate utterance_id \"" + u.utterance_id + "\"");
    }
    auto it = call_pos.find(u.call_id);
    if (it == call_pos.end()) {
      call_pos.emplace(u.call_id, calls_.size());
      calls_.push_back({u.call_id, {u.utterance_id}});
    } else {
      calls_[it->second].second.push_back(u.utterance_id);
    }
  }
}

const Utterance& Corpus::at(const std::string& utterance_id) const {
  auto it = index_.find(utterance_id);
  if (it == index_.end()) throw Error("unknown utterance_id \"" + utterance_id + "\"");
  return utterances_[it->second];
}

bool Corpus::contains(const std::string& utterance_id) const {
  return index_.count(utterance_id) != 0;
}

std::size_t Corpus::rank(const std::string& utterance_id) const {
  auto it = index_.find(utterance_id);
  if (it == index_.end()) throw Error("unknown utterance_id \"" + utterance_id + "\"");
  return it->second;
}

StopwordList::StopwordList(std::set<std::string> words) : words_(std::move(words)) {
  for (const auto& w : words_) {
    if (w.empty()) throw Error("stopword list contains an empty entry");
    for (char c : w) {
      if (std::isupper(static_cast<unsigned char>(c))) {
        throw Error("stopword \"" + w + "\" is not lowercase");
      }
    }
  }
}

const StopwordList& StopwordList::default_english() {
  // The classic 127-word English stopword list.
  static const StopwordList list{std::set<std::string>{
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your",
      "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she",
      "her", "hers", "herself", "it", "its", "itself", "they", "them", "their",
      "theirs", "themselves", "what", "which", "who", "whom", "this", "that",
      "these", "those", "am", "is", "are", "was", "were", "be", "been", "being",
      "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
      "the", "and", "but", "if", "or", "because", "as", "until", "while", "of",
      "at", "by", "for", "with", "about", "against", "between", "into",
      "through", "during", "before", "after", "above", "below", "to", "from",
      "up", "down", "in", "out", "on", "off", "over", "under", "again",
      "further", "then", "once", "here", "there", "when", "where", "why", "how",
      "all", "any", "both", "each", "few", "more", "most", "other", "some",
      "such", "no", "nor", "not", "only", "own", "same", "so", "than", "too",
      "very", "s", "t", "can", "will", "just", "don", "should", "now"}};
  return list;
}

namespace {

bool is_edge_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c);
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      std::size_t b = i, e = j;
      while (b < e && is_edge_punct(static_cast<unsigned char>(text[b]))) ++b;
      while (e > b && is_edge_punct(static_cast<unsigned char>(text[e - 1]))) --e;
      if (e > b) {
        std::string tok = text.substr(b, e - b);
        for (char& c : tok) {
          c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        tokens.push_back(std::move(tok));
      }
    }
    i = j;
  }
  return tokens;
}

std::vector<std::string> filter_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordList& stopwords) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stopwords.contains(t)) out.push_back(t);
  }
  return out;
}

Split split_corpus(const Corpus& corpus, SplitMode mode, double ratio, std::int64_t seed) {
  if (corpus.empty()) throw Error("split_corpus: corpus is empty");
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("split_corpus: ratio must be in (0, 1)");

  Split split;
  split.mode = mode;
  split.ratio = ratio;
  split.seed = seed;

  const std::size_t n = corpus.size();
  Rng rng(static_cast<std::uint64_t>(seed));

  if (mode == SplitMode::utterance) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    shuffle(order, rng);
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& id = corpus.utterances()[order[i]].utterance_id;
      (i < n_train ? split.train_ids : split.test_ids).insert(id);
    }
  } else {
    std::vector<std::size_t> order(corpus.calls().size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    const auto target = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
    std::size_t in_train = 0;
    for (std::size_t idx : order) {
      const auto& [call_id, utt_ids] = corpus.calls()[idx];
      auto& side = (in_train < target) ? split.train_ids : split.test_ids;
      if (in_train < target) in_train += utt_ids.size();
      for (const auto& id : utt_ids) side.insert(id);
    }
    if (split.train_ids.empty() || split.test_ids.empty()) {
      throw Error(strprintf("split_corpus: call-level split with %zu call(s) at ratio %.3f "
                            "leaves one side empty",
                            corpus.calls().size(), ratio));
    }
  }
  return split;
}

namespace {

Utterance utterance_from_json(const json& j, std::size_t line_no) {
  auto fail = [line_no](const std::string& msg) -> Error {
    return Error(strprintf("manifest line %zu: %s", line_no, msg.c_str()));
  };
  Utterance u;
  try {
    u.utterance_id = j.at("utterance_id").get<std::string>();
    u.call_id = j.at("call_id").get<std::string>();
    u.speaker_id = j.at("speaker_id").get<std::string>();
    u.features_ref = j.at("features").get<std::string>();
    u.duration_s = j.at("duration_s").get<double>();
    u.translation = j.at("translation").get<std::string>();
    if (j.contains("transcript")) u.transcript = j.at("transcript").get<std::string>();
    if (j.contains("alignment")) {
      std::vector<AlignedWord> alignment;
      for (const auto& entry : j.at("alignment")) {
        if (!entry.is_array() || entry.size() != 3) {
          throw fail("alignment entries must be [word, start_s, end_s]");
        }
        alignment.push_back({entry[0].get<std::string>(), entry[1].get<double>(),
                             entry[2].get<double>()});
      }
      u.word_alignment = std::move(alignment);
    }
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  if (!(u.duration_s > 0.0)) throw fail("duration_s must be > 0");
  if (u.word_alignment) {
    double prev_start = -1.0;
    for (const auto& w : u.word_alignment.value()) {
      if (!(0.0 <= w.start_s && w.start_s < w.end_s && w.end_s <= u.duration_s + 1e-9)) {
        throw fail(strprintf("alignment for \"%s\" violates 0 <= start < end <= duration",
                             w.word.c_str()));
      }
      if (w.start_s < prev_start) throw fail("alignment entries are not sorted by start_s");
      prev_start = w.start_s;
    }
  }
  return u;
}

}  // namespace

Corpus load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path);
  std::vector<Utterance> utterances;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(strprintf("manifest line %zu: %s", line_no, e.what()));
    }
    Utterance u = utterance_from_json(j, line_no);
    if (!seen.insert(u.utterance_id).second) {
      throw Error(strprintf("manifest line %zu: duplicate utterance_id \"%s\"", line_no,
                            u.utterance_id.c_str()));
    }
    utterances.push_back(std::move(u));
  }
  return Corpus(std::move(utterances));
}

void save_manifest(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path);
  for (const Utterance& u : corpus.utterances()) {
    ordered_json j;
    j["utterance_id"] = u.utterance_id;
    j["call_id"] = u.call_id;
    j["speaker_id"] = u.speaker_id;
    j["features"] = u.features_ref;
    j["duration_s"] = u.duration_s;
    j["translation"] = u.translation;
    if (u.transcript) j["transcript"] = *u.transcript;
    if (u.word_alignment) {
      ordered_json arr = ordered_json::array();
      for (const auto& w : *u.word_alignment) {
        arr.push_back({w.word, w.start_s, w.end_s});
      }
      j["alignment"] = std::move(arr);
    }
    out << j.dump() << '\n';
  }
  if (!out) throw Error("write failed for manifest " + path);
}

Split load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open split file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(std::string("split file: ") + e.what());
  }
  Split s;
  s.mode = parse_split_mode(j.at("mode").get<std::string>());
  s.ratio = j.at("ratio").get<double>();
  s.seed = j.at("seed").get<std::int64_t>();
  for (const auto& id : j.at("train")) s.train_ids.insert(id.get<std::string>());
  for (const auto& id : j.at("test")) s.test_ids.insert(id.get<std::string>());
  for (const auto& id : s.train_ids) {
    if (s.test_ids.count(id)) throw Error("split file: \"" + id + "\" is in both train and test");
  }
  return s;
}

void save_split(const Split& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write split file " + path);
  ordered_json j;
  j["mode"] = split_mode_name(split.mode);
  j["ratio"] = split.ratio;
  j["seed"] = split.seed;
  j["train"] = split.train_ids;  // std::set serializes in sorted order
  j["test"] = split.test_ids;
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for split file " + path);
}

StopwordList load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword file " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string w;
    while (ss >> w) {
      for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      words.insert(w);
    }
  }
  return StopwordList(std::move(words));
}

std::string split_mode_name(SplitMode mode) {
  return mode == SplitMode::call ? "call" : "utterance";
}

SplitMode parse_split_mode(const std::string& name) {
  if (name == "call") return SplitMode::call;
  if (name == "utterance") return SplitMode::utterance;
  throw Error("unknown split mode \"" + name + "\" (expected call or utterance)");
}

}  // namespace ptx
