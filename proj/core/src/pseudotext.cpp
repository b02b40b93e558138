#include "ptx/pseudotext.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <tuple>

#include "ptx/util.hpp"

namespace ptx {

const std::vector<std::string>* Pseudotext::find(const std::string& utterance_id) const {
  auto it = index_.find(utterance_id);
  return it == index_.end() ? nullptr : &lines[it->second].second;
}

void Pseudotext::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!index_.emplace(lines[i].first, i).second) {
      throw Error("pseudotext: duplicate utterance_id \"" + lines[i].first + "\"");
    }
  }
}

Pseudotext generate_pseudotext(const Clustering& clustering, const Corpus& corpus) {
  // (start, end, label) per utterance, then flatten in sorted order.
  std::map<std::string, std::vector<std::tuple<int, int, std::string>>> per_utt;
  for (const auto& [label, occs] : clustering.clusters) {
    for (const Occurrence& o : occs) {
      if (!corpus.contains(o.segment.utterance_id)) {
        throw Error("generate_pseudotext: occurrence references unknown utterance \"" +
                    o.segment.utterance_id + "\"");
      }
      per_utt[o.segment.utterance_id].push_back(
          {o.segment.start_frame, o.segment.end_frame, label});
    }
  }

  Pseudotext pt;
  pt.source = Pseudotext::Source::utd;
  pt.lines.reserve(corpus.size());
  for (const Utterance& u : corpus.utterances()) {
    std::vector<std::string> labels;
    auto it = per_utt.find(u.utterance_id);
    if (it != per_utt.end()) {
      std::sort(it->second.begin(), it->second.end());
      labels.reserve(it->second.size());
      for (const auto& [start, end, label] : it->second) labels.push_back(label);
    }
    pt.lines.push_back({u.utterance_id, std::move(labels)});
  }
  pt.rebuild_index();
  return pt;
}

Pseudotext generate_oracle_pseudotext(
    const std::vector<std::string>& utterance_ids,
    const std::function<std::optional<std::string>(const std::string&)>& transcript) {
  Pseudotext pt;
  pt.source = Pseudotext::Source::oracle;
  pt.lines.reserve(utterance_ids.size());
  for (const std::string& id : utterance_ids) {
    const auto tr = transcript(id);
    if (!tr) {
      throw Error("oracle pseudotext requires a transcript for every utterance; \"" + id +
                  "\" has none");
    }
    pt.lines.push_back({id, tokenize(*tr)});
  }
  pt.rebuild_index();
  return pt;
}

Pseudotext generate_oracle_pseudotext(const Corpus& corpus) {
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const Utterance& u : corpus.utterances()) ids.push_back(u.utterance_id);
  return generate_oracle_pseudotext(
      ids, [&corpus](const std::string& id) { return corpus.at(id).transcript; });
}

void save_pseudotext(const Pseudotext& pt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write pseudotext file " + path);
  for (const auto& [id, labels] : pt.lines) {
    out << id << '\t';
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (i) out << ' ';
      out << labels[i];
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for pseudotext file " + path);
}

Pseudotext load_pseudotext(const std::string& path, Pseudotext::Source source) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pseudotext file " + path);
  Pseudotext pt;
  pt.source = source;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string id = line.substr(0, tab);
    if (id.empty()) throw Error(strprintf("pseudotext line %zu: empty utterance_id", line_no));
    std::vector<std::string> labels;
    if (tab != std::string::npos) {
      std::size_t pos = tab + 1;
      while (pos < line.size()) {
        const auto space = line.find(' ', pos);
        const std::string tok =
            line.substr(pos, space == std::string::npos ? space : space - pos);
        if (!tok.empty()) labels.push_back(tok);
        if (space == std::string::npos) break;
        pos = space + 1;
      }
    }
    pt.lines.push_back({id, std::move(labels)});
  }
  pt.rebuild_index();
  return pt;
}

}  // namespace ptx
