#include "ptx/cluster.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <fstream>

#include "json.hpp"

#include "ptx/util.hpp"

namespace ptx {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void merge(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);  // keep the smaller index as root
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

double fractional_overlap(const Segment& x, const Segment& y) {
  const int inter = std::min(x.end_frame, y.end_frame) - std::max(x.start_frame, y.start_frame);
  if (inter <= 0) return 0.0;
  return static_cast<double>(inter) / std::min(x.length(), y.length());
}

}  // namespace

MergeResult merge_overlapping(const std::vector<Match>& matches, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw Error("merge_overlapping: rho must be in (0, 1]");

  std::vector<Segment> sides;
  sides.reserve(matches.size() * 2);
  for (const Match& m : matches) {
    sides.push_back(m.a);
    sides.push_back(m.b);
  }

  UnionFind uf(sides.size());
  std::map<std::string, std::vector<std::size_t>> by_utt;
  for (std::size_t i = 0; i < sides.size(); ++i) by_utt[sides[i].utterance_id].push_back(i);
  for (const auto& [utt, idxs] : by_utt) {
    for (std::size_t p = 0; p < idxs.size(); ++p) {
      for (std::size_t q = p + 1; q < idxs.size(); ++q) {
        if (fractional_overlap(sides[idxs[p]], sides[idxs[q]]) >= rho) {
          uf.merge(idxs[p], idxs[q]);
        }
      }
    }
  }

  // Union extent per root, then a deterministic node order.
  std::map<std::size_t, Segment> extent;
  for (std::size_t i = 0; i < sides.size(); ++i) {
    const std::size_t r = uf.find(i);
    auto it = extent.find(r);
    if (it == extent.end()) {
      extent.emplace(r, sides[i]);
    } else {
      it->second.start_frame = std::min(it->second.start_frame, sides[i].start_frame);
      it->second.end_frame = std::max(it->second.end_frame, sides[i].end_frame);
    }
  }

  std::vector<std::pair<std::size_t, Segment>> roots(extent.begin(), extent.end());
  std::sort(roots.begin(), roots.end(), [](const auto& x, const auto& y) {
    if (x.second.key() != y.second.key()) return x.second.key() < y.second.key();
    return x.first < y.first;
  });

  MergeResult result;
  std::map<std::size_t, int> root_to_node;
  result.nodes.reserve(roots.size());
  for (std::size_t n = 0; n < roots.size(); ++n) {
    root_to_node[roots[n].first] = static_cast<int>(n);
    result.nodes.push_back({static_cast<int>(n), roots[n].second});
  }
  result.side_map.resize(sides.size());
  for (std::size_t i = 0; i < sides.size(); ++i) {
    result.side_map[i] = root_to_node[uf.find(i)];
  }
  return result;
}

Clustering connected_components(const MergeResult& merged, const std::vector<Match>& matches,
                                const std::function<std::size_t(const std::string&)>& utt_rank) {
  if (merged.side_map.size() != matches.size() * 2) {
    throw Error("connected_components: side_map does not cover all match sides");
  }

  std::function<std::size_t(const std::string&)> rank = utt_rank;
  std::map<std::string, std::size_t> lex_rank;
  if (!rank) {
    for (const Occurrence& o : merged.nodes) lex_rank.emplace(o.segment.utterance_id, 0);
    std::size_t r = 0;
    for (auto& [id, val] : lex_rank) val = r++;
    rank = [&lex_rank](const std::string& id) { return lex_rank.at(id); };
  }

  UnionFind uf(merged.nodes.size());
  for (std::size_t m = 0; m < matches.size(); ++m) {
    uf.merge(static_cast<std::size_t>(merged.side_map[2 * m]),
             static_cast<std::size_t>(merged.side_map[2 * m + 1]));
  }

  using OccKey = std::tuple<std::size_t, int, int>;  // (utt rank, start, end)
  auto occ_key = [&rank](const Occurrence& o) {
    return OccKey{rank(o.segment.utterance_id), o.segment.start_frame, o.segment.end_frame};
  };

  std::map<std::size_t, std::vector<Occurrence>> components;
  for (const Occurrence& o : merged.nodes) {
    components[uf.find(static_cast<std::size_t>(o.node_id))].push_back(o);
  }

  std::vector<std::vector<Occurrence>> ordered;
  ordered.reserve(components.size());
  for (auto& [root, occs] : components) {
    std::sort(occs.begin(), occs.end(), [&](const Occurrence& x, const Occurrence& y) {
      const auto kx = occ_key(x), ky = occ_key(y);
      if (kx != ky) return kx < ky;
      return x.node_id < y.node_id;
    });
    ordered.push_back(std::move(occs));
  }
  std::sort(ordered.begin(), ordered.end(),
            [&](const std::vector<Occurrence>& x, const std::vector<Occurrence>& y) {
              const auto kx = occ_key(x.front()), ky = occ_key(y.front());
              if (kx != ky) return kx < ky;
              return x.front().node_id < y.front().node_id;
            });

  Clustering clustering;
  clustering.clusters.reserve(ordered.size());
  for (std::size_t c = 0; c < ordered.size(); ++c) {
    clustering.clusters.push_back({"c" + std::to_string(c + 1), std::move(ordered[c])});
  }
  return clustering;
}

Clustering cluster_matches(const std::vector<Match>& matches, double rho,
                           const std::function<std::size_t(const std::string&)>& utt_rank) {
  const MergeResult merged = merge_overlapping(matches, rho);
  Clustering clustering = connected_components(merged, matches, utt_rank);
  clustering.overlap_threshold = rho;
  return clustering;
}

void save_clusters(const Clustering& clustering, const std::string& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [label, occs] : clustering.clusters) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const Occurrence& o : occs) {
      nlohmann::ordered_json item;
      item["utt"] = o.segment.utterance_id;
      item["start"] = o.segment.start_frame;
      item["end"] = o.segment.end_frame;
      arr.push_back(std::move(item));
    }
    j[label] = std::move(arr);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write clusters file " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for clusters file " + path);
}

Clustering load_clusters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open clusters file " + path);
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("clusters file: ") + e.what());
  }
  if (!j.is_object()) throw Error("clusters file " + path + " must be a JSON object");

  std::vector<std::pair<std::size_t, std::vector<Occurrence>>> parsed;
  std::set<std::size_t> seen;
  for (const auto& [label, arr] : j.items()) {
    if (label.size() < 2 || label[0] != 'c') {
      throw Error("clusters file: bad label \"" + label + "\"");
    }
    std::size_t n = 0;
    try {
      n = std::stoul(label.substr(1));
    } catch (const std::exception&) {
      throw Error("clusters file: bad label \"" + label + "\"");
    }
    if (n == 0 || !seen.insert(n).second) {
      throw Error("clusters file: duplicate or zero label \"" + label + "\"");
    }
    std::vector<Occurrence> occs;
    for (const auto& item : arr) {
      Occurrence o;
      o.segment.utterance_id = item.at("utt").get<std::string>();
      o.segment.start_frame = item.at("start").get<int>();
      o.segment.end_frame = item.at("end").get<int>();
      if (o.segment.start_frame >= o.segment.end_frame) {
        throw Error("clusters file: segment start must precede end in \"" + label + "\"");
      }
      occs.push_back(std::move(o));
    }
    parsed.push_back({n, std::move(occs)});
  }
  if (!seen.empty() && (*seen.rbegin() != seen.size())) {
    throw Error("clusters file: labels are not dense c1..cM");
  }
  std::sort(parsed.begin(), parsed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  Clustering clustering;
  int next_node = 0;
  for (auto& [n, occs] : parsed) {
    for (Occurrence& o : occs) o.node_id = next_node++;
    clustering.clusters.push_back({"c" + std::to_string(n), std::move(occs)});
  }
  return clustering;
}

}  // namespace ptx
