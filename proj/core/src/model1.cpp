#include "ptx/model1.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "ptx/util.hpp"

namespace ptx {

const std::string TranslationTable::kNull = "<NULL>";

double TranslationTable::prob(const std::string& f, const std::string& e) const {
  auto fit = t.find(f);
  if (fit == t.end()) return 0.0;
  auto eit = fit->second.find(e);
  return eit == fit->second.end() ? 0.0 : eit->second;
}

double digamma(double x) {
  // Recurrence into the asymptotic regime, then the standard series; the
  // first omitted term at x = 12 is below 1e-13.
  double result = 0.0;
  while (x < 12.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  x -= 0.5;
  const double xx = 1.0 / x;
  const double xx2 = xx * xx;
  const double xx4 = xx2 * xx2;
  result += std::log(x) + (1.0 / 24.0) * xx2 - (7.0 / 960.0) * xx4 +
            (31.0 / 8064.0) * xx4 * xx2 - (127.0 / 30720.0) * xx4 * xx4;
  return result;
}

namespace {

bool usable(const ParallelPair& p) { return !p.source.empty() && !p.target.empty(); }

}  // namespace

TranslationTable init_uniform(const std::vector<ParallelPair>& pairs, double alpha) {
  if (!(alpha > 0.0)) throw Error("init_uniform: alpha must be positive");
  TranslationTable table;
  table.alpha = alpha;

  std::set<std::string> target_vocab;
  for (const ParallelPair& p : pairs) {
    if (!usable(p)) continue;
    for (const auto& e : p.target) {
      target_vocab.insert(e);
      table.t[TranslationTable::kNull][e] = 0.0;
      for (const auto& f : p.source) table.t[f][e] = 0.0;
    }
  }
  if (table.t.empty()) {
    throw Error("init_uniform: no pairs with both a source and a target side");
  }
  table.target_vocab_size = static_cast<std::int64_t>(target_vocab.size());

  for (auto& [f, row] : table.t) {
    const double uniform = 1.0 / static_cast<double>(row.size());
    for (auto& [e, prob] : row) prob = uniform;
  }
  return table;
}

CountTable expected_counts(const std::vector<ParallelPair>& pairs,
                           const TranslationTable& table) {
  CountTable counts;
  std::vector<double> probs;
  for (const ParallelPair& p : pairs) {
    if (!usable(p)) continue;
    for (const auto& e : p.target) {
      probs.assign(p.source.size() + 1, 0.0);
      probs[0] = table.prob(TranslationTable::kNull, e);
      double denom = probs[0];
      for (std::size_t i = 0; i < p.source.size(); ++i) {
        probs[i + 1] = table.prob(p.source[i], e);
        denom += probs[i + 1];
      }
      if (denom <= 0.0) continue;  // token unexplained by the current table
      counts[TranslationTable::kNull][e] += probs[0] / denom;
      for (std::size_t i = 0; i < p.source.size(); ++i) {
        counts[p.source[i]][e] += probs[i + 1] / denom;
      }
    }
  }
  return counts;
}

TranslationTable vb_m_step(const CountTable& counts, const TranslationTable& previous) {
  TranslationTable table;
  table.alpha = previous.alpha;
  table.target_vocab_size = previous.target_vocab_size;

  const double alpha = previous.alpha;
  // The digamma transform is not the maximum-likelihood update even as
  // alpha -> 0, so a numerically-off prior switches to plain EM.
  const bool pure_em = alpha < 1e-6;
  for (const auto& [f, prev_row] : previous.t) {
    auto& row = table.t[f];
    const auto cit = counts.find(f);
    double norm = 0.0;
    for (const auto& [e, unused_prob] : prev_row) {
      double c = 0.0;
      if (cit != counts.end()) {
        auto eit = cit->second.find(e);
        if (eit != cit->second.end()) c = eit->second;
      }
      const double w = pure_em ? c : std::exp(digamma(c + alpha));
      row[e] = w;
      norm += w;
    }
    if (norm > 0.0 && std::isfinite(norm)) {
      for (auto& [e, w] : row) w /= norm;
    } else {
      // Every weight underflowed (counts ~ 0 with a tiny alpha); fall back
      // to uniform so the row remains a distribution.
      const double uniform = 1.0 / static_cast<double>(row.size());
      for (auto& [e, w] : row) w = uniform;
    }
  }
  return table;
}

TranslationTable em_iteration(const std::vector<ParallelPair>& pairs,
                              const TranslationTable& table) {
  return vb_m_step(expected_counts(pairs, table), table);
}

double log_likelihood(const std::vector<ParallelPair>& pairs, const TranslationTable& table) {
  double ll = 0.0;
  for (const ParallelPair& p : pairs) {
    if (!usable(p)) continue;
    const double align_prob = 1.0 / static_cast<double>(p.source.size() + 1);
    for (const auto& e : p.target) {
      double sum = table.prob(TranslationTable::kNull, e);
      for (const auto& f : p.source) sum += table.prob(f, e);
      ll += std::log(align_prob * sum);
    }
  }
  return ll;
}

TrainResult train(const std::vector<ParallelPair>& pairs, int iterations, double alpha) {
  if (iterations < 1) throw Error("train: iterations must be >= 1");
  TrainResult result;
  result.table = init_uniform(pairs, alpha);
  for (int it = 0; it < iterations; ++it) {
    result.log_likelihoods.push_back(log_likelihood(pairs, result.table));
    result.table = em_iteration(pairs, result.table);
  }
  return result;
}

void save_translation_table(const TranslationTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path);
  for (const auto& [f, row] : table.t) {
    // Rows sorted by descending probability as written: comparing the
    // fixed-format strings keeps the order stable across a reload, where
    // values that tie at 9 decimals would otherwise flip.
    std::vector<std::pair<std::string, std::string>> entries;  // (formatted prob, e)
    entries.reserve(row.size());
    for (const auto& [e, prob] : row) entries.push_back({strprintf("%.9f", prob), e});
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (const auto& [prob, e] : entries) {
      out << f << '\t' << e << '\t' << prob << '\n';
    }
  }
  if (!out) throw Error("write failed for model file " + path);
}

TranslationTable load_translation_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path);
  TranslationTable table;
  std::set<std::string> target_vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw Error(strprintf("model file line %zu: expected f<TAB>e<TAB>prob", line_no));
    }
    const std::string f = line.substr(0, t1);
    const std::string e = line.substr(t1 + 1, t2 - t1 - 1);
    double prob = 0.0;
    try {
      prob = std::stod(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw Error(strprintf("model file line %zu: bad probability", line_no));
    }
    if (f.empty() || e.empty() || !(prob >= 0.0)) {
      throw Error(strprintf("model file line %zu: malformed entry", line_no));
    }
    if (!table.t[f].emplace(e, prob).second) {
      throw Error(strprintf("model file line %zu: duplicate entry", line_no));
    }
    if (f != TranslationTable::kNull) target_vocab.insert(e);
  }
  if (table.t.empty()) throw Error("model file " + path + " is empty");
  table.target_vocab_size = static_cast<std::int64_t>(target_vocab.size());
  return table;
}

}  // namespace ptx
