#include "ptx/utd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

#include "ptx/util.hpp"

namespace ptx {

void validate(const UtdParams& p) {
  if (!(p.sim_threshold > 0.0 && p.sim_threshold <= 1.0)) {
    throw Error("utd params: sim_threshold must be in (0, 1]");
  }
  if (!(p.dtw_score_threshold > 0.0 && p.dtw_score_threshold <= 1.0)) {
    throw Error("utd params: dtw_score_threshold must be in (0, 1]");
  }
  if (p.min_seed_frames <= 0 || p.max_gap_frames < 0 || p.band_radius_frames < 0) {
    throw Error("utd params: frame counts must be nonnegative (min_seed_frames positive)");
  }
  if (!(p.min_seed_frames <= p.min_match_frames && p.min_match_frames <= p.max_match_frames)) {
    throw Error("utd params: need min_seed_frames <= min_match_frames <= max_match_frames");
  }
}

namespace {

// Fixed-order four-lane reduction: ~2.5x over a strict serial accumulator
// (the compiler may not reassociate floats on its own), still deterministic
// and symmetric in its arguments.
float dot4(const float* x, const float* y, int n) {
  float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  float tail = 0.0f;
  for (; i < n; ++i) tail += x[i] * y[i];
  return ((s0 + s1) + (s2 + s3)) + tail;
}

}  // namespace

SimilarityMatrix cosine_similarity_matrix(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.dim != b.dim) {
    throw Error(strprintf("cosine_similarity_matrix: dim mismatch (%d vs %d)", a.dim, b.dim));
  }
  const int dim = a.dim;
  auto inv_norms = [dim](const FeatureMatrix& fm) {
    std::vector<float> inv(static_cast<std::size_t>(fm.num_frames));
    for (int t = 0; t < fm.num_frames; ++t) {
      const float* row = fm.data.data() + static_cast<std::size_t>(t) * dim;
      const float ss = dot4(row, row, dim);
      inv[t] = ss > 0.0f ? static_cast<float>(1.0 / std::sqrt(static_cast<double>(ss))) : 0.0f;
    }
    return inv;
  };
  const std::vector<float> inv_a = inv_norms(a);
  const std::vector<float> inv_b = inv_norms(b);

  SimilarityMatrix s;
  s.rows = a.num_frames;
  s.cols = b.num_frames;
  s.values.resize(static_cast<std::size_t>(s.rows) * s.cols);
  for (int i = 0; i < s.rows; ++i) {
    const float* ra = a.data.data() + static_cast<std::size_t>(i) * dim;
    float* out = s.values.data() + static_cast<std::size_t>(i) * s.cols;
    for (int j = 0; j < s.cols; ++j) {
      const float* rb = b.data.data() + static_cast<std::size_t>(j) * dim;
      // Rounding can land a hair outside [-1, 1]; keep DTW cell costs >= 0.
      out[j] = std::clamp(dot4(ra, rb, dim) * inv_a[i] * inv_b[j], -1.0f, 1.0f);
    }
  }
  return s;
}

std::vector<Seed> find_diagonal_seeds(const SimilarityMatrix& s, const UtdParams& params) {
  std::vector<Seed> seeds;
  const float thr = static_cast<float>(params.sim_threshold);
  for (int offset = -(s.rows - 1); offset < s.cols; ++offset) {
    const int i_lo = std::max(0, -offset);
    const int i_hi = std::min(s.rows, s.cols - offset);
    int run_start = -1;
    int last_above = -1;
    auto close_run = [&] {
      if (run_start >= 0 && last_above - run_start + 1 >= params.min_seed_frames) {
        seeds.push_back({offset, run_start, last_above + 1});
      }
      run_start = -1;
    };
    for (int i = i_lo; i < i_hi; ++i) {
      if (s.at(i, i + offset) >= thr) {
        if (run_start < 0) run_start = i;
        last_above = i;
      } else if (run_start >= 0 && i - last_above > params.max_gap_frames) {
        close_run();
      }
    }
    close_run();
  }
  // Diagonal scan order already gives (offset, i_start) order.
  return seeds;
}

namespace {

struct DtwPath {
  double total_cost = 0.0;
  int length = 0;

  double mean_similarity() const { return 1.0 - total_cost / length; }
};

// Banded DTW over S restricted to rows [a0,a1) x cols [b0,b1), band
// |(j - i) - center| <= radius, steps {(1,1),(1,0),(0,1)}, cost 1 - S.
// Returns cost and cell count of the min-total-cost path from (a0,b0) to
// (a1-1,b1-1), or nullopt when no in-band path exists.
std::optional<DtwPath> band_dtw(const SimilarityMatrix& s, int a0, int a1, int b0, int b1,
                                int center, int radius) {
  const int rows = a1 - a0;
  const int cols = b1 - b0;
  if (rows <= 0 || cols <= 0) return std::nullopt;
  if (std::abs((b0 - a0) - center) > radius || std::abs((b1 - a1) - center) > radius) {
    return std::nullopt;  // endpoints outside the band
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(static_cast<std::size_t>(rows) * cols, inf);
  std::vector<int> len(static_cast<std::size_t>(rows) * cols, 0);
  auto idx = [cols](int i, int j) { return static_cast<std::size_t>(i) * cols + j; };

  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (std::abs((j + b0) - (i + a0) - center) > radius) continue;
      const double cell = 1.0 - static_cast<double>(s.at(i + a0, j + b0));
      if (i == 0 && j == 0) {
        cost[idx(0, 0)] = cell;
        len[idx(0, 0)] = 1;
        continue;
      }
      double best = inf;
      int best_len = 0;
      // Preference order on ties: diagonal, then up, then left.
      if (i > 0 && j > 0 && cost[idx(i - 1, j - 1)] < best) {
        best = cost[idx(i - 1, j - 1)];
        best_len = len[idx(i - 1, j - 1)];
      }
      if (i > 0 && cost[idx(i - 1, j)] < best) {
        best = cost[idx(i - 1, j)];
        best_len = len[idx(i - 1, j)];
      }
      if (j > 0 && cost[idx(i, j - 1)] < best) {
        best = cost[idx(i, j - 1)];
        best_len = len[idx(i, j - 1)];
      }
      if (best == inf) continue;
      cost[idx(i, j)] = best + cell;
      len[idx(i, j)] = best_len + 1;
    }
  }
  const double total = cost[idx(rows - 1, cols - 1)];
  if (!(total < inf)) return std::nullopt;
  return DtwPath{total, len[idx(rows - 1, cols - 1)]};
}

bool intervals_overlap(int a0, int a1, int b0, int b1) { return a0 < b1 && b0 < a1; }

double fractional_overlap(const Segment& x, const Segment& y) {
  const int inter = std::min(x.end_frame, y.end_frame) - std::max(x.start_frame, y.start_frame);
  if (inter <= 0) return 0.0;
  return static_cast<double>(inter) / std::min(x.length(), y.length());
}

// Seeds on adjacent diagonals refine to near-identical matches (smooth
// signals match themselves at small offsets). Two matches of the same pair
// whose sides mutually overlap by >= this fraction describe one discovery;
// only the best-scoring one is kept.
constexpr double kDuplicateOverlap = 0.5;

bool same_discovery(const Match& x, const Match& y) {
  return x.a.utterance_id == y.a.utterance_id && x.b.utterance_id == y.b.utterance_id &&
         fractional_overlap(x.a, y.a) >= kDuplicateOverlap &&
         fractional_overlap(x.b, y.b) >= kDuplicateOverlap;
}

std::optional<Match> refine_with_sim(const FeatureMatrix& a, const FeatureMatrix& b,
                                     const SimilarityMatrix& s, const Seed& seed,
                                     const UtdParams& params) {
  const bool same_utt = a.utterance_id == b.utterance_id;
  int a0 = seed.i_start, a1 = seed.i_end;
  int b0 = a0 + seed.offset, b1 = a1 + seed.offset;
  if (a0 < 0 || a1 > s.rows || b0 < 0 || b1 > s.cols || a0 >= a1) {
    throw Error("refine_match_dtw: seed outside the similarity matrix");
  }
  if (same_utt && intervals_overlap(a0, a1, b0, b1)) return std::nullopt;

  auto eval = [&](int na0, int na1, int nb0, int nb1) {
    return band_dtw(s, na0, na1, nb0, nb1, seed.offset, params.band_radius_frames);
  };

  std::optional<DtwPath> path = eval(a0, a1, b0, b1);
  if (!path) return std::nullopt;

  // Lock-step greedy extension: grow one frame on both sequences per step.
  // A step is kept while the similarity of the newly added path portion is
  // itself >= the score threshold, which keeps the whole-path mean above
  // threshold without letting boundaries creep into dissimilar context.
  auto accept = [&](int na0, int na1, int nb0, int nb1) -> std::optional<DtwPath> {
    if (same_utt && intervals_overlap(na0, na1, nb0, nb1)) return std::nullopt;
    const std::optional<DtwPath> cand = eval(na0, na1, nb0, nb1);
    if (!cand) return std::nullopt;
    if (cand->length > path->length) {
      const double marginal_cost =
          (cand->total_cost - path->total_cost) / (cand->length - path->length);
      if (1.0 - marginal_cost < params.dtw_score_threshold) return std::nullopt;
    } else if (cand->mean_similarity() < path->mean_similarity()) {
      return std::nullopt;  // rerouted to a shorter path; keep only improvements
    }
    return cand;
  };

  bool grew = true;
  while (grew) {
    grew = false;
    if ((a1 - a0) < params.max_match_frames && (b1 - b0) < params.max_match_frames && a0 > 0 &&
        b0 > 0) {
      if (auto cand = accept(a0 - 1, a1, b0 - 1, b1)) {
        --a0;
        --b0;
        path = cand;
        grew = true;
      }
    }
    if ((a1 - a0) < params.max_match_frames && (b1 - b0) < params.max_match_frames &&
        a1 < s.rows && b1 < s.cols) {
      if (auto cand = accept(a0, a1 + 1, b0, b1 + 1)) {
        ++a1;
        ++b1;
        path = cand;
        grew = true;
      }
    }
  }

  const int len_a = a1 - a0;
  const int len_b = b1 - b0;
  if (len_a < params.min_match_frames || len_a > params.max_match_frames ||
      len_b < params.min_match_frames || len_b > params.max_match_frames) {
    return std::nullopt;
  }
  const double score = path->mean_similarity();
  if (!(score >= params.dtw_score_threshold)) return std::nullopt;

  Match m;
  m.a = {a.utterance_id, a0, a1};
  m.b = {b.utterance_id, b0, b1};
  m.score = std::clamp(score, 0.0, 1.0);
  if (m.b.key() < m.a.key()) std::swap(m.a, m.b);
  return m;
}

}  // namespace

std::optional<Match> refine_match_dtw(const FeatureMatrix& a, const FeatureMatrix& b,
                                      const Seed& seed, const UtdParams& params) {
  validate(params);
  const SimilarityMatrix s = cosine_similarity_matrix(a, b);
  return refine_with_sim(a, b, s, seed, params);
}

std::vector<Match> discover_matches(const std::vector<FeatureMatrix>& db, const UtdParams& params,
                                    int jobs) {
  validate(params);
  for (const auto& fm : db) {
    if (fm.dim != db.front().dim) {
      throw Error(strprintf("discover_matches: feature dim mismatch (%s has %d, %s has %d)",
                            db.front().utterance_id.c_str(), db.front().dim,
                            fm.utterance_id.c_str(), fm.dim));
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < db.size(); ++i) {
    for (std::size_t j = i; j < db.size(); ++j) pairs.push_back({i, j});
  }

  std::vector<std::vector<Match>> per_pair(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t p) {
    const auto [ia, ib] = pairs[p];
    const FeatureMatrix& a = db[ia];
    const FeatureMatrix& b = db[ib];
    const SimilarityMatrix s = cosine_similarity_matrix(a, b);
    std::vector<Match>& kept = per_pair[p];
    for (const Seed& seed : find_diagonal_seeds(s, params)) {
      // For self pairs the negative offsets mirror the positive ones and
      // offset 0 is the trivial identity diagonal.
      if (ia == ib && seed.offset <= 0) continue;
      auto m = refine_with_sim(a, b, s, seed, params);
      if (!m) continue;
      bool duplicate = false;
      for (Match& existing : kept) {
        if (same_discovery(existing, *m)) {
          if (m->score > existing.score) existing = *m;
          duplicate = true;
          break;
        }
      }
      if (!duplicate) kept.push_back(std::move(*m));
    }
  });

  std::map<std::pair<std::tuple<std::string, int, int>, std::tuple<std::string, int, int>>, double>
      best;
  for (const auto& bucket : per_pair) {
    for (const Match& m : bucket) {
      const auto key = std::make_pair(
          std::make_tuple(m.a.utterance_id, m.a.start_frame, m.a.end_frame),
          std::make_tuple(m.b.utterance_id, m.b.start_frame, m.b.end_frame));
      auto [it, inserted] = best.emplace(key, m.score);
      if (!inserted && m.score > it->second) it->second = m.score;
    }
  }

  std::vector<Match> out;
  out.reserve(best.size());
  for (const auto& [key, score] : best) {
    const auto& [ka, kb] = key;
    Match m;
    m.a = {std::get<0>(ka), std::get<1>(ka), std::get<2>(ka)};
    m.b = {std::get<0>(kb), std::get<1>(kb), std::get<2>(kb)};
    m.score = score;
    out.push_back(std::move(m));
  }
  return out;  // map iteration order is already canonical
}

void save_matches(const std::vector<Match>& matches, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write matches file " + path);
  out << "utt_a\tstart_a\tend_a\tutt_b\tstart_b\tend_b\tscore\n";
  for (const Match& m : matches) {
    out << strprintf("%s\t%d\t%d\t%s\t%d\t%d\t%.6f\n", m.a.utterance_id.c_str(), m.a.start_frame,
                     m.a.end_frame, m.b.utterance_id.c_str(), m.b.start_frame, m.b.end_frame,
                     m.score);
  }
  if (!out) throw Error("write failed for matches file " + path);
}

std::vector<Match> load_matches(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open matches file " + path);
  std::string line;
  if (!std::getline(in, line) || line != "utt_a\tstart_a\tend_a\tutt_b\tstart_b\tend_b\tscore") {
    throw Error("matches file " + path + " has a bad header");
  }
  std::vector<Match> matches;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 7) {
      throw Error(strprintf("matches file line %zu: expected 7 columns, got %zu", line_no,
                            cols.size()));
    }
    try {
      Match m;
      m.a = {cols[0], std::stoi(cols[1]), std::stoi(cols[2])};
      m.b = {cols[3], std::stoi(cols[4]), std::stoi(cols[5])};
      m.score = std::stod(cols[6]);
      if (m.a.start_frame >= m.a.end_frame || m.b.start_frame >= m.b.end_frame) {
        throw Error("segment start must precede end");
      }
      matches.push_back(std::move(m));
    } catch (const std::exception& e) {
      throw Error(strprintf("matches file line %zu: %s", line_no, e.what()));
    }
  }
  return matches;
}

UtdParams load_utd_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open utd params " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("utd params: ") + e.what());
  }
  UtdParams p;
  if (j.contains("sim_threshold")) p.sim_threshold = j["sim_threshold"].get<double>();
  if (j.contains("min_seed_frames")) p.min_seed_frames = j["min_seed_frames"].get<int>();
  if (j.contains("max_gap_frames")) p.max_gap_frames = j["max_gap_frames"].get<int>();
  if (j.contains("band_radius_frames")) p.band_radius_frames = j["band_radius_frames"].get<int>();
  if (j.contains("dtw_score_threshold")) {
    p.dtw_score_threshold = j["dtw_score_threshold"].get<double>();
  }
  if (j.contains("min_match_frames")) p.min_match_frames = j["min_match_frames"].get<int>();
  if (j.contains("max_match_frames")) p.max_match_frames = j["max_match_frames"].get<int>();
  validate(p);
  return p;
}

void save_utd_params(const UtdParams& params, const std::string& path) {
  nlohmann::ordered_json j;
  j["sim_threshold"] = params.sim_threshold;
  j["min_seed_frames"] = params.min_seed_frames;
  j["max_gap_frames"] = params.max_gap_frames;
  j["band_radius_frames"] = params.band_radius_frames;
  j["dtw_score_threshold"] = params.dtw_score_threshold;
  j["min_match_frames"] = params.min_match_frames;
  j["max_match_frames"] = params.max_match_frames;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write utd params " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for utd params " + path);
}

}  // namespace ptx
