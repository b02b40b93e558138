#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ptx {

/// One training pair: a pseudotext line (or oracle token line) and the
/// content words of its translation.
struct ParallelPair {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

/// Per-source-type categorical distributions over target words, learned by
/// Model 1 EM with a Dirichlet prior (variational-Bayes M-step). Rows are
/// restricted to co-occurring targets and always sum to 1.
struct TranslationTable {
  static const std::string kNull;

  std::map<std::string, std::map<std::string, double>> t;  // f -> e -> t(e|f)
  double alpha = 0.01;
  std::int64_t target_vocab_size = 0;

  double prob(const std::string& f, const std::string& e) const;
  bool has_source(const std::string& f) const { return t.count(f) != 0; }
};

/// Expected co-occurrence counts from one E-step pass, same sparsity as the
/// table. Exposed so the EM step can be checked against alignment
/// enumeration.
using CountTable = std::map<std::string, std::map<std::string, double>>;

/// Uniform initialization over each source type's co-occurring targets; NULL
/// co-occurs with everything. Pairs with an empty side are skipped; throws
/// if nothing usable remains.
TranslationTable init_uniform(const std::vector<ParallelPair>& pairs, double alpha = 0.01);

/// E-step: source prepended with NULL; posterior over alignments of each
/// target token accumulated into counts.
CountTable expected_counts(const std::vector<ParallelPair>& pairs, const TranslationTable& table);

/// Variational-Bayes M-step: t(e|f) proportional to exp(psi(c(e,f) + alpha)),
/// normalized over the row support (the digamma ratio with the
/// exp(psi(sum + alpha*V)) denominator is only approximately normalized).
/// Below alpha = 1e-6 the update degrades to the exact maximum-likelihood
/// normalization, the prior-free EM regime.
TranslationTable vb_m_step(const CountTable& counts, const TranslationTable& previous);

TranslationTable em_iteration(const std::vector<ParallelPair>& pairs,
                              const TranslationTable& table);

/// Corpus log-likelihood sum_pairs sum_j log((1/(|f|+1)) sum_i t(e_j|f_i)).
double log_likelihood(const std::vector<ParallelPair>& pairs, const TranslationTable& table);

struct TrainResult {
  TranslationTable table;
  std::vector<double> log_likelihoods;  // one entry per iteration, before that update
};

TrainResult train(const std::vector<ParallelPair>& pairs, int iterations, double alpha);

/// Digamma function; VB update helper, also used by tests.
double digamma(double x);

// --- file format: TSV "f<TAB>e<TAB>prob" sorted by (f, -prob, e), 9 decimals ---
void save_translation_table(const TranslationTable& table, const std::string& path);
TranslationTable load_translation_table(const std::string& path);

}  // namespace ptx
