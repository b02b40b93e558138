#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ptx/corpus.hpp"
#include "ptx/features.hpp"

namespace ptx {

/// Controls the planted-word synthetic corpus. Every utterance is a word
/// sequence rendered from per-type template trajectories through a
/// per-speaker linear distortion, with Gaussian frame noise and near-silent
/// gaps. Transcripts, alignments, and translations are exact by
/// construction.
struct SynthConfig {
  int num_source_types = 10;
  int num_calls = 4;
  int utterances_per_call = 5;
  std::pair<int, int> words_per_utterance = {2, 4};
  int dim = 20;
  std::pair<int, int> frames_per_word = {55, 70};
  double speaker_distortion = 0.0;  // scale of the per-speaker perturbation of identity
  double noise_sigma = 0.0;
  std::pair<int, int> silence_gap_frames = {5, 10};
  std::int64_t seed = 1;
  double stopword_insert_rate = 0.0;
  std::map<std::string, std::string> lexicon;  // empty: auto bijection wNNN -> tNNN
  double frame_shift_ms = 10.0;
};

struct SynthCorpus {
  Corpus corpus;
  std::vector<FeatureMatrix> features;               // manifest order
  std::map<std::string, std::string> lexicon;        // source type -> target word
};

SynthCorpus generate_corpus(const SynthConfig& config);

/// Rendered word template: a smooth random curve (cumulative Gaussian steps,
/// each frame unit-normalized). Exposed for tests that plant patterns
/// directly.
std::vector<float> make_template(int frames, int dim, std::uint64_t seed);

SynthConfig load_synth_config(const std::string& path);
void save_synth_config(const SynthConfig& config, const std::string& path);

void save_lexicon(const std::map<std::string, std::string>& lexicon, const std::string& path);
std::map<std::string, std::string> load_lexicon(const std::string& path);

}  // namespace ptx
