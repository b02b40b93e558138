#include "ptx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "ptx/rng.hpp"
#include "ptx/util.hpp"

namespace ptx {

namespace {

void validate(const SynthConfig& c) {
  if (c.num_source_types < 1 || c.num_calls < 1 || c.utterances_per_call < 1) {
    throw Error("synth config: counts must be positive");
  }
  if (c.dim < 2) throw Error("synth config: dim must be >= 2");
  auto check_range = [](std::pair<int, int> r, int lo_min, const char* name) {
    if (r.first > r.second || r.first < lo_min) {
      throw Error(strprintf("synth config: bad %s range [%d, %d]", name, r.first, r.second));
    }
  };
  check_range(c.words_per_utterance, 1, "words_per_utterance");
  check_range(c.frames_per_word, 1, "frames_per_word");
  check_range(c.silence_gap_frames, 0, "silence_gap_frames");
  if (c.speaker_distortion < 0.0 || c.noise_sigma < 0.0) {
    throw Error("synth config: distortion and noise must be nonnegative");
  }
  if (!(c.stopword_insert_rate >= 0.0 && c.stopword_insert_rate < 1.0)) {
    throw Error("synth config: stopword_insert_rate must be in [0, 1)");
  }
  if (!(c.frame_shift_ms > 0.0)) throw Error("synth config: frame_shift_ms must be positive");
}

std::string type_name(int i) { return strprintf("w%03d", i); }
std::string target_name(int i) { return strprintf("t%03d", i); }

}  // namespace

std::vector<float> make_template(int frames, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> tpl(static_cast<std::size_t>(frames) * dim);
  std::vector<double> walk(static_cast<std::size_t>(dim), 0.0);
  for (int t = 0; t < frames; ++t) {
    double ss = 0.0;
    for (int d = 0; d < dim; ++d) {
      walk[d] += rng.next_gaussian();
      ss += walk[d] * walk[d];
    }
    const double inv = ss > 0.0 ? 1.0 / std::sqrt(ss) : 0.0;
    for (int d = 0; d < dim; ++d) {
      tpl[static_cast<std::size_t>(t) * dim + d] = static_cast<float>(walk[d] * inv);
    }
  }
  return tpl;
}

SynthCorpus generate_corpus(const SynthConfig& config) {
  validate(config);
  const int dim = config.dim;
  Rng rng(static_cast<std::uint64_t>(config.seed));

  // Word templates, one per source type; length fixed per type so repeats
  // are true repetitions.
  std::vector<std::vector<float>> templates;
  std::vector<int> template_frames;
  for (int w = 0; w < config.num_source_types; ++w) {
    const int frames =
        static_cast<int>(rng.next_int(config.frames_per_word.first, config.frames_per_word.second));
    template_frames.push_back(frames);
    templates.push_back(make_template(frames, dim, rng.next_u64()));
  }

  std::map<std::string, std::string> lexicon = config.lexicon;
  if (lexicon.empty()) {
    for (int w = 0; w < config.num_source_types; ++w) lexicon[type_name(w)] = target_name(w);
  } else {
    for (int w = 0; w < config.num_source_types; ++w) {
      if (!lexicon.count(type_name(w))) {
        throw Error("synth config: lexicon is missing type " + type_name(w));
      }
    }
  }

  const auto& stop_set = StopwordList::default_english().words();
  const std::vector<std::string> stopwords(stop_set.begin(), stop_set.end());

  SynthCorpus out;
  out.lexicon = lexicon;
  std::vector<Utterance> utterances;

  for (int call = 0; call < config.num_calls; ++call) {
    const std::string call_id = strprintf("c%03d", call);
    // One speaker per call: distortion matrix I + s * G with G ~ N(0, 1/dim)
    // per entry, so `speaker_distortion` is the relative perturbation size.
    std::vector<double> distortion(static_cast<std::size_t>(dim) * dim);
    const double gscale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        distortion[static_cast<std::size_t>(i) * dim + j] =
            (i == j ? 1.0 : 0.0) + config.speaker_distortion * gscale * rng.next_gaussian();
      }
    }

    for (int un = 0; un < config.utterances_per_call; ++un) {
      const std::string utt_id = strprintf("%s_u%02d", call_id.c_str(), un);
      const int num_words = static_cast<int>(
          rng.next_int(config.words_per_utterance.first, config.words_per_utterance.second));
      std::vector<int> word_types;
      for (int w = 0; w < num_words; ++w) {
        word_types.push_back(static_cast<int>(rng.next_int(0, config.num_source_types - 1)));
      }
      std::vector<int> gaps;
      for (int g = 0; g < num_words + 1; ++g) {
        gaps.push_back(static_cast<int>(
            rng.next_int(config.silence_gap_frames.first, config.silence_gap_frames.second)));
      }

      int total_frames = gaps.back();
      for (int w = 0; w < num_words; ++w) total_frames += gaps[w] + template_frames[word_types[w]];
      if (total_frames < 1) total_frames = 1;

      FeatureMatrix fm;
      fm.utterance_id = utt_id;
      fm.frame_shift_ms = static_cast<float>(config.frame_shift_ms);
      fm.dim = dim;
      fm.num_frames = total_frames;
      fm.data.assign(static_cast<std::size_t>(total_frames) * dim, 0.0f);

      const double silence_sigma = config.noise_sigma * 0.01;
      std::vector<AlignedWord> alignment;
      int cursor = 0;
      auto emit_silence = [&](int frames) {
        for (int t = 0; t < frames; ++t) {
          for (int d = 0; d < dim; ++d) {
            fm.at(cursor, d) = static_cast<float>(silence_sigma * rng.next_gaussian());
          }
          ++cursor;
        }
      };
      std::vector<double> rendered(static_cast<std::size_t>(dim));
      for (int w = 0; w < num_words; ++w) {
        emit_silence(gaps[w]);
        const int type = word_types[w];
        const int start = cursor;
        const std::vector<float>& tpl = templates[type];
        for (int t = 0; t < template_frames[type]; ++t) {
          const float* src = tpl.data() + static_cast<std::size_t>(t) * dim;
          for (int i = 0; i < dim; ++i) {
            double acc = 0.0;
            const double* mrow = distortion.data() + static_cast<std::size_t>(i) * dim;
            for (int j = 0; j < dim; ++j) acc += mrow[j] * src[j];
            rendered[i] = acc;
          }
          for (int i = 0; i < dim; ++i) {
            fm.at(cursor, i) =
                static_cast<float>(rendered[i] + config.noise_sigma * rng.next_gaussian());
          }
          ++cursor;
        }
        alignment.push_back({type_name(type), start * config.frame_shift_ms / 1000.0,
                             cursor * config.frame_shift_ms / 1000.0});
      }
      emit_silence(gaps.back());

      std::vector<std::string> translation_tokens;
      for (int w = 0; w < num_words; ++w) {
        if (config.stopword_insert_rate > 0.0 &&
            rng.next_double() < config.stopword_insert_rate) {
          translation_tokens.push_back(
              stopwords[static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(stopwords.size()) - 1))]);
        }
        translation_tokens.push_back(lexicon.at(type_name(word_types[w])));
      }
      if (config.stopword_insert_rate > 0.0 && rng.next_double() < config.stopword_insert_rate) {
        translation_tokens.push_back(
            stopwords[static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(stopwords.size()) - 1))]);
      }

      std::string transcript, translation;
      for (int w = 0; w < num_words; ++w) {
        if (w) transcript += ' ';
        transcript += type_name(word_types[w]);
      }
      for (std::size_t i = 0; i < translation_tokens.size(); ++i) {
        if (i) translation += ' ';
        translation += translation_tokens[i];
      }

      Utterance u;
      u.utterance_id = utt_id;
      u.call_id = call_id;
      u.speaker_id = strprintf("s%03d", call);
      u.features_ref = "features/" + utt_id + ".ptft";
      u.duration_s = total_frames * config.frame_shift_ms / 1000.0;
      u.translation = translation;
      u.transcript = transcript;
      u.word_alignment = std::move(alignment);
      utterances.push_back(std::move(u));
      out.features.push_back(std::move(fm));
    }
  }

  out.corpus = Corpus(std::move(utterances));
  return out;
}

namespace {

std::pair<int, int> range_from_json(const nlohmann::json& j, const char* key,
                                    std::pair<int, int> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw Error(strprintf("synth config: %s must be a 2-element array", key));
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

}  // namespace

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open synth config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("synth config: ") + e.what());
  }
  SynthConfig c;
  if (j.contains("num_source_types")) c.num_source_types = j["num_source_types"].get<int>();
  if (j.contains("num_calls")) c.num_calls = j["num_calls"].get<int>();
  if (j.contains("utterances_per_call")) c.utterances_per_call = j["utterances_per_call"].get<int>();
  c.words_per_utterance = range_from_json(j, "words_per_utterance", c.words_per_utterance);
  if (j.contains("dim")) c.dim = j["dim"].get<int>();
  c.frames_per_word = range_from_json(j, "frames_per_word", c.frames_per_word);
  if (j.contains("speaker_distortion")) c.speaker_distortion = j["speaker_distortion"].get<double>();
  if (j.contains("noise_sigma")) c.noise_sigma = j["noise_sigma"].get<double>();
  c.silence_gap_frames = range_from_json(j, "silence_gap_frames", c.silence_gap_frames);
  if (j.contains("seed")) c.seed = j["seed"].get<std::int64_t>();
  if (j.contains("stopword_insert_rate")) {
    c.stopword_insert_rate = j["stopword_insert_rate"].get<double>();
  }
  if (j.contains("frame_shift_ms")) c.frame_shift_ms = j["frame_shift_ms"].get<double>();
  if (j.contains("lexicon")) {
    for (const auto& [k, v] : j["lexicon"].items()) c.lexicon[k] = v.get<std::string>();
  }
  validate(c);
  return c;
}

void save_synth_config(const SynthConfig& config, const std::string& path) {
  nlohmann::ordered_json j;
  j["num_source_types"] = config.num_source_types;
  j["num_calls"] = config.num_calls;
  j["utterances_per_call"] = config.utterances_per_call;
  j["words_per_utterance"] = {config.words_per_utterance.first, config.words_per_utterance.second};
  j["dim"] = config.dim;
  j["frames_per_word"] = {config.frames_per_word.first, config.frames_per_word.second};
  j["speaker_distortion"] = config.speaker_distortion;
  j["noise_sigma"] = config.noise_sigma;
  j["silence_gap_frames"] = {config.silence_gap_frames.first, config.silence_gap_frames.second};
  j["seed"] = config.seed;
  j["stopword_insert_rate"] = config.stopword_insert_rate;
  j["frame_shift_ms"] = config.frame_shift_ms;
  if (!config.lexicon.empty()) j["lexicon"] = config.lexicon;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write synth config " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for synth config " + path);
}

void save_lexicon(const std::map<std::string, std::string>& lexicon, const std::string& path) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : lexicon) j[k] = v;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write lexicon " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for lexicon " + path);
}

std::map<std::string, std::string> load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("lexicon: ") + e.what());
  }
  std::map<std::string, std::string> lexicon;
  for (const auto& [k, v] : j.items()) lexicon[k] = v.get<std::string>();
  return lexicon;
}

}  // namespace ptx
