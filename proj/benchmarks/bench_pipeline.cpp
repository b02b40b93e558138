#include <benchmark/benchmark.h>

#include "ptx/features.hpp"
#include "ptx/model1.hpp"
#include "ptx/pseudotext.hpp"
#include "ptx/pipeline.hpp"
#include "ptx/rng.hpp"
#include "ptx/synth.hpp"
#include "ptx/utd.hpp"

namespace {

ptx::FeatureMatrix random_features(const std::string& id, int frames, int dim,
                                   std::uint64_t seed) {
  ptx::Rng rng(seed);
  ptx::FeatureMatrix fm;
  fm.utterance_id = id;
  fm.dim = dim;
  fm.num_frames = frames;
  fm.data.resize(static_cast<std::size_t>(frames) * dim);
  for (auto& v : fm.data) v = static_cast<float>(rng.next_gaussian());
  return fm;
}

void BM_CosineSimilarityMatrix(benchmark::State& state) {
  const int frames = static_cast<int>(state.range(0));
  const auto a = random_features("a", frames, 26, 1);
  const auto b = random_features("b", frames, 26, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ptx::cosine_similarity_matrix(a, b));
  }
  state.SetItemsProcessed(state.iterations() * frames * frames);
}
BENCHMARK(BM_CosineSimilarityMatrix)->Arg(200)->Arg(500)->Arg(1000);

void BM_DiscoverMatchesPair(benchmark::State& state) {
  ptx::Rng rng(3);
  const auto tpl = ptx::make_template(60, 26, 7);
  auto a = random_features("a", static_cast<int>(state.range(0)), 26, 4);
  auto b = random_features("b", static_cast<int>(state.range(0)), 26, 5);
  std::copy(tpl.begin(), tpl.end(), a.data.begin() + 40 * 26);
  std::copy(tpl.begin(), tpl.end(), b.data.begin() + 80 * 26);
  const std::vector<ptx::FeatureMatrix> db{a, b};
  for (auto _ : state) {
    benchmark::DoNotOptimize(ptx::discover_matches(db, ptx::UtdParams{}));
  }
}
BENCHMARK(BM_DiscoverMatchesPair)->Arg(200)->Arg(400);

void BM_Mfcc(benchmark::State& state) {
  ptx::Rng rng(9);
  std::vector<float> samples(16000 * 5);
  for (auto& s : samples) s = static_cast<float>(rng.next_double() - 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ptx::compute_mfcc(samples, ptx::FeatureConfig{}, "u"));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}
BENCHMARK(BM_Mfcc);

void BM_EmIteration(benchmark::State& state) {
  ptx::Rng rng(11);
  std::vector<ptx::ParallelPair> pairs;
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i) {
    ptx::ParallelPair pair;
    for (int j = 0; j < 5; ++j) {
      const auto t = rng.next_int(0, 199);
      pair.source.push_back("f" + std::to_string(t));
      pair.target.push_back("e" + std::to_string(t));
    }
    pairs.push_back(std::move(pair));
  }
  const ptx::TranslationTable table = ptx::init_uniform(pairs);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ptx::em_iteration(pairs, table));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmIteration)->Arg(100)->Arg(1000);

void BM_EndToEndSynthetic(benchmark::State& state) {
  ptx::SynthConfig config;
  config.num_source_types = 6;
  config.num_calls = 4;
  config.utterances_per_call = 4;
  config.frames_per_word = {55, 65};
  config.dim = 16;
  config.noise_sigma = 0.03;
  config.seed = 21;
  const ptx::SynthCorpus sc = ptx::generate_corpus(config);
  for (auto _ : state) {
    const auto matches = ptx::discover_matches(sc.features, ptx::UtdParams{}, 4);
    const auto clustering = ptx::cluster_matches(
        matches, 0.5, [&sc](const std::string& id) { return sc.corpus.rank(id); });
    benchmark::DoNotOptimize(ptx::generate_pseudotext(clustering, sc.corpus));
  }
}
BENCHMARK(BM_EndToEndSynthetic)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
