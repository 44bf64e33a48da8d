// Serial reference vs. OpenMP kernels.

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "generator.hpp"
#include "kernforge/bpe.hpp"
#include "kernforge/constraint.hpp"
#include "kernforge/kern.hpp"
#include "kernforge/metrics.hpp"
#include "kernforge/normalizer.hpp"

using namespace kernforge;

namespace {

struct Fixture {
    std::vector<std::string> docs;
    bpe::BpeVocab vocab;
    std::vector<metrics::TextPair> pairs;
    std::vector<constraint::DecodeState> states;

    Fixture() {
        std::mt19937_64 rng(1);
        kftest::GenOptions opt;
        opt.max_kern_spines = 4;
        opt.max_measures = 8;
        for (int i = 0; i < 1000; ++i) {
            docs.push_back(serialize_document(
                normalize::normalize_document(parse_document(kftest::random_document(rng, opt))).first));
        }
        vocab = bpe::train(docs, bpe::kDefaultVocabSize);
        for (std::size_t i = 0; i + 1 < docs.size(); i += 2) pairs.emplace_back(docs[i], docs[i + 1]);

        // Decode states sampled along one replayed document.
        constraint::ConstraintEngine engine(vocab.token_table());
        constraint::DecodeState s = engine.init_state();
        for (int id : vocab.encode(docs.front())) {
            states.push_back(s);
            s = engine.advance_token(s, id);
        }
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_MaskSerial(benchmark::State& st) {
    const auto& f = fixture();
    constraint::ConstraintEngine engine(f.vocab.token_table());
    std::size_t i = 0;
    for (auto _ : st) benchmark::DoNotOptimize(engine.compute_mask_serial(f.states[i++ % f.states.size()]));
}

void BM_MaskParallel(benchmark::State& st) {
    const auto& f = fixture();
    constraint::ConstraintEngine engine(f.vocab.token_table());
    std::size_t i = 0;
    for (auto _ : st) benchmark::DoNotOptimize(engine.compute_mask_parallel(f.states[i++ % f.states.size()]));
}

void BM_MaskCached(benchmark::State& st) {
    const auto& f = fixture();
    constraint::ConstraintEngine engine(f.vocab.token_table());
    std::size_t i = 0;
    for (auto _ : st) benchmark::DoNotOptimize(engine.compute_mask(f.states[i++ % f.states.size()]));
}

void BM_EncodeSerial(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(bpe::encode_batch_serial(f.vocab, f.docs));
}

void BM_EncodeParallel(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(bpe::encode_batch(f.vocab, f.docs));
}

void BM_ScoreSerial(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(metrics::score_batch_serial(f.pairs));
}

void BM_ScoreParallel(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(metrics::score_batch(f.pairs));
}

}  // namespace

BENCHMARK(BM_MaskSerial);
BENCHMARK(BM_MaskParallel);
BENCHMARK(BM_MaskCached);
BENCHMARK(BM_EncodeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EncodeParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
