// Micro benchmarks for the throughput-critical paths: segment algebra,
// segment-respecting corruption, length conversion, edit distance, CRF
// decoding and a full single-step sampling pass on a desk-sized model.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <memory>
#include <vector>

#include "segdms/corruption.hpp"
#include "segdms/crf.hpp"
#include "segdms/data.hpp"
#include "segdms/edit_distance.hpp"
#include "segdms/length_conversion.hpp"
#include "segdms/matrix.hpp"
#include "segdms/msps.hpp"
#include "segdms/rng.hpp"
#include "segdms/sampler_model.hpp"
#include "segdms/segments.hpp"
#include "segdms/vocab.hpp"

namespace {

using namespace segdms;

Sequence random_sequence(Rng& rng, int len) {
    const auto vocab = amino_acid_vocab();
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) ids.push_back(rng.next_int(0, vocab->emit_size() - 1));
    return Sequence(std::move(ids), vocab);
}

SegmentSet typical_segments(int len) {
    // three preserved islands, like framework regions around two variable loops
    return SegmentSet({{0, 24}, {33, 46}, {len - 12, len - 1}}, len);
}

void bm_apportion_and_index_map(benchmark::State& state) {
    const int len = static_cast<int>(state.range(0));
    const SegmentSet s = typical_segments(len);
    int delta = -5;
    for (auto _ : state) {
        const auto deltas = apportion_length_change(s, delta);
        benchmark::DoNotOptimize(build_index_map(s, deltas));
        delta = -delta;
    }
}
BENCHMARK(bm_apportion_and_index_map)->Arg(105);

void bm_corruption(benchmark::State& state) {
    Rng rng(41);
    const int len = static_cast<int>(state.range(0));
    const Sequence x = random_sequence(rng, len);
    const SegmentSet s = typical_segments(len);
    CorruptionConfig cfg;
    std::uint64_t i = 0;
    for (auto _ : state) {
        cfg.rng_seed = derive_seed(7, i++);
        benchmark::DoNotOptimize(corrupt(x, s, cfg));
    }
}
BENCHMARK(bm_corruption)->Arg(105);

void bm_conversion_weights(benchmark::State& state) {
    const int len = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(conversion_weights<float>(len, len - 3, 1.3f));
    }
}
BENCHMARK(bm_conversion_weights)->Arg(105);

void bm_convert_hidden(benchmark::State& state) {
    Rng rng(42);
    const int len = static_cast<int>(state.range(0));
    Matrix<float> h(len, 64);
    for (int r = 0; r < h.rows(); ++r) {
        for (int c = 0; c < h.cols(); ++c) {
            h(r, c) = static_cast<float>(rng.next_real() - 0.5);
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(convert_hidden<float>(h, len - 3, 1.3f));
    }
}
BENCHMARK(bm_convert_hidden)->Arg(105);

void bm_edit_distance(benchmark::State& state) {
    Rng rng(43);
    const int len = static_cast<int>(state.range(0));
    const Sequence a = random_sequence(rng, len);
    const Sequence b = random_sequence(rng, len + 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(edit_distance(a, b));
    }
}
BENCHMARK(bm_edit_distance)->Arg(105);

struct CrfInputs {
    MatD e, trans, start, end;
};

CrfInputs crf_inputs(int len, int labels) {
    Rng rng(44);
    auto fill = [&](MatD& m) {
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) m(r, c) = rng.next_real() * 2.0 - 1.0;
        }
    };
    CrfInputs in{MatD(len, labels), MatD(labels, labels), MatD(1, labels), MatD(1, labels)};
    fill(in.e);
    fill(in.trans);
    fill(in.start);
    fill(in.end);
    return in;
}

void bm_crf_log_partition(benchmark::State& state) {
    const CrfInputs in = crf_inputs(static_cast<int>(state.range(0)), 20);
    for (auto _ : state) {
        benchmark::DoNotOptimize(crf_log_partition(in.e, in.trans, in.start, in.end));
    }
}
BENCHMARK(bm_crf_log_partition)->Arg(105);

void bm_crf_viterbi(benchmark::State& state) {
    const CrfInputs in = crf_inputs(static_cast<int>(state.range(0)), 20);
    for (auto _ : state) {
        benchmark::DoNotOptimize(crf_viterbi(in.e, in.trans, in.start, in.end));
    }
}
BENCHMARK(bm_crf_viterbi)->Arg(105);

void bm_crf_posterior_sample(benchmark::State& state) {
    const CrfInputs in = crf_inputs(static_cast<int>(state.range(0)), 20);
    Rng rng(45);
    for (auto _ : state) {
        benchmark::DoNotOptimize(crf_posterior_sample(in.e, in.trans, in.start, in.end, rng));
    }
}
BENCHMARK(bm_crf_posterior_sample)->Arg(105);

void bm_sample_step(benchmark::State& state) {
    SamplerConfig cfg;
    cfg.d_model = 64;
    cfg.n_heads = 4;
    cfg.d_ff = 256;
    cfg.enc_layers = 2;
    cfg.dec_layers = 2;
    const SamplerModel model(cfg, amino_acid_vocab(), 46);

    Rng rng(47);
    const int len = static_cast<int>(state.range(0));
    const Sequence x = random_sequence(rng, len);
    const SegmentSet s = typical_segments(len);
    SamplingConfig sc;
    sc.beta = 0.5;
    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_step(x, s, model, sc, derive_seed(9, i++)));
    }
}
BENCHMARK(bm_sample_step)->Arg(105)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
