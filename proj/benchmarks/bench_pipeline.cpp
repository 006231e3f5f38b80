#include "cvmask/attention_ref.hpp"
#include "cvmask/pipeline.hpp"

#include <benchmark/benchmark.h>

#include <string>

namespace {

// A method with `n` loop-carried statements; token count grows linearly.
std::string method_source(int n) {
    std::string src = "public int work(int[] a) {\n    int acc = 0;\n";
    for (int i = 0; i < n; ++i) {
        const std::string v = "v" + std::to_string(i);
        src += "    int " + v + " = acc + a[" + std::to_string(i % 7) + "];\n";
        src += "    if (" + v + " > 3) {\n        acc += " + v + ";\n    }\n";
    }
    return src + "    return acc;\n}\n";
}

void BM_Parse(benchmark::State& state) {
    const std::string src = method_source(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(cvmask::parse(src, cvmask::Language::Java));
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_Parse)->Arg(8)->Arg(64)->Arg(256);

void BM_BuildViews(benchmark::State& state) {
    const auto snippet = cvmask::parse(method_source(static_cast<int>(state.range(0))), cvmask::Language::Java);
    const cvmask::ViewSelection sel{{cvmask::ViewTag::Ast, cvmask::ViewTag::Cfg, cvmask::ViewTag::Dfg}, {true, true}};
    for (auto _ : state) benchmark::DoNotOptimize(cvmask::build_views(snippet, sel));
}
BENCHMARK(BM_BuildViews)->Arg(8)->Arg(64)->Arg(256);

void BM_AttentionGen(benchmark::State& state) {
    const auto snippet = cvmask::parse(method_source(static_cast<int>(state.range(0))), cvmask::Language::Java);
    const auto view = cvmask::build_views(snippet, {{cvmask::ViewTag::Ast, cvmask::ViewTag::Dfg}, {}});
    const auto masks = cvmask::all_masks(snippet, view, snippet.holder_kinds());
    for (auto _ : state) benchmark::DoNotOptimize(cvmask::attention_gen(snippet, masks));
    state.counters["tokens"] = static_cast<double>(snippet.token_count());
}
BENCHMARK(BM_AttentionGen)->Arg(8)->Arg(64)->Arg(256);

void BM_Pipeline(benchmark::State& state) {
    const std::string src = method_source(static_cast<int>(state.range(0)));
    cvmask::MaskConfig config;
    config.views = {cvmask::ViewTag::Ast, cvmask::ViewTag::Dfg};
    for (auto _ : state) benchmark::DoNotOptimize(cvmask::run_pipeline(src, config));
}
BENCHMARK(BM_Pipeline)->Arg(8)->Arg(64);

void BM_ToyEncoderForward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const cvmask::ToyEncoder encoder(cvmask::ToyEncoderConfig{});
    const auto inputs = cvmask::random_inputs(n, 8, 1);
    const auto mask = cvmask::AttentionMask::all_ones(n);
    for (auto _ : state) benchmark::DoNotOptimize(encoder.forward(inputs, mask));
}
BENCHMARK(BM_ToyEncoderForward)->Arg(32)->Arg(128);

void BM_Serialize(benchmark::State& state) {
    const auto mask = cvmask::AttentionMask::all_ones(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(cvmask::serialize_mask(mask));
}
BENCHMARK(BM_Serialize)->Arg(128)->Arg(512);

} // namespace

BENCHMARK_MAIN();
