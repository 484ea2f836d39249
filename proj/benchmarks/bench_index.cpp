// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include <benchmark/benchmark.h>

#include "convsearch/index.hpp"
#include "generators.hpp"

namespace {

using namespace convsearch;

std::vector<Passage> make_passages(std::size_t n)
{
    gen::Rng rng(11);
    std::vector<Passage> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        const auto len = gen::uniform(rng, 20, 80);
        for (std::size_t t = 0; t < len; ++t) {
            text += gen::draw_word(rng, 5000) + ' ';
        }
        out.push_back({"d" + std::to_string(i), text});
    }
    return out;
}

void BM_BuildIndex(benchmark::State& state)
{
    const auto passages = make_passages(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_index(passages));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildIndex)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_RetrieveTopK(benchmark::State& state)
{
    const auto index = build_index(make_passages(20000));
    gen::Rng rng(12);
    std::vector<TokenStream> queries;
    for (int i = 0; i < 64; ++i) {
        TokenStream q;
        for (std::size_t t = 0; t < static_cast<std::size_t>(state.range(0)); ++t) {
            q.push_back(gen::draw_word(rng, 5000));
        }
        queries.push_back(q);
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(retrieve_topk(index, {}, queries[i++ % queries.size()], 1000));
    }
}
BENCHMARK(BM_RetrieveTopK)->Arg(4)->Arg(16)->Arg(48)->Unit(benchmark::kMicrosecond);

}  // namespace
