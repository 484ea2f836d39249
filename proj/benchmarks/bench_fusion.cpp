// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include <benchmark/benchmark.h>

#include "convsearch/fusion.hpp"
#include "generators.hpp"

namespace {

using namespace convsearch;

void BM_RrfFuse(benchmark::State& state)
{
    gen::Rng rng(31);
    std::vector<RankedList> lists;
    for (int i = 0; i < state.range(0); ++i) {
        auto l = gen::random_list(rng, "q", 3000, 1000);
        lists.push_back(std::move(l));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(rrf_fuse(lists, {}));
    }
}
BENCHMARK(BM_RrfFuse)->Arg(2)->Arg(5)->Unit(benchmark::kMicrosecond);

}  // namespace
