// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include <benchmark/benchmark.h>

#include "convsearch/cqr.hpp"
#include "generators.hpp"

namespace {

using namespace convsearch;

void BM_HqeSession(benchmark::State& state)
{
    gen::Rng rng(21);
    std::vector<Passage> passages;
    for (int i = 0; i < 5000; ++i) {
        std::string text;
        for (int t = 0; t < 40; ++t) {
            text += gen::draw_word(rng, 3000) + ' ';
        }
        passages.push_back({"d" + std::to_string(i), text});
    }
    const auto index = build_index(passages);
    Session session{"1", {}};
    for (int i = 1; i <= 10; ++i) {
        std::string text;
        for (int t = 0; t < 8; ++t) {
            text += gen::draw_word(rng, 3000) + ' ';
        }
        session.turns.push_back({"1", i, text});
    }
    ReformulateOptions options;
    options.method = CqrMethod::hqe;
    options.hqe = {6.0, 4.0, 10.0, 3};
    const Tokenizer tokenizer;
    const bool warm = state.range(0) != 0;
    MaxScoreCache shared(index, {});
    for (auto _ : state) {
        if (warm) {
            benchmark::DoNotOptimize(reformulate_session(session, options, tokenizer, &shared));
        } else {
            MaxScoreCache cold(index, {});
            benchmark::DoNotOptimize(reformulate_session(session, options, tokenizer, &cold));
        }
    }
}
BENCHMARK(BM_HqeSession)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace
