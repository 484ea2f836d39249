// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "convsearch/metrics.hpp"
#include "convsearch/ranked_list.hpp"
#include "convsearch/tokenizer.hpp"

namespace convsearch {

/// |A ∩ B| / |A ∪ B|; two empty sets are identical (1.0).
[[nodiscard]] double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// Doc ids of the first `depth` entries (0 = all).
[[nodiscard]] std::set<std::string> doc_set(const RankedList& list, std::size_t depth = 0);

struct TurnSimilarity {
    int turn = 0;
    double mean_jaccard = 0.0;
    std::size_t sessions = 0;
};

/// For each turn i >= 2, the Jaccard similarity of the retrieved sets of
/// turns i-1 and i, averaged over sessions that have both. Qids must use
/// the `<session>_<turn>` format.
[[nodiscard]] std::vector<TurnSimilarity> turn_similarity(const Run& run, std::size_t depth = 1000);

struct SessionSimilarity {
    std::string session;
    double mean_jaccard = 0.0;          // J(run, reference) averaged over turns
    double mean_relative_recall = 0.0;  // R@depth(run) - R@depth(reference), judged turns only
    std::size_t turns = 0;
    std::size_t judged_turns = 0;
};

/// Per-session comparison of a run against a reference run (typically the
/// manual rewrites).
[[nodiscard]] std::vector<SessionSimilarity> session_similarity(const Run& run, const Run& reference,
                                                                const Qrels* qrels, std::size_t depth = 1000);

/// Corpus-level BLEU in [0, 100]: clipped n-gram precisions for orders
/// 1..max_order combined by uniform geometric mean, times the brevity
/// penalty exp(1 - r/c) when the hypothesis corpus is shorter. No
/// smoothing: any empty order yields 0.
[[nodiscard]] double corpus_bleu(std::span<const TokenStream> hypotheses, std::span<const TokenStream> references,
                                 int max_order = 4);

/// Splits `<session>_<turn>`; returns false if the qid does not match.
bool split_qid(const std::string& qid, std::string& session, int& turn);

}  // namespace convsearch
