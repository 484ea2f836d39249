// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>

#include "convsearch/ranked_list.hpp"

namespace convsearch {

struct RrfParams {
    double k = 60.0;

    /// Throws ValidationError unless k > 0.
    void validate() const;
};

constexpr std::size_t kDefaultFusionDepth = 1000;

/// External re-ranker output keyed by (qid, doc_id).
class RerankScores {
  public:
    /// Throws Error if the pair already has a score.
    void add(std::string qid, std::string doc_id, double score);

    [[nodiscard]] const double* find(const std::string& qid, const std::string& doc_id) const;
    [[nodiscard]] std::size_t size() const noexcept { return scores_.size(); }

    /// TSV `qid<TAB>doc_id<TAB>score`.
    [[nodiscard]] static RerankScores load(const std::filesystem::path& path);

  private:
    std::map<std::pair<std::string, std::string>, double> scores_;
};

/// Reciprocal rank fusion: score(p) = sum over lists containing p of
/// 1 / (k + rank(p, L)). Documents missing from a list get nothing from it.
/// Output is sorted by fused score, ties by ascending doc_id, and cut to
/// `depth`. Throws Error for an empty input or mismatched qids.
[[nodiscard]] RankedList rrf_fuse(std::span<const RankedList> lists, const RrfParams& params,
                                  std::size_t depth = kDefaultFusionDepth);

/// Fuses runs query by query. A qid present in only some runs is fused
/// from the lists that have it. Output follows first-appearance order.
[[nodiscard]] Run rrf_fuse_runs(std::span<const Run> runs, const RrfParams& params,
                                std::size_t depth = kDefaultFusionDepth);

/// Reorders `list` by external score (descending, ties by doc_id). Every
/// entry must have a score; otherwise Error names the first missing pair
/// and how many are missing.
[[nodiscard]] RankedList rerank(const RankedList& list, const RerankScores& scores);
[[nodiscard]] Run rerank_run(const Run& run, const RerankScores& scores);

/// Late fusion: each method's list has already been through re-ranking;
/// fuse the final lists.
[[nodiscard]] RankedList pipeline_late_fusion(std::span<const RankedList> reranked_lists,
                                              const RrfParams& params,
                                              std::size_t depth = kDefaultFusionDepth);

/// Early fusion: fuse first-stage lists, then re-rank the fused list with
/// the scores of one designated query variant.
[[nodiscard]] RankedList pipeline_early_fusion(std::span<const RankedList> first_stage_lists,
                                               const RerankScores& designated_scores,
                                               const RrfParams& params,
                                               std::size_t depth = kDefaultFusionDepth);

}  // namespace convsearch
