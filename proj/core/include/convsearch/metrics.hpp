// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "convsearch/ranked_list.hpp"

namespace convsearch {

constexpr int kMaxGrade = 4;

/// Graded judgments, (qid, doc_id) -> 0..4. Unjudged pairs count as 0.
class Qrels {
  public:
    /// Throws Error for a grade outside 0..4 or a repeated pair.
    void add(const std::string& qid, const std::string& doc_id, int grade);

    [[nodiscard]] int grade(const std::string& qid, const std::string& doc_id) const;

    /// Number of docs with grade >= threshold for `qid`.
    [[nodiscard]] std::size_t relevant_count(const std::string& qid, int threshold = 1) const;

    /// Positive grades of `qid`, highest first.
    [[nodiscard]] std::vector<int> positive_grades(const std::string& qid) const;

    /// Judged qids in ascending order.
    [[nodiscard]] std::vector<std::string> qids() const;

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] bool empty() const noexcept { return size_ == 0; }
    [[nodiscard]] std::array<std::size_t, kMaxGrade + 1> grade_counts() const noexcept { return counts_; }

    /// trec format: `qid 0 doc_id grade`, whitespace separated.
    [[nodiscard]] static Qrels load(const std::filesystem::path& path);

  private:
    std::map<std::string, std::unordered_map<std::string, int>> judgments_;
    std::array<std::size_t, kMaxGrade + 1> counts_{};
    std::size_t size_ = 0;
};

/// AP over the first `depth` entries, binarized at grade >= rel_threshold,
/// divided by the total number of relevant docs. 0 when nothing is relevant.
[[nodiscard]] double average_precision(const RankedList& list, const Qrels& qrels, std::size_t depth = 1000,
                                       int rel_threshold = 1);

/// NDCG@k with linear gain (the grade) and 1/log2(rank + 1) discount; the
/// ideal DCG comes from the qrels. 0 when no judged doc has grade > 0.
[[nodiscard]] double ndcg_at_k(const RankedList& list, const Qrels& qrels, std::size_t k);

[[nodiscard]] double recall_at_k(const RankedList& list, const Qrels& qrels, std::size_t k = 1000,
                                 int rel_threshold = 1);

struct MetricSpec {
    enum class Kind { map, ndcg, recall };
    Kind kind = Kind::map;
    std::size_t depth = 1000;

    /// Canonical name: map, ndcg@k, recall@k (map@k when depth != 1000).
    [[nodiscard]] std::string name() const;

    /// Accepts map, map@k, ndcg@k, recall@k, R@k, and the trec_eval
    /// spellings ndcg_cut_k / recall_k. Throws ValidationError otherwise.
    [[nodiscard]] static MetricSpec parse(std::string_view text);

    /// Comma-separated list.
    [[nodiscard]] static std::vector<MetricSpec> parse_list(std::string_view text);

    friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

[[nodiscard]] double compute_metric(const MetricSpec& metric, const RankedList& list, const Qrels& qrels);

/// Per-query and mean values. Only queries with at least one judged
/// relevant document are evaluated; such a query missing from the run
/// scores 0 on every metric.
struct MetricReport {
    std::vector<MetricSpec> metrics;
    std::vector<std::string> qids;             // ascending
    std::vector<std::vector<double>> values;   // values[q][m]
    std::vector<double> means;                 // means[m]

    [[nodiscard]] std::size_t metric_index(std::string_view name) const;
    [[nodiscard]] double mean(std::string_view name) const { return means[metric_index(name)]; }
    [[nodiscard]] std::vector<double> column(std::string_view name) const;
};

/// Throws Error("no judged queries") when qrels contain no relevant docs.
[[nodiscard]] MetricReport evaluate(const Run& run, const Qrels& qrels, std::span<const MetricSpec> metrics);

[[nodiscard]] std::vector<MetricSpec> default_metrics();

}  // namespace convsearch
