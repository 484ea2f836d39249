// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace convsearch {

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
    int rank = 0;  // 1-based

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// Results for one query id. Entries are ordered by rank; ranks are 1..n.
struct RankedList {
    std::string qid;
    std::vector<RankedEntry> entries;

    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries.empty(); }

    friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// One ranked list per query, in file/emission order.
using Run = std::vector<RankedList>;

/// Canonical result order: score descending, ties broken by ascending doc_id.
[[nodiscard]] inline bool ranks_before(const RankedEntry& a, const RankedEntry& b) noexcept
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.doc_id < b.doc_id;
}

/// Sorts into canonical order, truncates to `depth` (0 keeps everything) and
/// renumbers ranks 1..n.
void finalize_ranking(RankedList& list, std::size_t depth = 0);

/// True when ranks are exactly 1..n in order.
[[nodiscard]] bool has_contiguous_ranks(const RankedList& list) noexcept;

/// True when scores never increase down the list.
[[nodiscard]] bool scores_non_increasing(const RankedList& list) noexcept;

/// Returns the list for `qid`, or nullptr.
[[nodiscard]] const RankedList* find_list(const Run& run, const std::string& qid) noexcept;

}  // namespace convsearch
