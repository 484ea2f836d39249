// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/ranked_list.hpp"

#include <algorithm>

namespace convsearch {

void finalize_ranking(RankedList& list, std::size_t depth)
{
    auto& e = list.entries;
    if (depth > 0 && depth < e.size()) {
        std::partial_sort(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(depth), e.end(),
                          ranks_before);
        e.resize(depth);
    } else {
        std::sort(e.begin(), e.end(), ranks_before);
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i].rank = static_cast<int>(i) + 1;
    }
}

bool has_contiguous_ranks(const RankedList& list) noexcept
{
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        if (list.entries[i].rank != static_cast<int>(i) + 1) {
            return false;
        }
    }
    return true;
}

bool scores_non_increasing(const RankedList& list) noexcept
{
    return std::is_sorted(list.entries.begin(), list.entries.end(),
                          [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });
}

const RankedList* find_list(const Run& run, const std::string& qid) noexcept
{
    auto it = std::find_if(run.begin(), run.end(), [&](const RankedList& l) { return l.qid == qid; });
    return it == run.end() ? nullptr : &*it;
}

}  // namespace convsearch
