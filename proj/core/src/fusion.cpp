// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "convsearch/error.hpp"

namespace convsearch {

void RrfParams::validate() const
{
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw ValidationError("RRF k must be a positive number");
    }
}

void RerankScores::add(std::string qid, std::string doc_id, double score)
{
    auto key = std::make_pair(std::move(qid), std::move(doc_id));
    if (!scores_.emplace(key, score).second) {
        throw Error("duplicate rerank score for (" + key.first + ", " + key.second + ")");
    }
}

const double* RerankScores::find(const std::string& qid, const std::string& doc_id) const
{
    auto it = scores_.find({qid, doc_id});
    return it == scores_.end() ? nullptr : &it->second;
}

RerankScores RerankScores::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open rerank score file " + path.string());
    }
    RerankScores out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw ParseError(path.string(), line_no, "expected qid<TAB>doc_id<TAB>score");
        }
        auto score_text = line.substr(t2 + 1);
        double score = 0.0;
        std::size_t used = 0;
        try {
            score = std::stod(score_text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != score_text.size() || !std::isfinite(score)) {
            throw ParseError(path.string(), line_no, "invalid score '" + score_text + "'");
        }
        try {
            out.add(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), score);
        } catch (const Error& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return out;
}

RankedList rrf_fuse(std::span<const RankedList> lists, const RrfParams& params, std::size_t depth)
{
    params.validate();
    if (lists.empty()) {
        throw Error("rrf_fuse needs at least one list");
    }
    if (depth == 0) {
        throw ValidationError("fusion depth must be >= 1");
    }
    const auto& qid = lists.front().qid;
    // Per-doc terms are summed smallest-first, which makes the fused score
    // independent of the order the lists are passed in.
    std::unordered_map<std::string, std::vector<double>> terms;
    for (const auto& list : lists) {
        if (list.qid != qid) {
            throw Error("cannot fuse lists for different queries ('" + qid + "' vs '" + list.qid + "')");
        }
        for (const auto& e : list.entries) {
            if (e.rank < 1) {
                throw Error("rank must be >= 1 in list for " + qid);
            }
            terms[e.doc_id].push_back(1.0 / (params.k + static_cast<double>(e.rank)));
        }
    }
    RankedList out{qid, {}};
    out.entries.reserve(terms.size());
    for (auto& [doc, parts] : terms) {
        std::sort(parts.begin(), parts.end());
        double score = 0.0;
        for (double p : parts) {
            score += p;
        }
        out.entries.push_back({doc, score, 0});
    }
    finalize_ranking(out, depth);
    return out;
}

Run rrf_fuse_runs(std::span<const Run> runs, const RrfParams& params, std::size_t depth)
{
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<RankedList>> by_qid;
    for (const auto& run : runs) {
        for (const auto& list : run) {
            auto [it, inserted] = by_qid.try_emplace(list.qid);
            if (inserted) {
                order.push_back(list.qid);
            }
            it->second.push_back(list);
        }
    }
    Run out;
    out.reserve(order.size());
    for (const auto& qid : order) {
        out.push_back(rrf_fuse(by_qid[qid], params, depth));
    }
    return out;
}

RankedList rerank(const RankedList& list, const RerankScores& scores)
{
    RankedList out{list.qid, {}};
    out.entries.reserve(list.entries.size());
    std::size_t missing = 0;
    std::string first_missing;
    for (const auto& e : list.entries) {
        const double* s = scores.find(list.qid, e.doc_id);
        if (s == nullptr) {
            if (missing++ == 0) {
                first_missing = "(" + list.qid + ", " + e.doc_id + ")";
            }
            continue;
        }
        out.entries.push_back({e.doc_id, *s, 0});
    }
    if (missing > 0) {
        std::ostringstream msg;
        msg << "rerank scores missing for " << missing << " pair(s); first missing pair " << first_missing;
        throw Error(msg.str());
    }
    finalize_ranking(out);
    return out;
}

Run rerank_run(const Run& run, const RerankScores& scores)
{
    Run out;
    out.reserve(run.size());
    for (const auto& list : run) {
        out.push_back(rerank(list, scores));
    }
    return out;
}

RankedList pipeline_late_fusion(std::span<const RankedList> reranked_lists, const RrfParams& params,
                                std::size_t depth)
{
    return rrf_fuse(reranked_lists, params, depth);
}

RankedList pipeline_early_fusion(std::span<const RankedList> first_stage_lists,
                                 const RerankScores& designated_scores, const RrfParams& params,
                                 std::size_t depth)
{
    return rerank(rrf_fuse(first_stage_lists, params, depth), designated_scores);
}

}  // namespace convsearch
