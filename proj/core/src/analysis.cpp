// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <unordered_map>

#include "convsearch/error.hpp"

namespace convsearch {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b)
{
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    std::size_t common = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::set<std::string> doc_set(const RankedList& list, std::size_t depth)
{
    const auto n = depth == 0 ? list.entries.size() : std::min(depth, list.entries.size());
    std::set<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.insert(list.entries[i].doc_id);
    }
    return out;
}

bool split_qid(const std::string& qid, std::string& session, int& turn)
{
    const auto pos = qid.rfind('_');
    if (pos == std::string::npos || pos == 0 || pos + 1 == qid.size()) {
        return false;
    }
    int value = 0;
    const char* first = qid.data() + pos + 1;
    const char* last = qid.data() + qid.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || value < 1) {
        return false;
    }
    session = qid.substr(0, pos);
    turn = value;
    return true;
}

namespace {

// session -> turn -> list
using SessionIndex = std::map<std::string, std::map<int, const RankedList*>>;

SessionIndex index_by_session(const Run& run)
{
    SessionIndex out;
    for (const auto& list : run) {
        std::string session;
        int turn = 0;
        if (!split_qid(list.qid, session, turn)) {
            throw ValidationError("qid '" + list.qid + "' is not in <session>_<turn> form");
        }
        out[session][turn] = &list;
    }
    return out;
}

}  // namespace

std::vector<TurnSimilarity> turn_similarity(const Run& run, std::size_t depth)
{
    std::map<int, std::pair<double, std::size_t>> acc;
    for (const auto& [session, turns] : index_by_session(run)) {
        for (const auto& [turn, list] : turns) {
            auto prev = turns.find(turn - 1);
            if (prev == turns.end()) {
                continue;
            }
            auto& slot = acc[turn];
            slot.first += jaccard(doc_set(*prev->second, depth), doc_set(*list, depth));
            ++slot.second;
        }
    }
    std::vector<TurnSimilarity> out;
    for (const auto& [turn, slot] : acc) {
        out.push_back({turn, slot.first / static_cast<double>(slot.second), slot.second});
    }
    return out;
}

std::vector<SessionSimilarity> session_similarity(const Run& run, const Run& reference, const Qrels* qrels,
                                                  std::size_t depth)
{
    const auto ref_index = index_by_session(reference);
    std::vector<SessionSimilarity> out;
    for (const auto& [session, turns] : index_by_session(run)) {
        auto ref_session = ref_index.find(session);
        if (ref_session == ref_index.end()) {
            continue;
        }
        SessionSimilarity s;
        s.session = session;
        double jac = 0.0;
        double rel = 0.0;
        for (const auto& [turn, list] : turns) {
            auto ref = ref_session->second.find(turn);
            if (ref == ref_session->second.end()) {
                continue;
            }
            jac += jaccard(doc_set(*list, depth), doc_set(*ref->second, depth));
            ++s.turns;
            if (qrels != nullptr && qrels->relevant_count(list->qid) > 0) {
                rel += recall_at_k(*list, *qrels, depth) - recall_at_k(*ref->second, *qrels, depth);
                ++s.judged_turns;
            }
        }
        if (s.turns == 0) {
            continue;
        }
        s.mean_jaccard = jac / static_cast<double>(s.turns);
        if (s.judged_turns > 0) {
            s.mean_relative_recall = rel / static_cast<double>(s.judged_turns);
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const TokenStream& tokens, std::size_t n)
{
    NgramCounts out;
    if (tokens.size() < n) {
        return out;
    }
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return out;
}

}  // namespace

double corpus_bleu(std::span<const TokenStream> hypotheses, std::span<const TokenStream> references, int max_order)
{
    if (hypotheses.size() != references.size()) {
        throw ValidationError("BLEU needs one reference per hypothesis");
    }
    if (max_order < 1) {
        throw ValidationError("BLEU max order must be >= 1");
    }
    const auto orders = static_cast<std::size_t>(max_order);
    std::vector<std::size_t> matches(orders, 0);
    std::vector<std::size_t> totals(orders, 0);
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        hyp_len += hypotheses[s].size();
        ref_len += references[s].size();
        for (std::size_t n = 1; n <= orders; ++n) {
            const auto hyp = count_ngrams(hypotheses[s], n);
            const auto ref = count_ngrams(references[s], n);
            for (const auto& [gram, count] : hyp) {
                totals[n - 1] += count;
                if (auto it = ref.find(gram); it != ref.end()) {
                    matches[n - 1] += std::min(count, it->second);
                }
            }
        }
    }
    if (hyp_len == 0) {
        return 0.0;
    }
    double log_precision = 0.0;
    for (std::size_t n = 0; n < orders; ++n) {
        if (matches[n] == 0) {
            return 0.0;
        }
        log_precision += std::log(static_cast<double>(matches[n]) / static_cast<double>(totals[n]));
    }
    log_precision /= static_cast<double>(orders);
    double bp = 1.0;
    if (hyp_len < ref_len) {
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    }
    return 100.0 * bp * std::exp(log_precision);
}

}  // namespace convsearch
