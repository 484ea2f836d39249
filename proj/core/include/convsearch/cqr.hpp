// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convsearch/corpus.hpp"
#include "convsearch/index.hpp"
#include "convsearch/tokenizer.hpp"

namespace convsearch {

// Conversational query reformulation: historical query expansion (HQE),
// concatenation baselines, raw passthrough and externally produced rewrites.

enum class PosTag { noun, adj, other };

/// Maps tagger labels onto the coarse scale: NOUN/PROPN -> noun, ADJ -> adj,
/// anything else -> other. Case-insensitive.
[[nodiscard]] PosTag parse_pos_tag(std::string_view label) noexcept;

/// qid -> one tag per token of the raw utterance.
using PosAnnotations = std::map<std::string, std::vector<PosTag>>;

/// JSONL, one `{"qid": ..., "tags": [...]}` object per line.
[[nodiscard]] PosAnnotations load_pos_annotations(const std::filesystem::path& path);

struct HqeParams {
    double r_topic = 4.5;
    double r_sub = 3.5;
    double eta = 10.0;
    std::size_t m_window = 5;

    /// Best-R@1000 setting for first-stage retrieval.
    [[nodiscard]] static HqeParams for_retrieval() { return {4.5, 3.5, 10.0, 5}; }
    /// Best-MAP setting, used for queries fed to the re-ranker.
    [[nodiscard]] static HqeParams for_ranking() { return {4.0, 3.0, 12.0, 1}; }

    /// Throws ValidationError unless r_topic > r_sub.
    void validate() const;

    friend bool operator==(const HqeParams&, const HqeParams&) = default;
};

/// Component switches for ablation runs. All on reproduces full HQE.
struct HqeAblation {
    bool topic = true;        // prepend W_topic
    bool subtopic = true;     // allow W_sub expansion
    bool qpp = true;          // gate W_sub on A_i < eta; off = always expand
    bool term_weight = true;  // off = every distinct term appears once

    friend bool operator==(const HqeAblation&, const HqeAblation&) = default;
};

/// One utterance prepared for reformulation.
struct Turn {
    std::string qid;
    std::string raw_text;
    TokenStream tokens;
    std::vector<PosTag> tags;  // empty: every token is eligible

    /// Whether token `k` may become a keyword / survive the POS filter.
    [[nodiscard]] bool eligible(std::size_t k) const noexcept
    {
        return tags.empty() || tags[k] == PosTag::noun || tags[k] == PosTag::adj;
    }
};

/// Tokenizes every turn of `session`. When `pos` is given, each turn's tag
/// list must exist and match its token count (Error otherwise).
[[nodiscard]] std::vector<Turn> prepare_turns(const Session& session, const Tokenizer& tokenizer,
                                              const PosAnnotations* pos = nullptr);

struct ReformulatedQuery {
    std::string qid;
    TokenStream tokens;        // duplicates encode term weight
    std::string display_text;  // tokenizes back to `tokens`

    friend bool operator==(const ReformulatedQuery&, const ReformulatedQuery&) = default;
};

/// Deduplicated keyword sets in first-occurrence order.
struct KeywordSets {
    TokenStream topic;
    TokenStream sub;
};

/// Keyword extraction over turns u_1..u_i (`turns.back()` is u_i). A token
/// joins W_topic when its max single-term BM25 score exceeds r_topic, and
/// W_sub when it exceeds r_sub and its turn j satisfies j >= i - M.
[[nodiscard]] KeywordSets extract_keywords(const MaxScoreCache& scorer, std::span<const Turn> turns,
                                           const HqeParams& params);

/// Historical query expansion for u_i = turns.back():
///   i == 1   -> u_1 unchanged
///   i  > 1   -> W_topic ++ (W_sub if A_i < eta) ++ tokens(u_i)
/// where A_i is the top-1 BM25 score of u_i. Keywords shared by both sets
/// therefore appear twice.
[[nodiscard]] ReformulatedQuery hqe_rewrite(const MaxScoreCache& scorer, std::span<const Turn> turns,
                                            const HqeParams& params, const HqeAblation& ablation = {});

/// Tokens of the previous `m_window` turns (POS-filtered when tags are
/// present) followed by all tokens of the current turn.
[[nodiscard]] ReformulatedQuery concat_rewrite(std::span<const Turn> turns, std::size_t m_window);

[[nodiscard]] ReformulatedQuery raw_rewrite(const Turn& turn);

/// qid -> rewritten query text.
using ExternalRewrites = std::map<std::string, std::string>;

/// TSV `qid<TAB>text`. Duplicate qids and rows without a TAB are errors.
[[nodiscard]] ExternalRewrites load_external_rewrites(const std::filesystem::path& path);

void write_rewrites(const std::filesystem::path& path, std::span<const ReformulatedQuery> queries);

/// Throws Error when `qid` has no rewrite.
[[nodiscard]] ReformulatedQuery external_rewrite(const ExternalRewrites& rewrites, const std::string& qid,
                                                 const Tokenizer& tokenizer);

enum class CqrMethod { raw, concat, concat_pos, hqe, hqe_pos, external };

/// Accepts raw|concat|concat-pos|hqe|hqe-pos|external.
[[nodiscard]] CqrMethod parse_cqr_method(std::string_view name);
[[nodiscard]] std::string_view to_string(CqrMethod method) noexcept;
[[nodiscard]] constexpr bool uses_pos(CqrMethod m) noexcept
{
    return m == CqrMethod::concat_pos || m == CqrMethod::hqe_pos;
}

struct ReformulateOptions {
    CqrMethod method = CqrMethod::raw;
    HqeParams hqe;
    HqeAblation ablation;
    std::size_t concat_window = 9;
    const PosAnnotations* pos = nullptr;            // *_pos methods; null = tag all NOUN
    const ExternalRewrites* rewrites = nullptr;     // external
};

/// Reformulates every turn of `session`. `scorer` is required for HQE.
[[nodiscard]] std::vector<ReformulatedQuery> reformulate_session(const Session& session,
                                                                 const ReformulateOptions& options,
                                                                 const Tokenizer& tokenizer,
                                                                 const MaxScoreCache* scorer = nullptr);

}  // namespace convsearch
