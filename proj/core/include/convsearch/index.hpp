// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "convsearch/corpus.hpp"
#include "convsearch/ranked_list.hpp"
#include "convsearch/tokenizer.hpp"

namespace convsearch {

using DocOrdinal = std::uint32_t;

struct Posting {
    DocOrdinal doc;
    std::uint32_t tf;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// BM25 free parameters. Defaults are the values tuned for passage
/// retrieval on CAsT with Anserini.
struct Bm25Params {
    double k1 = 0.82;
    double b = 0.68;

    /// Throws ValidationError unless k1 >= 0 and 0 <= b <= 1.
    void validate() const;

    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

/// Immutable in-memory inverted index. Postings are sorted by doc ordinal;
/// ordinals follow collection order. Safe for concurrent reads.
class InvertedIndex {
  public:
    InvertedIndex() = default;

    [[nodiscard]] std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    [[nodiscard]] double avg_doc_len() const noexcept { return avg_doc_len_; }
    [[nodiscard]] std::uint64_t total_tokens() const noexcept { return total_tokens_; }
    [[nodiscard]] std::size_t vocabulary_size() const noexcept { return terms_.size(); }

    [[nodiscard]] std::uint32_t doc_length(DocOrdinal doc) const { return doc_lengths_.at(doc); }
    [[nodiscard]] const std::string& doc_id(DocOrdinal doc) const { return doc_ids_.at(doc); }
    [[nodiscard]] std::optional<DocOrdinal> ordinal(const std::string& doc_id) const;

    /// Position of the doc's id in ascending lexicographic order; used as
    /// the ranking tie-break without string comparisons.
    [[nodiscard]] std::uint32_t id_order(DocOrdinal doc) const { return id_order_[doc]; }

    /// Empty span for unindexed terms.
    [[nodiscard]] std::span<const Posting> postings(const std::string& term) const;
    [[nodiscard]] std::size_t document_frequency(const std::string& term) const
    {
        return postings(term).size();
    }

    /// Term frequency of `term` in `doc` (0 if absent).
    [[nodiscard]] std::uint32_t term_frequency(const std::string& term, DocOrdinal doc) const;

    [[nodiscard]] const TokenizerOptions& tokenizer_options() const noexcept { return tokenizer_options_; }
    [[nodiscard]] Tokenizer tokenizer() const { return Tokenizer(tokenizer_options_); }

    /// Terms in term-id order (first occurrence during the build).
    [[nodiscard]] const std::vector<std::string>& terms() const noexcept { return terms_; }

    void serialize(std::ostream& out) const;
    [[nodiscard]] static InvertedIndex deserialize(std::istream& in);

    void save(const std::filesystem::path& path) const;
    [[nodiscard]] static InvertedIndex load(const std::filesystem::path& path);

  private:
    friend class IndexBuilder;

    void finish();

    TokenizerOptions tokenizer_options_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::vector<std::uint32_t> id_order_;
    std::unordered_map<std::string, DocOrdinal> doc_lookup_;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::uint32_t> term_lookup_;
    std::vector<std::vector<Posting>> postings_;
    std::uint64_t total_tokens_ = 0;
    double avg_doc_len_ = 0.0;
};

/// Accumulates passages one at a time so collections can be indexed while
/// streaming from disk.
class IndexBuilder {
  public:
    explicit IndexBuilder(TokenizerOptions options = {});

    /// Throws Error on an empty or duplicate doc_id.
    void add(const Passage& passage);
    void add(std::string_view doc_id, std::string_view text);

    /// Throws Error if nothing was added.
    [[nodiscard]] InvertedIndex build() &&;

  private:
    InvertedIndex index_;
    Tokenizer tokenizer_;
    std::vector<std::uint32_t> scratch_;
};

[[nodiscard]] InvertedIndex build_index(std::span<const Passage> passages,
                                        TokenizerOptions options = {});

/// Streams the file straight into the builder.
[[nodiscard]] InvertedIndex build_index_from_file(const std::filesystem::path& path,
                                                  PassageFormat format,
                                                  TokenizerOptions options = {});

/// ln(1 + (N - df + 0.5) / (df + 0.5)), the Lucene/Anserini form; always > 0.
[[nodiscard]] double bm25_idf(std::size_t doc_count, std::size_t df) noexcept;

/// One query-term occurrence's contribution to one document.
[[nodiscard]] double bm25_term_score(const InvertedIndex& index, const Bm25Params& params,
                                     std::size_t df, std::uint32_t tf, std::uint32_t doc_len) noexcept;

/// Sum over query tokens, with multiplicity, of the per-term BM25 weight.
/// Tokens absent from the document contribute 0. Throws Error for an
/// unknown doc_id.
[[nodiscard]] double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                                const TokenStream& query, const std::string& doc_id);
[[nodiscard]] double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                                const TokenStream& query, DocOrdinal doc);

/// Top-k documents with score > 0, ordered by score descending and then
/// ascending doc_id. Returns fewer than k entries when fewer docs match.
[[nodiscard]] RankedList retrieve_topk(const InvertedIndex& index, const Bm25Params& params,
                                       const TokenStream& query, std::size_t k,
                                       std::string qid = {});

/// max over docs of bm25_score([term], doc); 0 for unindexed terms.
[[nodiscard]] double max_score_single_term(const InvertedIndex& index, const Bm25Params& params,
                                           const std::string& term);

/// Top-1 BM25 score of the whole token stream; 0 when nothing matches.
[[nodiscard]] double max_score_utterance(const InvertedIndex& index, const Bm25Params& params,
                                         const TokenStream& tokens);

/// Per-term max-score cache bound to one index and one parameter setting,
/// so entries are effectively keyed by (term, params). Thread-safe.
class MaxScoreCache {
  public:
    MaxScoreCache(const InvertedIndex& index, Bm25Params params);

    MaxScoreCache(const MaxScoreCache&) = delete;
    MaxScoreCache& operator=(const MaxScoreCache&) = delete;

    [[nodiscard]] double term(const std::string& term) const;
    [[nodiscard]] double utterance(const TokenStream& tokens) const;

    [[nodiscard]] const InvertedIndex& index() const noexcept { return index_; }
    [[nodiscard]] const Bm25Params& params() const noexcept { return params_; }

    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::size_t hits() const;
    [[nodiscard]] std::size_t misses() const;

    /// Entries sorted by term, for persisting the cache.
    [[nodiscard]] std::vector<std::pair<std::string, double>> snapshot() const;
    void preload(std::span<const std::pair<std::string, double>> entries);

  private:
    const InvertedIndex& index_;
    Bm25Params params_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, double> cache_;
    mutable std::size_t hits_ = 0;
    mutable std::size_t misses_ = 0;
};

}  // namespace convsearch
