// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "convsearch/error.hpp"

namespace convsearch {

void Bm25Params::validate() const
{
    if (!(k1 >= 0.0) || !std::isfinite(k1)) {
        throw ValidationError("BM25 k1 must be >= 0");
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        throw ValidationError("BM25 b must lie in [0, 1]");
    }
}

// ---------------------------------------------------------------------------
// InvertedIndex

std::optional<DocOrdinal> InvertedIndex::ordinal(const std::string& doc_id) const
{
    auto it = doc_lookup_.find(doc_id);
    if (it == doc_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::span<const Posting> InvertedIndex::postings(const std::string& term) const
{
    auto it = term_lookup_.find(term);
    if (it == term_lookup_.end()) {
        return {};
    }
    return postings_[it->second];
}

std::uint32_t InvertedIndex::term_frequency(const std::string& term, DocOrdinal doc) const
{
    auto list = postings(term);
    auto it = std::lower_bound(list.begin(), list.end(), doc,
                               [](const Posting& p, DocOrdinal d) { return p.doc < d; });
    return (it != list.end() && it->doc == doc) ? it->tf : 0;
}

void InvertedIndex::finish()
{
    total_tokens_ = std::accumulate(doc_lengths_.begin(), doc_lengths_.end(), std::uint64_t{0});
    avg_doc_len_ = doc_ids_.empty() ? 0.0
                                    : static_cast<double>(total_tokens_) / static_cast<double>(doc_ids_.size());

    std::vector<DocOrdinal> by_id(doc_ids_.size());
    std::iota(by_id.begin(), by_id.end(), DocOrdinal{0});
    std::sort(by_id.begin(), by_id.end(),
              [this](DocOrdinal a, DocOrdinal b) { return doc_ids_[a] < doc_ids_[b]; });
    id_order_.assign(doc_ids_.size(), 0);
    for (std::size_t i = 0; i < by_id.size(); ++i) {
        id_order_[by_id[i]] = static_cast<std::uint32_t>(i);
    }
}

// On-disk layout, all integers little-endian:
//   magic "CVSIDX\0\0" | u32 version | u8 stem | u8 stopwords
//   u64 N | N x (str doc_id, u32 length)
//   u64 V | V x (str term, u64 df, df x (u32 doc, u32 tf))
// where str = u32 byte length followed by the bytes.
namespace {

constexpr std::array<char, 8> kMagic = {'C', 'V', 'S', 'I', 'D', 'X', '\0', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
  public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u32(std::uint32_t v)
    {
        std::array<char, 4> b{};
        for (int i = 0; i < 4; ++i) {
            b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        }
        out_.write(b.data(), b.size());
    }
    void u64(std::uint64_t v)
    {
        std::array<char, 8> b{};
        for (int i = 0; i < 8; ++i) {
            b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        }
        out_.write(b.data(), b.size());
    }
    void str(const std::string& s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

  private:
    std::ostream& out_;
};

class Reader {
  public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::uint8_t u8()
    {
        char c = 0;
        read(&c, 1);
        return static_cast<std::uint8_t>(c);
    }
    std::uint32_t u32()
    {
        std::array<unsigned char, 4> b{};
        read(reinterpret_cast<char*>(b.data()), b.size());
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) | b[i];
        }
        return v;
    }
    std::uint64_t u64()
    {
        std::array<unsigned char, 8> b{};
        read(reinterpret_cast<char*>(b.data()), b.size());
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) {
            v = (v << 8) | b[i];
        }
        return v;
    }
    std::string str()
    {
        std::string s(u32(), '\0');
        read(s.data(), s.size());
        return s;
    }
    void read(char* dst, std::size_t n)
    {
        if (!in_.read(dst, static_cast<std::streamsize>(n))) {
            throw Error("index file is truncated");
        }
    }

  private:
    std::istream& in_;
};

}  // namespace

void InvertedIndex::serialize(std::ostream& out) const
{
    Writer w(out);
    out.write(kMagic.data(), kMagic.size());
    w.u32(kFormatVersion);
    w.u8(tokenizer_options_.stem ? 1 : 0);
    w.u8(tokenizer_options_.remove_stopwords ? 1 : 0);
    w.u64(doc_ids_.size());
    for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
        w.str(doc_ids_[d]);
        w.u32(doc_lengths_[d]);
    }
    w.u64(terms_.size());
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        w.str(terms_[t]);
        w.u64(postings_[t].size());
        for (const auto& p : postings_[t]) {
            w.u32(p.doc);
            w.u32(p.tf);
        }
    }
    if (!out) {
        throw Error("failed to write index");
    }
}

InvertedIndex InvertedIndex::deserialize(std::istream& in)
{
    Reader r(in);
    std::array<char, 8> magic{};
    r.read(magic.data(), magic.size());
    if (magic != kMagic) {
        throw Error("not a convsearch index (bad magic)");
    }
    if (auto v = r.u32(); v != kFormatVersion) {
        throw Error("unsupported index format version " + std::to_string(v));
    }
    InvertedIndex idx;
    idx.tokenizer_options_.stem = r.u8() != 0;
    idx.tokenizer_options_.remove_stopwords = r.u8() != 0;

    auto n = r.u64();
    if (n == 0 || n > std::numeric_limits<DocOrdinal>::max()) {
        throw Error("index has an invalid document count");
    }
    idx.doc_ids_.reserve(n);
    idx.doc_lengths_.reserve(n);
    for (std::uint64_t d = 0; d < n; ++d) {
        idx.doc_ids_.push_back(r.str());
        idx.doc_lengths_.push_back(r.u32());
        if (!idx.doc_lookup_.emplace(idx.doc_ids_.back(), static_cast<DocOrdinal>(d)).second) {
            throw Error("index contains duplicate doc_id '" + idx.doc_ids_.back() + "'");
        }
    }
    auto v = r.u64();
    idx.terms_.reserve(v);
    idx.postings_.reserve(v);
    for (std::uint64_t t = 0; t < v; ++t) {
        idx.terms_.push_back(r.str());
        if (!idx.term_lookup_.emplace(idx.terms_.back(), static_cast<std::uint32_t>(t)).second) {
            throw Error("index contains duplicate term '" + idx.terms_.back() + "'");
        }
        auto df = r.u64();
        if (df > n) {
            throw Error("corrupt posting list for term '" + idx.terms_.back() + "'");
        }
        std::vector<Posting> list;
        list.reserve(df);
        for (std::uint64_t i = 0; i < df; ++i) {
            Posting p{r.u32(), r.u32()};
            if (p.doc >= n || p.tf == 0 || (!list.empty() && list.back().doc >= p.doc)) {
                throw Error("corrupt posting list for term '" + idx.terms_.back() + "'");
            }
            list.push_back(p);
        }
        idx.postings_.push_back(std::move(list));
    }
    idx.finish();
    return idx;
}

void InvertedIndex::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write index " + path.string());
    }
    serialize(out);
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open index " + path.string());
    }
    return deserialize(in);
}

// ---------------------------------------------------------------------------
// IndexBuilder

IndexBuilder::IndexBuilder(TokenizerOptions options) : tokenizer_(options)
{
    index_.tokenizer_options_ = options;
}

void IndexBuilder::add(const Passage& passage) { add(passage.doc_id, passage.text); }

void IndexBuilder::add(std::string_view doc_id, std::string_view text)
{
    if (doc_id.empty()) {
        throw Error("empty doc_id");
    }
    if (index_.doc_ids_.size() >= std::numeric_limits<DocOrdinal>::max()) {
        throw Error("collection too large for 32-bit doc ordinals");
    }
    auto doc = static_cast<DocOrdinal>(index_.doc_ids_.size());
    if (!index_.doc_lookup_.emplace(std::string(doc_id), doc).second) {
        throw Error("duplicate doc_id '" + std::string(doc_id) + "'");
    }
    index_.doc_ids_.emplace_back(doc_id);

    std::vector<std::uint32_t> touched;
    std::uint32_t length = 0;
    tokenizer_.for_each(text, [&](const std::string& token) {
        ++length;
        auto [it, inserted] =
            index_.term_lookup_.emplace(token, static_cast<std::uint32_t>(index_.terms_.size()));
        if (inserted) {
            index_.terms_.push_back(token);
            index_.postings_.emplace_back();
            scratch_.push_back(0);
        }
        auto tid = it->second;
        if (scratch_[tid]++ == 0) {
            touched.push_back(tid);
        }
    });
    for (auto tid : touched) {
        index_.postings_[tid].push_back({doc, scratch_[tid]});
        scratch_[tid] = 0;
    }
    index_.doc_lengths_.push_back(length);
}

InvertedIndex IndexBuilder::build() &&
{
    if (index_.doc_ids_.empty()) {
        throw Error("cannot build an index over an empty collection");
    }
    index_.finish();
    return std::move(index_);
}

InvertedIndex build_index(std::span<const Passage> passages, TokenizerOptions options)
{
    IndexBuilder builder(options);
    for (const auto& p : passages) {
        builder.add(p);
    }
    return std::move(builder).build();
}

InvertedIndex build_index_from_file(const std::filesystem::path& path, PassageFormat format,
                                    TokenizerOptions options)
{
    PassageReader reader(path, format);
    IndexBuilder builder(options);
    while (auto p = reader.next()) {
        builder.add(*p);
    }
    return std::move(builder).build();
}

// ---------------------------------------------------------------------------
// Scoring

double bm25_idf(std::size_t doc_count, std::size_t df) noexcept
{
    const double n = static_cast<double>(doc_count);
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double bm25_term_score(const InvertedIndex& index, const Bm25Params& params, std::size_t df,
                       std::uint32_t tf, std::uint32_t doc_len) noexcept
{
    const double avg = index.avg_doc_len();
    const double norm = avg > 0.0 ? static_cast<double>(doc_len) / avg : 1.0;
    const double f = static_cast<double>(tf);
    return bm25_idf(index.doc_count(), df) * f * (params.k1 + 1.0) /
           (f + params.k1 * (1.0 - params.b + params.b * norm));
}

double bm25_score(const InvertedIndex& index, const Bm25Params& params, const TokenStream& query,
                  DocOrdinal doc)
{
    if (doc >= index.doc_count()) {
        throw Error("unknown document ordinal " + std::to_string(doc));
    }
    double score = 0.0;
    for (const auto& token : query) {
        auto list = index.postings(token);
        auto it = std::lower_bound(list.begin(), list.end(), doc,
                                   [](const Posting& p, DocOrdinal d) { return p.doc < d; });
        if (it != list.end() && it->doc == doc) {
            score += bm25_term_score(index, params, list.size(), it->tf, index.doc_length(doc));
        }
    }
    return score;
}

double bm25_score(const InvertedIndex& index, const Bm25Params& params, const TokenStream& query,
                  const std::string& doc_id)
{
    auto doc = index.ordinal(doc_id);
    if (!doc) {
        throw Error("unknown doc_id '" + doc_id + "'");
    }
    return bm25_score(index, params, query, *doc);
}

namespace {

struct Candidate {
    DocOrdinal doc;
    double score;
};

// Term-at-a-time accumulation in query-token order, so every document's
// score is summed in the same order bm25_score() uses.
std::vector<Candidate> accumulate(const InvertedIndex& index, const Bm25Params& params,
                                  const TokenStream& query)
{
    std::vector<std::span<const Posting>> lists;
    lists.reserve(query.size());
    std::size_t total = 0;
    for (const auto& token : query) {
        lists.push_back(index.postings(token));
        total += lists.back().size();
    }
    std::vector<Candidate> out;
    if (total == 0) {
        return out;
    }
    const auto n = index.doc_count();
    if (total * 8 < n) {
        std::unordered_map<DocOrdinal, double> acc;
        acc.reserve(total);
        for (const auto& list : lists) {
            for (const auto& p : list) {
                acc[p.doc] += bm25_term_score(index, params, list.size(), p.tf, index.doc_length(p.doc));
            }
        }
        out.reserve(acc.size());
        for (const auto& [doc, score] : acc) {
            out.push_back({doc, score});
        }
    } else {
        std::vector<double> acc(n, 0.0);
        std::vector<char> seen(n, 0);
        for (const auto& list : lists) {
            for (const auto& p : list) {
                acc[p.doc] += bm25_term_score(index, params, list.size(), p.tf, index.doc_length(p.doc));
                seen[p.doc] = 1;
            }
        }
        for (std::size_t d = 0; d < n; ++d) {
            if (seen[d]) {
                out.push_back({static_cast<DocOrdinal>(d), acc[d]});
            }
        }
    }
    std::erase_if(out, [](const Candidate& c) { return !(c.score > 0.0); });
    return out;
}

}  // namespace

RankedList retrieve_topk(const InvertedIndex& index, const Bm25Params& params, const TokenStream& query,
                         std::size_t k, std::string qid)
{
    if (k == 0) {
        throw ValidationError("retrieve_topk: k must be >= 1");
    }
    auto candidates = accumulate(index, params, query);
    auto before = [&index](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return index.id_order(a.doc) < index.id_order(b.doc);
    };
    const auto keep = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), before);
    RankedList list;
    list.qid = std::move(qid);
    list.entries.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        list.entries.push_back({index.doc_id(candidates[i].doc), candidates[i].score, static_cast<int>(i) + 1});
    }
    return list;
}

double max_score_single_term(const InvertedIndex& index, const Bm25Params& params, const std::string& term)
{
    auto list = index.postings(term);
    double best = 0.0;
    for (const auto& p : list) {
        // 0.0 + x keeps the value bit-identical to a one-token bm25_score().
        best = std::max(best, 0.0 + bm25_term_score(index, params, list.size(), p.tf, index.doc_length(p.doc)));
    }
    return best;
}

double max_score_utterance(const InvertedIndex& index, const Bm25Params& params, const TokenStream& tokens)
{
    if (tokens.empty()) {
        return 0.0;
    }
    auto top = retrieve_topk(index, params, tokens, 1);
    return top.empty() ? 0.0 : top.entries.front().score;
}

// ---------------------------------------------------------------------------
// MaxScoreCache

MaxScoreCache::MaxScoreCache(const InvertedIndex& index, Bm25Params params) : index_(index), params_(params)
{
    params_.validate();
}

double MaxScoreCache::term(const std::string& term) const
{
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(term); it != cache_.end()) {
            ++hits_;
            return it->second;
        }
    }
    double value = max_score_single_term(index_, params_, term);
    std::lock_guard lock(mutex_);
    ++misses_;
    cache_.emplace(term, value);
    return value;
}

double MaxScoreCache::utterance(const TokenStream& tokens) const
{
    return max_score_utterance(index_, params_, tokens);
}

std::size_t MaxScoreCache::size() const
{
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::size_t MaxScoreCache::hits() const
{
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t MaxScoreCache::misses() const
{
    std::lock_guard lock(mutex_);
    return misses_;
}

std::vector<std::pair<std::string, double>> MaxScoreCache::snapshot() const
{
    std::vector<std::pair<std::string, double>> out;
    {
        std::lock_guard lock(mutex_);
        out.assign(cache_.begin(), cache_.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void MaxScoreCache::preload(std::span<const std::pair<std::string, double>> entries)
{
    std::lock_guard lock(mutex_);
    for (const auto& [term, value] : entries) {
        cache_.insert_or_assign(term, value);
    }
}

}  // namespace convsearch
