// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "convsearch/error.hpp"
#include "convsearch/index.hpp"
#include "generators.hpp"
#include "reference.hpp"
#include "test_util.hpp"

namespace convsearch {
namespace {

std::vector<Passage> small_collection()
{
    return {{"d3", "apple banana apple"}, {"d1", "banana cherry"}, {"d2", "cherry cherry cherry date"},
            {"d0", "elderberry"}};
}

TEST(Index, CollectionStatistics)
{
    const auto index = build_index(small_collection());
    EXPECT_EQ(index.doc_count(), 4U);
    EXPECT_EQ(index.total_tokens(), 10U);
    EXPECT_DOUBLE_EQ(index.avg_doc_len(), 2.5);
    EXPECT_EQ(index.document_frequency("cherry"), 2U);
    EXPECT_EQ(index.document_frequency("missing"), 0U);
    EXPECT_EQ(index.term_frequency("cherry", *index.ordinal("d2")), 3U);
    EXPECT_EQ(index.term_frequency("apple", *index.ordinal("d1")), 0U);
    EXPECT_EQ(index.doc_length(*index.ordinal("d2")), 4U);
}

TEST(Index, PostingsSortedByOrdinal)
{
    const auto index = build_index(small_collection());
    for (const auto& term : index.terms()) {
        const auto p = index.postings(term);
        for (std::size_t i = 1; i < p.size(); ++i) {
            EXPECT_LT(p[i - 1].doc, p[i].doc);
        }
    }
}

TEST(Index, IdfMatchesClosedForm)
{
    EXPECT_DOUBLE_EQ(bm25_idf(4, 2), std::log(1.0 + 2.5 / 2.5));
    EXPECT_DOUBLE_EQ(bm25_idf(10, 1), std::log(1.0 + 9.5 / 1.5));
    EXPECT_GT(bm25_idf(10, 10), 0.0);
}

TEST(Index, ScoreMatchesHandComputation)
{
    const auto index = build_index(small_collection());
    const Bm25Params p{0.82, 0.68};
    // cherry in d2: tf = 3, df = 2, N = 4, dl = 4, avgdl = 2.5
    const double idf = std::log(1.0 + (4 - 2 + 0.5) / (2 + 0.5));
    const double norm = 0.82 * (1 - 0.68 + 0.68 * 4 / 2.5);
    const double expected = idf * 3 * 1.82 / (3 + norm);
    EXPECT_NEAR(bm25_score(index, p, {"cherry"}, "d2"), expected, 1e-12);
    EXPECT_NEAR(bm25_score(index, p, {"cherry", "cherry"}, "d2"), 2 * expected, 1e-12);
    EXPECT_EQ(bm25_score(index, p, {"zzz"}, "d2"), 0.0);
    EXPECT_THROW((void)bm25_score(index, p, {"cherry"}, "nope"), Error);
}

TEST(Index, TopKOrderAndTieBreak)
{
    // identical docs tie; the smaller id wins regardless of collection order
    const std::vector<Passage> docs{{"b", "x y"}, {"a", "x y"}, {"c", "x"}, {"d", "z"}};
    const auto index = build_index(docs);
    const auto list = retrieve_topk(index, {}, {"x"}, 10, "q");
    ASSERT_EQ(list.entries.size(), 3U);
    EXPECT_EQ(list.qid, "q");
    EXPECT_EQ(list.entries[0].doc_id, "c");
    EXPECT_EQ(list.entries[1].doc_id, "a");
    EXPECT_EQ(list.entries[2].doc_id, "b");
    EXPECT_EQ(list.entries[1].score, list.entries[2].score);
    EXPECT_TRUE(has_contiguous_ranks(list));
}

TEST(Index, TopKTruncatesAndRejectsZero)
{
    const auto index = build_index(small_collection());
    EXPECT_EQ(retrieve_topk(index, {}, {"banana", "cherry"}, 2).entries.size(), 2U);
    EXPECT_TRUE(retrieve_topk(index, {}, {"nothing"}, 5).entries.empty());
    EXPECT_THROW((void)retrieve_topk(index, {}, {"apple"}, 0), ValidationError);
}

TEST(Index, MaxScores)
{
    const auto index = build_index(small_collection());
    const Bm25Params p;
    EXPECT_EQ(max_score_single_term(index, p, "unseen"), 0.0);
    EXPECT_NEAR(max_score_single_term(index, p, "cherry"), bm25_score(index, p, {"cherry"}, "d2"), 1e-15);
    const auto top = retrieve_topk(index, p, {"banana", "date"}, 1);
    EXPECT_EQ(max_score_utterance(index, p, {"banana", "date"}), top.entries[0].score);
    EXPECT_EQ(max_score_utterance(index, p, {"unseen"}), 0.0);
}

TEST(Index, EmptyCollectionAndBadIdsRejected)
{
    EXPECT_THROW((void)build_index(std::vector<Passage>{}), Error);
    IndexBuilder builder;
    builder.add("a", "text");
    EXPECT_THROW(builder.add("a", "again"), Error);
    EXPECT_THROW(builder.add("", "no id"), Error);
}

TEST(Index, ParamsValidated)
{
    EXPECT_THROW((Bm25Params{-1.0, 0.5}.validate()), ValidationError);
    EXPECT_THROW((Bm25Params{1.0, 1.5}.validate()), ValidationError);
    EXPECT_NO_THROW((Bm25Params{0.0, 0.0}.validate()));
}

TEST(Index, SerializationRoundTripIsExact)
{
    const auto index = build_index(small_collection(), {.stem = true, .remove_stopwords = true});
    std::stringstream buf;
    index.serialize(buf);
    const auto copy = InvertedIndex::deserialize(buf);
    EXPECT_EQ(copy.doc_count(), index.doc_count());
    EXPECT_EQ(copy.terms(), index.terms());
    EXPECT_EQ(copy.avg_doc_len(), index.avg_doc_len());
    EXPECT_TRUE(copy.tokenizer_options().stem);
    const auto a = retrieve_topk(index, {}, {"cherri", "banana"}, 10);
    const auto b = retrieve_topk(copy, {}, {"cherri", "banana"}, 10);
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].doc_id, b.entries[i].doc_id);
        EXPECT_EQ(a.entries[i].score, b.entries[i].score);
    }
}

TEST(Index, CorruptFileRejected)
{
    std::stringstream bad("not an index at all");
    EXPECT_THROW((void)InvertedIndex::deserialize(bad), Error);

    const auto index = build_index(small_collection());
    std::stringstream buf;
    index.serialize(buf);
    auto bytes = buf.str();
    std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
    EXPECT_THROW((void)InvertedIndex::deserialize(truncated), Error);
}

TEST(Index, SaveLoadFile)
{
    testutil::TempDir dir;
    const auto index = build_index(small_collection());
    index.save(dir / "i.bin");
    EXPECT_EQ(InvertedIndex::load(dir / "i.bin").terms(), index.terms());
    EXPECT_THROW((void)InvertedIndex::load(dir / "missing.bin"), Error);
}

TEST(Index, BuildFromFileEqualsInMemory)
{
    testutil::TempDir dir;
    write_passages(dir / "c.jsonl", small_collection(), PassageFormat::jsonl);
    const auto a = build_index_from_file(dir / "c.jsonl", PassageFormat::jsonl);
    const auto b = build_index(small_collection());
    EXPECT_EQ(a.terms(), b.terms());
    EXPECT_EQ(a.total_tokens(), b.total_tokens());
}

TEST(Index, MatchesBruteForceOnRandomCorpora)
{
    gen::Rng rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const auto corpus = gen::toy_corpus(rng);
        const Bm25Params p{0.3 + 0.1 * (trial % 10), 0.1 * (trial % 11)};
        const auto index = build_index(corpus.passages);
        const reference::BruteBm25 oracle(corpus.docs, p.k1, p.b);
        for (int q = 0; q < 5; ++q) {
            const auto query = gen::toy_query(rng, corpus.vocab);
            const auto k = gen::uniform(rng, 1, 60);
            const auto got = retrieve_topk(index, p, query, k);
            const auto want = oracle.rank(query, k);
            ASSERT_EQ(got.entries.size(), want.size());
            for (std::size_t i = 0; i < want.size(); ++i) {
                EXPECT_EQ(got.entries[i].doc_id, want[i].id);
                EXPECT_NEAR(got.entries[i].score, want[i].score, 1e-9);
            }
        }
    }
}

TEST(MaxScoreCache, CachesAndSnapshots)
{
    const auto index = build_index(small_collection());
    MaxScoreCache cache(index, {});
    const double a = cache.term("cherry");
    EXPECT_EQ(cache.term("cherry"), a);
    EXPECT_EQ(cache.misses(), 1U);
    EXPECT_EQ(cache.hits(), 1U);
    (void)cache.term("apple");
    const auto snap = cache.snapshot();
    ASSERT_EQ(snap.size(), 2U);
    EXPECT_EQ(snap[0].first, "apple");

    MaxScoreCache other(index, {});
    other.preload(snap);
    EXPECT_EQ(other.term("cherry"), a);
    EXPECT_EQ(other.misses(), 0U);
}

}  // namespace
}  // namespace convsearch
