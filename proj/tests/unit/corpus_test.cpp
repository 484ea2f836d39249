// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include <gtest/gtest.h>

#include "convsearch/corpus.hpp"
#include "convsearch/error.hpp"
#include "test_util.hpp"

namespace convsearch {
namespace {

using testutil::TempDir;
using testutil::write_file;

TEST(Passages, TsvKeepsTextAfterFirstTab)
{
    TempDir dir;
    write_file(dir / "c.tsv", "p1\tfirst passage\n\np2\ttext\twith a tab\n");
    const auto ps = load_passages(dir / "c.tsv", PassageFormat::tsv);
    ASSERT_EQ(ps.size(), 2U);
    EXPECT_EQ(ps[0], (Passage{"p1", "first passage"}));
    EXPECT_EQ(ps[1], (Passage{"p2", "text\twith a tab"}));
}

TEST(Passages, JsonlReadsIdAndContents)
{
    TempDir dir;
    write_file(dir / "c.jsonl", R"({"id": "a", "contents": "alpha"})"
                                "\n"
                                R"({"contents": "beta", "id": "b"})"
                                "\n");
    const auto ps = load_passages(dir / "c.jsonl", PassageFormat::jsonl);
    ASSERT_EQ(ps.size(), 2U);
    EXPECT_EQ(ps[1], (Passage{"b", "beta"}));
}

TEST(Passages, RoundTripBothFormats)
{
    TempDir dir;
    const std::vector<Passage> ps{{"x1", "Caf\xc3\xa9 \"quoted\""}, {"x2", "plain"}};
    for (auto fmt : {PassageFormat::tsv, PassageFormat::jsonl}) {
        const auto p = dir / (fmt == PassageFormat::tsv ? "out.tsv" : "out.jsonl");
        write_passages(p, ps, fmt);
        EXPECT_EQ(load_passages(p, fmt), ps);
    }
}

TEST(Passages, TsvRejectsNewlineInText)
{
    TempDir dir;
    const std::vector<Passage> ps{{"x1", "two\nlines"}};
    EXPECT_THROW(write_passages(dir / "o.tsv", ps, PassageFormat::tsv), Error);
    EXPECT_NO_THROW(write_passages(dir / "o.jsonl", ps, PassageFormat::jsonl));
}

TEST(Passages, MalformedRowReportsLineNumber)
{
    TempDir dir;
    write_file(dir / "c.tsv", "p1\tok\np2 missing tab\n");
    try {
        (void)load_passages(dir / "c.tsv", PassageFormat::tsv);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2U);
    }
}

TEST(Passages, DuplicateIdRejected)
{
    TempDir dir;
    write_file(dir / "c.tsv", "p1\ta\np2\tb\np1\tc\n");
    try {
        (void)load_passages(dir / "c.tsv", PassageFormat::tsv);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3U);
    }
}

TEST(Passages, StreamingReaderCounts)
{
    TempDir dir;
    write_file(dir / "c.tsv", "a\t1\nb\t2\nc\t3\n");
    PassageReader reader(dir / "c.tsv", PassageFormat::tsv);
    std::size_t n = 0;
    while (reader.next()) {
        ++n;
    }
    EXPECT_EQ(n, 3U);
    EXPECT_EQ(reader.count(), 3U);
}

TEST(Passages, UnknownFormatIsValidationError)
{
    EXPECT_EQ(parse_passage_format("jsonl"), PassageFormat::jsonl);
    EXPECT_THROW((void)parse_passage_format("xml"), ValidationError);
}

TEST(Sessions, TrainingTopicOneHasTwelveOrderedTurns)
{
    const auto sessions = load_sessions(testutil::fixture("cast_train_topic1.json"));
    ASSERT_EQ(sessions.size(), 1U);
    const auto& s = sessions[0];
    EXPECT_EQ(s.id, "1");
    ASSERT_EQ(s.turns.size(), 12U);
    EXPECT_EQ(s.turns[0].raw_text, "What is a physician's assistant?");
    EXPECT_EQ(s.turns[2].raw_text, "What does it cost?");
    EXPECT_EQ(s.turns[11].raw_text, "How much longer does it take to become a doctor after being an NP?");
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
        EXPECT_EQ(s.turns[i].turn, static_cast<int>(i + 1));
        EXPECT_EQ(s.turns[i].qid(), "1_" + std::to_string(i + 1));
    }
}

TEST(Sessions, TurnsSortedByNumberAndStringSessionIds)
{
    const auto sessions = parse_sessions(R"([{"number": "s9", "turn": [
        {"number": 2, "raw_utterance": "second"},
        {"number": 1, "raw_utterance": "first"}]}])");
    ASSERT_EQ(sessions.size(), 1U);
    EXPECT_EQ(sessions[0].turns[0].raw_text, "first");
    EXPECT_EQ(sessions[0].turns[1].qid(), "s9_2");
}

TEST(Sessions, GapInTurnsRejected)
{
    EXPECT_THROW((void)parse_sessions(R"([{"number": 1, "turn": [
        {"number": 1, "raw_utterance": "a"}, {"number": 3, "raw_utterance": "c"}]}])"),
                 Error);
}

TEST(Sessions, MalformedJsonRejected)
{
    EXPECT_THROW((void)parse_sessions("[{"), Error);
    EXPECT_THROW((void)parse_sessions(R"([{"number": 1}])"), Error);
}

}  // namespace
}  // namespace convsearch
