// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace convsearch {

struct Passage {
    std::string doc_id;
    std::string text;

    friend bool operator==(const Passage&, const Passage&) = default;
};

enum class PassageFormat { tsv, jsonl };

[[nodiscard]] PassageFormat parse_passage_format(std::string_view name);

/// Streaming reader over a passage file. TSV rows are `doc_id<TAB>text`
/// (text is everything after the first TAB, kept byte-exact); JSONL rows
/// are objects with string fields `id` and `contents`. Blank lines are
/// skipped. Malformed rows and repeated ids raise ParseError with the line
/// number.
class PassageReader {
  public:
    PassageReader(const std::filesystem::path& path, PassageFormat format);

    /// Returns the next passage, or nullopt at end of file.
    [[nodiscard]] std::optional<Passage> next();

    [[nodiscard]] std::size_t count() const noexcept { return count_; }

  private:
    std::filesystem::path path_;
    std::ifstream in_;
    PassageFormat format_;
    std::size_t line_no_ = 0;
    std::size_t count_ = 0;
    std::unordered_set<std::string> seen_;
};

[[nodiscard]] std::vector<Passage> load_passages(const std::filesystem::path& path,
                                                 PassageFormat format);

/// Throws Error if a passage cannot be represented in `format` (TSV text
/// containing a newline, empty id).
void write_passages(const std::filesystem::path& path, std::span<const Passage> passages,
                    PassageFormat format);

struct Utterance {
    std::string session_id;
    int turn = 0;  // 1-based
    std::string raw_text;

    /// Query id wire format: `<session>_<turn>`.
    [[nodiscard]] std::string qid() const { return make_qid(session_id, turn); }

    [[nodiscard]] static std::string make_qid(std::string_view session_id, int turn);
};

struct Session {
    std::string id;
    std::vector<Utterance> turns;  // turns[i].turn == i + 1
};

/// Reads a CAsT 2019 topic file: a JSON array of
/// `{"number": <session>, "turn": [{"number": <turn>, "raw_utterance": ...}]}`.
/// Session numbers may be integers or strings. Turns are ordered by number
/// and must be exactly 1..n.
[[nodiscard]] std::vector<Session> load_sessions(const std::filesystem::path& path);

[[nodiscard]] std::vector<Session> parse_sessions(std::string_view json_text,
                                                  const std::string& source = "<topics>");

}  // namespace convsearch
