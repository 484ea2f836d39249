// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "convsearch/ranked_list.hpp"

namespace convsearch {

// TREC run files: `qid Q0 doc_id rank score tag`, one entry per line.

/// Scores are written in shortest round-trip form, so read_run() returns
/// exactly what was written.
void write_run(std::ostream& out, const Run& run, std::string_view tag);
void write_run(const std::filesystem::path& path, const Run& run, std::string_view tag);

/// Groups lines by qid in first-appearance order and sorts each group by
/// rank. Ranks must be 1..n without gaps and doc ids unique per query
/// (ParseError otherwise). Scores that increase down a list are kept as
/// given and reported through `warnings` (or stderr when null).
[[nodiscard]] Run read_run(std::istream& in, const std::string& source,
                           std::vector<std::string>* warnings = nullptr);
[[nodiscard]] Run read_run(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

[[nodiscard]] std::string format_score(double score);

}  // namespace convsearch
