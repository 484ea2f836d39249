// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/tokenizer.hpp"

#include <algorithm>
#include <array>

namespace convsearch {

namespace {

constexpr std::array<std::string_view, 33> kStopwords = {
    "a",    "an",   "and",   "are",  "as",    "at",   "be",    "but",  "by",
    "for",  "if",   "in",    "into", "is",    "it",   "no",    "not",  "of",
    "on",   "or",   "such",  "that", "the",   "their", "then", "there", "these",
    "they", "this", "to",    "was",  "will",  "with"};

}  // namespace

bool is_stopword(std::string_view token) noexcept
{
    return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

bool Tokenizer::accept(std::string& token) const
{
    if (options_.remove_stopwords && is_stopword(token)) {
        return false;
    }
    if (options_.stem) {
        token = porter_stem(token);
    }
    return !token.empty();
}

TokenStream Tokenizer::operator()(std::string_view text) const
{
    TokenStream out;
    for_each(text, [&out](const std::string& t) { out.push_back(t); });
    return out;
}

TokenStream tokenize(std::string_view text) { return Tokenizer{}(text); }

std::string join_tokens(const TokenStream& tokens)
{
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += t;
    }
    return out;
}

}  // namespace convsearch
