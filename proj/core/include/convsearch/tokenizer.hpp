// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <string>
#include <utility>
#include <string_view>
#include <vector>

namespace convsearch {

/// Ordered normalized terms. Duplicates are meaningful: a repeated query
/// term contributes to the retrieval score once per occurrence.
using TokenStream = std::vector<std::string>;

struct TokenizerOptions {
    bool stem = false;
    bool remove_stopwords = false;

    friend bool operator==(const TokenizerOptions&, const TokenizerOptions&) = default;
};

/// Lowercases ASCII letters and splits on every byte that is not an ASCII
/// letter or digit. Bytes >= 0x80 are kept as word characters so multi-byte
/// UTF-8 sequences never get torn apart. Optional Porter stemming and
/// stopword removal run afterwards, stopwords first.
///
/// Documents and queries must go through the same Tokenizer; the index
/// records the options it was built with.
class Tokenizer {
  public:
    Tokenizer() = default;
    explicit Tokenizer(TokenizerOptions options) : options_(options) {}

    [[nodiscard]] TokenStream operator()(std::string_view text) const;

    /// Calls `sink(token)` for every token without materializing a vector.
    template <typename Sink>
    void for_each(std::string_view text, Sink&& sink) const;

    [[nodiscard]] const TokenizerOptions& options() const noexcept { return options_; }

  private:
    [[nodiscard]] bool accept(std::string& token) const;

    TokenizerOptions options_;
};

/// Default tokenization: no stemming, no stopword removal.
[[nodiscard]] TokenStream tokenize(std::string_view text);

/// Porter (1980) suffix stripper. Input must already be lowercase ASCII;
/// words of length <= 2 are returned unchanged.
[[nodiscard]] std::string porter_stem(std::string_view word);

/// Lucene's default English stop set (33 words).
[[nodiscard]] bool is_stopword(std::string_view token) noexcept;

[[nodiscard]] std::string join_tokens(const TokenStream& tokens);

namespace detail {
[[nodiscard]] constexpr bool is_word_byte(unsigned char c) noexcept
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}
[[nodiscard]] constexpr char to_lower_ascii(char c) noexcept
{
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}
}  // namespace detail

template <typename Sink>
void Tokenizer::for_each(std::string_view text, Sink&& sink) const
{
    std::string token;
    auto flush = [&] {
        if (!token.empty() && accept(token)) {
            sink(std::as_const(token));
        }
        token.clear();
    };
    for (char c : text) {
        if (detail::is_word_byte(static_cast<unsigned char>(c))) {
            token.push_back(detail::to_lower_ascii(c));
        } else {
            flush();
        }
    }
    flush();
}

}  // namespace convsearch
