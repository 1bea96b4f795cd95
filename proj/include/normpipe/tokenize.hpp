#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace normpipe::textmetrics {

/// Ordered token list. Tokens are never empty and never contain whitespace.
struct TokenSeq {
    std::vector<std::string> tokens;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }
    const std::string& operator[](std::size_t i) const { return tokens[i]; }
    auto begin() const { return tokens.begin(); }
    auto end() const { return tokens.end(); }

    friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

/// The pipeline tokenizer: lowercase, split on whitespace, strip leading and
/// trailing punctuation from each token (intra-word apostrophes and hyphens
/// survive), drop empties. Curly apostrophes are folded to ASCII.
TokenSeq tokenize(std::string_view text);

/// Whitespace split with no normalisation (case and punctuation preserved).
TokenSeq split_whitespace(std::string_view text);

/// Machine-translation "13a" tokenisation: case-preserving, splits most ASCII
/// punctuation into separate tokens, keeps '.' and ',' inside numbers, keeps
/// apostrophes and hyphens attached.
TokenSeq tokenize_13a(std::string_view text);

/// Splits on '.', then whitespace-splits each piece; empty pieces are dropped.
/// Tokens keep their case and any non-period punctuation.
std::vector<TokenSeq> split_sentences(std::string_view text);

/// Concatenation of split_sentences(text).
TokenSeq sentence_words(std::string_view text);

}  // namespace normpipe::textmetrics
