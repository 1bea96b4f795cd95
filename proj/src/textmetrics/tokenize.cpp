#include "normpipe/tokenize.hpp"

#include <array>
#include <cctype>
#include <regex>

namespace normpipe::textmetrics {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Multi-byte punctuation that shows up in transcripts and model output.
constexpr std::array<std::string_view, 8> kUnicodePunct = {
    "\xE2\x80\xA6",  // ellipsis
    "\xE2\x80\x98",  // left single quote
    "\xE2\x80\x99",  // right single quote
    "\xE2\x80\x9C",  // left double quote
    "\xE2\x80\x9D",  // right double quote
    "\xE2\x80\x93",  // en dash
    "\xE2\x80\x94",  // em dash
    "\xC2\xBF",      // inverted question mark
};

std::size_t punct_prefix_len(std::string_view s) {
    if (s.empty()) return 0;
    if (std::ispunct(static_cast<unsigned char>(s.front()))) return 1;
    for (std::string_view p : kUnicodePunct)
        if (s.starts_with(p)) return p.size();
    return 0;
}

std::size_t punct_suffix_len(std::string_view s) {
    if (s.empty()) return 0;
    if (std::ispunct(static_cast<unsigned char>(s.back()))) return 1;
    for (std::string_view p : kUnicodePunct)
        if (s.ends_with(p)) return p.size();
    return 0;
}

std::string fold_apostrophes(std::string_view word) {
    static constexpr std::string_view kCurly = "\xE2\x80\x99";
    std::string out;
    out.reserve(word.size());
    for (std::size_t i = 0; i < word.size();) {
        if (word.substr(i).starts_with(kCurly)) {
            out.push_back('\'');
            i += kCurly.size();
        } else {
            out.push_back(word[i++]);
        }
    }
    return out;
}

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) fn(text.substr(start, i - start));
    }
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    for_each_word(text, [&](std::string_view raw) {
        std::string word = fold_apostrophes(raw);
        std::string_view w = word;
        while (std::size_t n = punct_prefix_len(w)) w.remove_prefix(n);
        while (std::size_t n = punct_suffix_len(w)) w.remove_suffix(n);
        if (w.empty()) return;
        std::string lowered(w);
        for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.tokens.push_back(std::move(lowered));
    });
    return out;
}

TokenSeq split_whitespace(std::string_view text) {
    TokenSeq out;
    for_each_word(text, [&](std::string_view w) { out.tokens.emplace_back(w); });
    return out;
}

TokenSeq tokenize_13a(std::string_view text) {
    std::string line(text);
    replace_all(line, "<skipped>", "");
    replace_all(line, "-\n", "");
    for (char& c : line)
        if (c == '\n') c = ' ';
    if (line.find('&') != std::string::npos) {
        replace_all(line, "&quot;", "\"");
        replace_all(line, "&amp;", "&");
        replace_all(line, "&lt;", "<");
        replace_all(line, "&gt;", ">");
    }
    line = " " + line + " ";

    static const std::regex kSymbols(R"(([{-~\[-` -&(-+:-@/]))");
    static const std::regex kPeriodCommaAfter(R"(([^0-9])([\.,]))");
    static const std::regex kPeriodCommaBefore(R"(([\.,])([^0-9]))");
    static const std::regex kDashAfterDigit(R"(([0-9])(-))");
    line = std::regex_replace(line, kSymbols, " $1 ");
    line = std::regex_replace(line, kPeriodCommaAfter, "$1 $2 ");
    line = std::regex_replace(line, kPeriodCommaBefore, " $1 $2");
    line = std::regex_replace(line, kDashAfterDigit, "$1 $2 ");
    return split_whitespace(line);
}

std::vector<TokenSeq> split_sentences(std::string_view text) {
    std::vector<TokenSeq> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t dot = text.find('.', start);
        if (dot == std::string_view::npos) dot = text.size();
        TokenSeq words = split_whitespace(text.substr(start, dot - start));
        if (!words.empty()) out.push_back(std::move(words));
        start = dot + 1;
    }
    return out;
}

TokenSeq sentence_words(std::string_view text) {
    TokenSeq out;
    for (TokenSeq& s : split_sentences(text))
        for (std::string& w : s.tokens) out.tokens.push_back(std::move(w));
    return out;
}

}  // namespace normpipe::textmetrics
