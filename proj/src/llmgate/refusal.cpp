#include "normpipe/llmgate.hpp"

namespace normpipe::llmgate {
namespace {

// Lowercases ASCII, folds U+2019 to '\'', and keeps at most `limit` code points.
std::string fold_prefix(std::string_view text, std::size_t limit) {
    std::string out;
    std::size_t code_points = 0;
    std::size_t i = 0;
    while (i < text.size() && code_points < limit) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 1;
        if (lead >= 0xF0) len = 4;
        else if (lead >= 0xE0) len = 3;
        else if (lead >= 0xC0) len = 2;
        len = std::min(len, text.size() - i);
        const std::string_view cp = text.substr(i, len);
        if (cp == "\xE2\x80\x99" || cp == "\xE2\x80\x98")
            out.push_back('\'');
        else if (len == 1)
            out.push_back(static_cast<char>(std::tolower(lead)));
        else
            out.append(cp);
        i += len;
        ++code_points;
    }
    return out;
}

}  // namespace

std::vector<std::string> default_refusal_patterns() {
    return {"I'm sorry, I can't",       "I cannot",          "unable to identify",
            "can't help with that",     "cannot interpret images", "can't interpret images",
            "involving people's identity"};
}

bool detect_refusal(std::string_view text, const std::vector<std::string>& patterns) {
    const std::string head = fold_prefix(text, 200);
    for (const std::string& p : patterns) {
        const std::string needle = fold_prefix(p, p.size());
        if (!needle.empty() && head.find(needle) != std::string::npos) return true;
    }
    return false;
}

bool detect_refusal(std::string_view text) {
    static const std::vector<std::string> kDefaults = default_refusal_patterns();
    return detect_refusal(text, kDefaults);
}

}  // namespace normpipe::llmgate
