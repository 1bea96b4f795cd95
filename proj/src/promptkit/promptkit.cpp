#include "normpipe/promptkit.hpp"

#include <array>
#include <cctype>

namespace normpipe::resources {
extern const std::string_view kNaiveScreeningTemplate;
extern const std::string_view kAdvancedScreeningTemplate;
extern const std::string_view kJudgeTemplate;
}  // namespace normpipe::resources

namespace normpipe::promptkit {
namespace {

constexpr std::array<std::string_view, 6> kPlaceholders = {"{age}",      "{gender}",   "{mmse}",
                                                           "{category}", "{question}", "{response}"};

std::string_view strip_trailing_newlines(std::string_view s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

// Collapses runs of spaces/tabs and removes spaces before punctuation.
std::string normalize_spaces(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        const bool space = c == ' ' || c == '\t';
        if (space) {
            if (!out.empty() && out.back() != ' ') out.push_back(' ');
            continue;
        }
        if ((c == ',' || c == '.') && !out.empty() && out.back() == ' ') out.pop_back();
        out.push_back(c);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

PromptSpec make_spec(PromptKind kind, std::string rendered, std::optional<corpus::ParticipantProfile> profile) {
    PromptSpec spec;
    spec.kind = kind;
    spec.fingerprint = fingerprint(kind, rendered);
    spec.rendered = std::move(rendered);
    spec.profile = std::move(profile);
    return spec;
}

std::string substitute(std::string_view tmpl, std::string_view age, std::string_view gender,
                       std::string_view mmse, std::string_view category) {
    std::string out(tmpl);
    replace_all(out, "{age}", age);
    replace_all(out, "{gender}", gender);
    replace_all(out, "{mmse}", mmse);
    replace_all(out, "{category}", category);
    return out;
}

}  // namespace

std::string_view naive_template() { return strip_trailing_newlines(resources::kNaiveScreeningTemplate); }
std::string_view advanced_template() { return strip_trailing_newlines(resources::kAdvancedScreeningTemplate); }
std::string_view judge_template() { return strip_trailing_newlines(resources::kJudgeTemplate); }

bool has_placeholder(std::string_view text) {
    for (std::string_view p : kPlaceholders)
        if (text.find(p) != std::string_view::npos) return true;
    return false;
}

std::string fingerprint(PromptKind kind, std::string_view rendered) {
    std::string material(to_string(kind));
    material += '\n';
    material += rendered;
    return sha256_hex(material);
}

std::string render_naive_literal(const corpus::ParticipantProfile& p) {
    return substitute(naive_template(), p.age ? std::to_string(*p.age) + "-year-old" : "of unknown age",
                      p.gender ? to_lower_ascii(to_string(*p.gender)) : "of unspecified gender",
                      p.mmse ? "with an MMSE score of " + std::to_string(*p.mmse) : "with an unknown MMSE score",
                      p.category ? "categorized as " + std::string(to_string(*p.category))
                                 : "with an unspecified cognitive status");
}

PromptSpec build_naive_prompt(const corpus::ParticipantProfile& p) {
    // With no age the subject becomes "A patient of unknown age" so the article
    // still has a noun to attach to.
    const std::string age = p.age ? std::to_string(*p.age) + "-year-old" : "patient of unknown age";
    std::string rendered = normalize_spaces(substitute(
        naive_template(), age, p.gender ? to_lower_ascii(to_string(*p.gender)) : "of unspecified gender",
        p.mmse ? "with an MMSE score of " + std::to_string(*p.mmse) : "with an unknown MMSE score",
        p.category ? "categorized as " + std::string(to_string(*p.category))
                   : "with an unspecified cognitive status"));
    return make_spec(PromptKind::Naive, std::move(rendered), p);
}

PromptSpec build_advanced_prompt(const corpus::ParticipantProfile& p) {
    std::string rendered =
        substitute(advanced_template(), p.age ? std::to_string(*p.age) : "unknown",
                   p.gender ? to_lower_ascii(to_string(*p.gender)) : "unknown",
                   p.mmse ? std::to_string(*p.mmse) : "unknown",
                   p.category ? std::string(to_string(*p.category)) : "unknown");
    return make_spec(PromptKind::Advanced, std::move(rendered), p);
}

PromptSpec build_judge_prompt(std::string_view question, std::string_view response) {
    if (trim(response).empty()) throw PreconditionError("judge prompt needs a non-empty response");
    // Single pass so braces inside the response are never re-expanded.
    const std::string_view tmpl = judge_template();
    std::string out;
    out.reserve(tmpl.size() + question.size() + response.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl.substr(i).starts_with("{question}")) {
            out += question;
            i += 10;
        } else if (tmpl.substr(i).starts_with("{response}")) {
            out += response;
            i += 10;
        } else {
            out.push_back(tmpl[i++]);
        }
    }
    return make_spec(PromptKind::Judge, std::move(out), std::nullopt);
}

PromptSpec build_prompt(PromptKind kind, const corpus::ParticipantProfile& profile) {
    switch (kind) {
        case PromptKind::Naive: return build_naive_prompt(profile);
        case PromptKind::Advanced: return build_advanced_prompt(profile);
        case PromptKind::Judge: break;
    }
    throw PreconditionError("build_prompt: judge prompts need a question and a response");
}

}  // namespace normpipe::promptkit
