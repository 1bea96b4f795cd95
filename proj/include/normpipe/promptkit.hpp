#pragma once

#include "normpipe/common.hpp"
#include "normpipe/corpus.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace normpipe::promptkit {

/// A rendered prompt. `fingerprint` is sha256(kind + "\n" + rendered).
struct PromptSpec {
    PromptKind kind = PromptKind::Naive;
    std::string rendered;
    std::optional<corpus::ParticipantProfile> profile;
    std::string fingerprint;
};

/// Screening prompt from the one-line naive template. Absent fields get
/// fallback phrases; whitespace is normalised afterwards.
PromptSpec build_naive_prompt(const corpus::ParticipantProfile& profile);

/// Screening prompt from the structured template; absent fields read "unknown".
PromptSpec build_advanced_prompt(const corpus::ParticipantProfile& profile);

/// Judge prompt. Throws PreconditionError when `response` is blank.
PromptSpec build_judge_prompt(std::string_view question, std::string_view response);

PromptSpec build_prompt(PromptKind kind, const corpus::ParticipantProfile& profile);

/// Literal substitution into the naive template with no fallback cleanup.
/// Kept so tests can pin down what the raw template produces.
std::string render_naive_literal(const corpus::ParticipantProfile& profile);

/// The stimulus question every screening prompt asks.
inline constexpr std::string_view kStimulusQuestion = "Tell me what is happening in the following image.";

std::string_view naive_template();
std::string_view advanced_template();
std::string_view judge_template();

/// True if `text` still holds "{age}", "{gender}", "{mmse}", "{category}",
/// "{question}" or "{response}".
bool has_placeholder(std::string_view text);

std::string fingerprint(PromptKind kind, std::string_view rendered);

}  // namespace normpipe::promptkit
