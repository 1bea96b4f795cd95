#include "normpipe/llmgate.hpp"

namespace normpipe::llmgate {

void to_json(nlohmann::ordered_json& j, const GenerationRecord& r) {
    j = nlohmann::ordered_json{{"participant_id", r.participant_id},
                               {"model_id", r.model_id},
                               {"prompt_kind", to_string(r.prompt_kind)},
                               {"prompt_fingerprint", r.prompt_fingerprint},
                               {"response_text", r.response_text},
                               {"refusal", r.refusal},
                               {"created_at", r.created_at},
                               {"attempt_count", r.attempt_count},
                               {"from_cache", r.from_cache}};
}

void from_json(const nlohmann::json& j, GenerationRecord& r) {
    r.participant_id = j.at("participant_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    const auto kind = j.at("prompt_kind").get<std::string>();
    auto parsed = parse_prompt_kind(kind);
    if (!parsed) throw DataError("unknown prompt kind: " + kind);
    r.prompt_kind = *parsed;
    r.prompt_fingerprint = j.at("prompt_fingerprint").get<std::string>();
    r.response_text = j.at("response_text").get<std::string>();
    r.refusal = j.at("refusal").get<bool>();
    r.created_at = j.value("created_at", "");
    r.attempt_count = j.value("attempt_count", 0);
    r.from_cache = j.value("from_cache", false);
}

}  // namespace normpipe::llmgate
