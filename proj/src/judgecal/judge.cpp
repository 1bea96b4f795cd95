#include "normpipe/judgecal.hpp"

#include <cctype>

namespace normpipe::judgecal {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

// Integer following "total rating" on this line, if any.
std::optional<long> rating_after_marker(std::string_view line) {
    const std::string lower = to_lower_ascii(line);
    const std::size_t at = lower.rfind("total rating");
    if (at == std::string::npos) return std::nullopt;
    std::size_t i = at + 12;
    while (i < line.size() && (line[i] == ':' || line[i] == '*' || line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    if (j < line.size() && (line[j] == '-' || line[j] == '+')) ++j;
    const std::size_t digits = j;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    if (j == digits || j - digits > 9) return std::nullopt;
    return std::stol(std::string(line.substr(i, j - i)));
}

}  // namespace

ParsedRating parse_rating(std::string_view verdict) {
    const std::vector<std::string_view> lines = split_lines(verdict);
    std::optional<long> found;
    std::size_t rating_line = lines.size();
    for (std::size_t k = lines.size(); k-- > 0;) {
        if ((found = rating_after_marker(lines[k]))) {
            rating_line = k;
            break;
        }
    }
    if (!found) throw DataError("no rating token");
    if (*found < 1 || *found > 4) throw DataError("rating out of range: " + std::to_string(*found));

    ParsedRating out;
    out.rating = static_cast<int>(*found);
    const std::string lower = to_lower_ascii(verdict);
    const std::size_t eval = lower.find("evaluation:");
    if (eval != std::string::npos) {
        std::size_t begin = eval + 11;
        // The segment runs to the rating line when that comes later, else to the end.
        std::size_t end = verdict.size();
        std::size_t offset = 0;
        for (std::size_t k = 0; k < lines.size(); ++k) {
            if (k == rating_line && offset > begin) {
                end = offset;
                break;
            }
            offset += lines[k].size() + 1;
        }
        out.rationale = std::string(trim(verdict.substr(begin, end - begin)));
    }
    if (out.rationale.empty()) out.rationale = std::string(trim(verdict));
    return out;
}

std::string item_id(const llmgate::GenerationRecord& r) {
    return r.model_id + "/" + std::string(to_string(r.prompt_kind)) + "/" + r.participant_id;
}

namespace {

RatingRecord finish(const llmgate::GenerationRecord& record, std::string_view question, llmgate::Gateway& gateway,
                    const llmgate::GenerationRecord& first_verdict) {
    const std::string id = item_id(record);
    const std::string rater = "judge:" + gateway.config().model_id;
    try {
        const ParsedRating p = parse_rating(first_verdict.response_text);
        return {id, rater, p.rating, std::string(trim(first_verdict.response_text))};
    } catch (const DataError& first) {
        emit_warning("judgecal", "re-prompting judge for " + id + " (" + first.what() + ")");
    }
    promptkit::PromptSpec retry = promptkit::build_judge_prompt(question, record.response_text);
    retry.rendered += "\n";
    retry.rendered += kReprompt;
    retry.fingerprint = promptkit::fingerprint(PromptKind::Judge, retry.rendered);
    const llmgate::GenerationRecord second = gateway.generate(retry, {id, {}, {}, {}, {}});
    try {
        const ParsedRating p = parse_rating(second.response_text);
        return {id, rater, p.rating, std::string(trim(second.response_text))};
    } catch (const DataError& e) {
        throw DataError("judge verdict for " + id + " unparseable after re-prompt: " + e.what());
    }
}

void require_rateable(const llmgate::GenerationRecord& record) {
    if (record.refusal) throw PreconditionError("cannot judge refusal record " + item_id(record));
}

}  // namespace

RatingRecord judge_item(const llmgate::GenerationRecord& record, std::string_view question,
                        llmgate::Gateway& gateway) {
    require_rateable(record);
    const std::string id = item_id(record);
    const llmgate::GenerationRecord verdict =
        gateway.generate(promptkit::build_judge_prompt(question, record.response_text), {id, {}, {}, {}, {}});
    return finish(record, question, gateway, verdict);
}

std::vector<RatingRecord> judge_all(const std::vector<llmgate::GenerationRecord>& records, std::string_view question,
                                    llmgate::Gateway& gateway) {
    std::vector<llmgate::GenerationJob> jobs;
    jobs.reserve(records.size());
    for (const auto& r : records) {
        require_rateable(r);
        jobs.push_back({promptkit::build_judge_prompt(question, r.response_text), {item_id(r), {}, {}, {}, {}}});
    }
    const std::vector<llmgate::GenerationRecord> verdicts = gateway.generate_all(jobs);
    std::vector<RatingRecord> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) out.push_back(finish(records[i], question, gateway, verdicts[i]));
    return out;
}

}  // namespace normpipe::judgecal
