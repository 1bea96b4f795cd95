#include "normpipe/corpus.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <unordered_map>

namespace normpipe::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

Transcript::Transcript(ParticipantProfile participant, std::string text, Source source)
    : participant_(std::move(participant)), text_(std::move(text)), source_(source) {
    if (trim(text_).empty())
        throw DataError("transcript for participant '" + participant_.id + "' has empty text");
    tokens_ = textmetrics::tokenize(text_);
}

CorpusHandle::CorpusHandle(std::string label, Source source, std::vector<Transcript> records)
    : label_(std::move(label)), source_(source), records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const Transcript& t = records_[i];
        if (t.source() != source_)
            throw DataError("corpus '" + label_ + "' mixes real and synthetic records");
        if (!index_.emplace(t.id(), i).second)
            throw DataError("duplicate id '" + t.id() + "' in corpus '" + label_ + "'");
    }
}

const Transcript* CorpusHandle::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &records_[it->second];
}

namespace {

// Integral value from a JSON number, accepting integral decimals such as 20.0.
std::optional<long long> integral_value(const json& v) {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && std::floor(d) == d) return static_cast<long long>(d);
    }
    return std::nullopt;
}

struct LineParser {
    std::string_view origin;
    std::vector<std::string>& warnings;

    void warn(std::size_t line_no, const std::string& message) {
        std::string full = std::string(origin) + ":" + std::to_string(line_no) + ": " + message;
        emit_warning("corpus", full);
        warnings.push_back(std::move(full));
    }

    std::optional<Transcript> parse(std::string_view line, std::size_t line_no, Source source) {
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error&) {
            warn(line_no, "malformed JSON, line skipped");
            return std::nullopt;
        }
        if (!obj.is_object()) {
            warn(line_no, "not a JSON object, line skipped");
            return std::nullopt;
        }

        ParticipantProfile p;
        if (!obj.contains("id") || !obj["id"].is_string() || obj["id"].get<std::string>().empty()) {
            warn(line_no, "missing or non-string id, line skipped");
            return std::nullopt;
        }
        p.id = obj["id"].get<std::string>();

        if (obj.contains("age") && !obj["age"].is_null()) {
            auto age = integral_value(obj["age"]);
            if (!age) {
                warn(line_no, "non-integer age for '" + p.id + "', line skipped");
                return std::nullopt;
            }
            if (*age < 18 || *age > 110)
                warn(line_no, "age " + std::to_string(*age) + " outside [18, 110] for '" + p.id +
                                  "' (kept)");
            p.age = static_cast<int>(*age);
        }

        if (obj.contains("gender") && !obj["gender"].is_null()) {
            const json& g = obj["gender"];
            std::optional<Gender> parsed = g.is_string() ? parse_gender(g.get<std::string>()) : std::nullopt;
            if (!parsed)
                warn(line_no, "unrecognised gender " + g.dump() + " for '" + p.id + "' (stored as absent)");
            p.gender = parsed;
        }

        if (obj.contains("mmse") && !obj["mmse"].is_null()) {
            auto mmse = integral_value(obj["mmse"]);
            if (!mmse) {
                warn(line_no, "non-integral mmse " + obj["mmse"].dump() + " for '" + p.id + "', line skipped");
                return std::nullopt;
            }
            if (*mmse < 0 || *mmse > 30) {
                warn(line_no, "mmse " + std::to_string(*mmse) + " outside [0, 30] for '" + p.id +
                                  "', line skipped");
                return std::nullopt;
            }
            p.mmse = static_cast<int>(*mmse);
        }

        if (!obj.contains("category") || !obj["category"].is_string()) {
            warn(line_no, "missing category for '" + p.id + "', line skipped");
            return std::nullopt;
        }
        const std::string cat = obj["category"].get<std::string>();
        p.category = parse_category(cat);
        if (!p.category) {
            warn(line_no, "unknown category \"" + cat + "\" for '" + p.id + "', line skipped");
            return std::nullopt;
        }

        if (!obj.contains("text") || !obj["text"].is_string() ||
            trim(obj["text"].get_ref<const std::string&>()).empty()) {
            warn(line_no, "missing or empty text for '" + p.id + "', line skipped");
            return std::nullopt;
        }
        return Transcript(std::move(p), obj["text"].get<std::string>(), source);
    }
};

}  // namespace

LoadResult parse_corpus(std::string_view content, Source source, std::string label,
                        std::string_view origin) {
    std::vector<std::string> warnings;
    LineParser parser{origin, warnings};
    std::vector<Transcript> records;
    std::unordered_map<std::string, std::size_t> first_line;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = content.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (trim(line).empty()) continue;

        std::optional<Transcript> t = parser.parse(line, line_no, source);
        if (!t) continue;
        auto [it, inserted] = first_line.emplace(t->id(), line_no);
        if (!inserted)
            throw DataError(std::string(origin) + ":" + std::to_string(line_no) + ": duplicate id '" +
                            t->id() + "' (first seen on line " + std::to_string(it->second) + ")");
        records.push_back(std::move(*t));
    }
    return {CorpusHandle(std::move(label), source, std::move(records)), std::move(warnings)};
}

LoadResult load_corpus(const std::string& path, Source source, std::string label) {
    const std::string content = read_file(path);
    if (label.empty()) label = std::filesystem::path(path).stem().string();
    return parse_corpus(content, source, std::move(label), path);
}

std::string to_jsonl(const CorpusHandle& corpus) {
    std::string out;
    for (const Transcript& t : corpus.records()) {
        const ParticipantProfile& p = t.participant();
        ordered_json obj;
        obj["id"] = p.id;
        obj["age"] = p.age ? ordered_json(*p.age) : ordered_json(nullptr);
        obj["gender"] = p.gender ? ordered_json(std::string(to_string(*p.gender))) : ordered_json(nullptr);
        obj["mmse"] = p.mmse ? ordered_json(*p.mmse) : ordered_json(nullptr);
        obj["category"] = p.category ? std::string(to_string(*p.category)) : std::string();
        obj["text"] = t.text();
        out += obj.dump();
        out += '\n';
    }
    return out;
}

void write_corpus(const CorpusHandle& corpus, const std::string& path) {
    write_file_atomic(path, to_jsonl(corpus));
}

Pairing pair_by_participant(const CorpusHandle& real, const CorpusHandle& synthetic) {
    Pairing out;
    for (const Transcript& r : real.records()) {
        if (const Transcript* s = synthetic.find(r.id()))
            out.pairs.emplace_back(&r, s);
        else
            out.unpaired_real.push_back(r.id());
    }
    for (const Transcript& s : synthetic.records())
        if (!real.find(s.id())) out.unpaired_synthetic.push_back(s.id());

    if (out.pairs.empty())
        throw DataError("zero pairs between '" + real.label() + "' (" + std::to_string(real.size()) +
                        " records) and '" + synthetic.label() + "' (" + std::to_string(synthetic.size()) +
                        " records)");
    for (const std::string& id : out.unpaired_real)
        emit_warning("corpus", "unpaired real record '" + id + "' (no match in '" + synthetic.label() + "')");
    for (const std::string& id : out.unpaired_synthetic)
        emit_warning("corpus", "unpaired synthetic record '" + id + "' (no match in '" + real.label() + "')");
    return out;
}

}  // namespace normpipe::corpus
