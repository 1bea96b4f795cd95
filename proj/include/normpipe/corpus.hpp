#pragma once

#include "normpipe/common.hpp"
#include "normpipe/tokenize.hpp"

#include <memory>
#include <optional>
#include <unordered_map>
#include <string>
#include <utility>
#include <vector>

namespace normpipe::corpus {

/// Demographic and cognitive metadata conditioning a generation.
struct ParticipantProfile {
    std::string id;
    std::optional<int> age;
    std::optional<Gender> gender;
    std::optional<int> mmse;  // [0, 30]
    std::optional<Category> category;

    friend bool operator==(const ParticipantProfile&, const ParticipantProfile&) = default;
};

/// One utterance. Immutable; tokens are computed once with the pipeline tokenizer.
class Transcript {
public:
    /// Throws DataError if the text is blank.
    Transcript(ParticipantProfile participant, std::string text, Source source);

    const ParticipantProfile& participant() const { return participant_; }
    const std::string& id() const { return participant_.id; }
    const std::string& text() const { return text_; }
    const textmetrics::TokenSeq& tokens() const { return tokens_; }
    Source source() const { return source_; }

    friend bool operator==(const Transcript& a, const Transcript& b) {
        return a.participant_ == b.participant_ && a.text_ == b.text_ && a.source_ == b.source_;
    }

private:
    ParticipantProfile participant_;
    std::string text_;
    textmetrics::TokenSeq tokens_;
    Source source_;
};

/// A loaded corpus. All records share one source tag and ids are unique.
class CorpusHandle {
public:
    CorpusHandle(std::string label, Source source, std::vector<Transcript> records);

    const std::string& label() const { return label_; }
    Source source() const { return source_; }
    const std::vector<Transcript>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    /// nullptr when absent.
    const Transcript* find(std::string_view id) const;

private:
    std::string label_;
    Source source_;
    std::vector<Transcript> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct LoadResult {
    CorpusHandle corpus;
    std::vector<std::string> warnings;  // one per skipped or suspicious line
};

/// Reads a JSONL corpus (keys id, age, gender, mmse, category, text).
/// Malformed lines are skipped with a "WARN corpus:" diagnostic; an unreadable
/// file or a duplicate id throws DataError. The label defaults to the file stem.
LoadResult load_corpus(const std::string& path, Source source, std::string label = {});

/// Parses JSONL content already in memory; `origin` names it in diagnostics.
LoadResult parse_corpus(std::string_view content, Source source, std::string label,
                        std::string_view origin = "<memory>");

/// Serialises one record per line in the ingest format.
std::string to_jsonl(const CorpusHandle& corpus);
void write_corpus(const CorpusHandle& corpus, const std::string& path);

struct Pairing {
    std::vector<std::pair<const Transcript*, const Transcript*>> pairs;  // (real, synthetic)
    std::vector<std::string> unpaired_real;
    std::vector<std::string> unpaired_synthetic;
};

/// Matches records by participant id, in the order of `real`. Throws DataError
/// ("zero pairs ...") when nothing matches. Pointers borrow from the handles.
Pairing pair_by_participant(const CorpusHandle& real, const CorpusHandle& synthetic);

}  // namespace normpipe::corpus
