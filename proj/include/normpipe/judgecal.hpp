#pragma once

#include "normpipe/common.hpp"
#include "normpipe/llmgate.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace normpipe::judgecal {

struct RatingRecord {
    std::string item_id;    // "<model>/<kind>/<participant>"
    std::string rater;      // "human:<name>" or "judge:<model>"
    int rating = 0;         // 1..4
    std::string rationale;

    friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct ParsedRating {
    int rating = 0;
    std::string rationale;
};

/// Uses the last line holding "total rating" (any case) followed by an
/// integer, after optional ':', '*' and spaces. Rationale is the
/// "Evaluation:" segment when present, else the whole verdict.
/// Throws DataError "no rating token" or "rating out of range".
ParsedRating parse_rating(std::string_view verdict);

std::string item_id(const llmgate::GenerationRecord& record);

/// Appended to the judge prompt when the first verdict cannot be parsed.
inline constexpr std::string_view kReprompt = "Respond with 'Total rating: <1-4>' only.";

/// Rates one generation; the rationale keeps the full verdict. The judge call goes through `gateway` (its config
/// names the judge model). A refusal record is a PreconditionError; a verdict
/// that still fails to parse after one re-prompt is a DataError naming the item.
RatingRecord judge_item(const llmgate::GenerationRecord& record, std::string_view question,
                        llmgate::Gateway& gateway);

/// Rates every record, first pass with bounded concurrency.
std::vector<RatingRecord> judge_all(const std::vector<llmgate::GenerationRecord>& records,
                                    std::string_view question, llmgate::Gateway& gateway);

// ---------------------------------------------------------------------------
// Annotation files.
// ---------------------------------------------------------------------------

/// CSV with header item_id,rater,rating,rationale. A missing header is fatal;
/// bad lines and repeated (item_id, rater) pairs are skipped with a warning.
std::vector<RatingRecord> parse_annotations(std::string_view content, std::string_view origin = "<memory>");
std::vector<RatingRecord> load_annotations(const std::string& path);
std::string ratings_csv(const std::vector<RatingRecord>& ratings);

// ---------------------------------------------------------------------------
// Agreement.
// ---------------------------------------------------------------------------

enum class CorrelationKind { Pearson, Spearman };

std::string_view to_string(CorrelationKind k);
std::optional<CorrelationKind> parse_correlation_kind(std::string_view s);

/// nullopt when either side has zero variance. Sizes must match and be >= 2.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

struct PairAgreement {
    std::string rater_a;
    std::string rater_b;
    std::optional<double> correlation;  // nullopt = undefined (zero variance)
    std::size_t n_items = 0;
};

struct RaterSummary {
    std::string rater;
    double mean = 0.0;
    std::optional<double> sd;  // sample (n - 1); undefined for a single rating
    std::size_t n = 0;
};

struct AgreementReport {
    CorrelationKind kind = CorrelationKind::Pearson;
    std::vector<PairAgreement> pairs;  // raters ordered humans first, then by name
    std::vector<RaterSummary> raters;
};

/// Correlation for each rater pair over co-rated items; pairs with fewer than
/// two shared items are omitted with a warning. Requires at least one pair
/// that shares two items. Independent of input order.
AgreementReport agreement(const std::vector<RatingRecord>& ratings,
                          CorrelationKind kind = CorrelationKind::Pearson);

/// "Human 1" for "human:1", "LLM-as-a-Judge (<model>)" for "judge:<model>".
std::string display_name(std::string_view rater);

/// Two markdown tables: pairwise correlations, then per-rater mean and SD.
std::string render_agreement(const AgreementReport& report);
nlohmann::ordered_json agreement_json(const AgreementReport& report);

}  // namespace normpipe::judgecal
