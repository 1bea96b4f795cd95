#pragma once

#include "normpipe/classifier.hpp"
#include "normpipe/common.hpp"
#include "normpipe/corpus.hpp"
#include "normpipe/embedlab.hpp"
#include "normpipe/textmetrics.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace normpipe::report {

// ---------------------------------------------------------------------------
// Summaries.
// ---------------------------------------------------------------------------

enum class Metric { Rouge1, Rouge2, RougeL, Bleu, Gleu, BertP, BertR, BertF1, NumWords, NumUniqueWords };

inline constexpr std::array<Metric, 10> kAllMetrics = {
    Metric::Rouge1, Metric::Rouge2, Metric::RougeL, Metric::Bleu,     Metric::Gleu,
    Metric::BertP,  Metric::BertR,  Metric::BertF1, Metric::NumWords, Metric::NumUniqueWords};

/// Key used in JSON ("rouge1", "bert_f1", "num_words", ...).
std::string_view metric_key(Metric m);
std::optional<Metric> parse_metric_key(std::string_view key);

struct GroupKey {
    std::string category;
    std::string model_id;
    std::string prompt_kind;

    friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

struct MetricSummary {
    GroupKey group;
    std::array<std::optional<Quartiles>, kAllMetrics.size()> metrics;
    std::size_t n = 0;

    const std::optional<Quartiles>& get(Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
    std::optional<Quartiles>& get(Metric m) { return metrics[static_cast<std::size_t>(m)]; }
};

/// Which ScoredPair fields form the group key. Fields left out are blank.
struct Grouping {
    bool category = true;
    bool model = true;
    bool prompt_kind = true;
};

/// Quartiles of every metric per group. Rows are ordered by category
/// (Control, MCI, AD, then others alphabetically), model and prompt kind.
/// Throws PreconditionError on empty input.
std::vector<MetricSummary> summarize(const std::vector<textmetrics::ScoredPair>& pairs,
                                     const Grouping& grouping = {});

/// Word-count-only rows for an unpaired corpus, one per category. The model
/// column carries `label`.
std::vector<MetricSummary> summarize_word_counts(const corpus::CorpusHandle& corpus, const std::string& label,
                                                 textmetrics::MetricProfile profile =
                                                     textmetrics::MetricProfile::Published);

// ---------------------------------------------------------------------------
// Tables.
// ---------------------------------------------------------------------------

enum class TableFormat { Markdown, Csv, Json };

std::optional<TableFormat> parse_table_format(std::string_view s);

/// "0.28 (0.25–0.32)". Word counts drop trailing zeros ("92 (72–132)").
std::string format_cell(const Quartiles& q, bool word_count = false);

/// Columns: Category, Model, ROUGE-1, ROUGE-L, BERT F1, Google BLEU, Num Words.
/// Missing metrics give blank cells. JSON carries every metric unformatted.
std::string render_table(const std::vector<MetricSummary>& summaries, TableFormat format);

/// Inverse of render_table(..., Json).
std::vector<MetricSummary> load_summaries_json(std::string_view content);

nlohmann::ordered_json summaries_json(const std::vector<MetricSummary>& summaries);

/// Train sets as rows, test sets as columns, "median (q25–q75)" per cell.
std::string render_transfer_markdown(const classifier::TransferResult& result);

// ---------------------------------------------------------------------------
// Scatter plots.
// ---------------------------------------------------------------------------

enum class ColorBy { Category, Age, Gender, Mmse, Source };

std::optional<ColorBy> parse_color_by(std::string_view s);

/// Two-colour gradient, t clamped to [0, 1].
std::string gradient_color(double t);

/// Colour for missing metadata.
inline constexpr std::string_view kMissingColor = "#999999";

/// One element with class="marker" per point: circles for real records,
/// squares for synthetic ones. Throws PreconditionError on an empty projection.
std::string render_scatter_svg(const embedlab::Projection2D& projection, ColorBy color_by);

/// Same, naming the field; an unknown name is a ConfigError.
std::string render_scatter_svg(const embedlab::Projection2D& projection, std::string_view color_by);

}  // namespace normpipe::report
