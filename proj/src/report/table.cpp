#include "normpipe/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace normpipe::report {

namespace {

struct Column {
    std::string_view title;
    Metric metric;
};

constexpr Column kColumns[] = {
    {"ROUGE-1", Metric::Rouge1},     {"ROUGE-L", Metric::RougeL},        {"BERT F1", Metric::BertF1},
    {"Google BLEU", Metric::Gleu},   {"Num Words", Metric::NumWords},
};

std::string format_count(double v) {
    if (std::abs(v - std::round(v)) < 1e-9) return fmt::format("{}", static_cast<long long>(std::llround(v)));
    std::string s = fmt::format("{:.2f}", v);
    while (s.back() == '0') s.pop_back();
    return s;
}

std::string model_label(const GroupKey& g) {
    if (g.prompt_kind.empty()) return g.model_id;
    if (g.model_id.empty()) return g.prompt_kind;
    return g.model_id + "/" + g.prompt_kind;
}

std::vector<std::string> row_cells(const MetricSummary& s) {
    std::vector<std::string> cells{s.group.category, model_label(s.group)};
    for (const Column& c : kColumns) {
        const auto& q = s.get(c.metric);
        cells.push_back(q ? format_cell(*q, c.metric == Metric::NumWords) : "");
    }
    return cells;
}

std::vector<std::string> header_cells() {
    std::vector<std::string> cells{"Category", "Model"};
    for (const Column& c : kColumns) cells.emplace_back(c.title);
    return cells;
}

std::string markdown_row(const std::vector<std::string>& cells) {
    std::string line = "|";
    for (const auto& c : cells) line += " " + c + " |";
    return line + "\n";
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += csv_field(cells[i]);
    }
    return line + "\n";
}

}  // namespace

std::optional<TableFormat> parse_table_format(std::string_view s) {
    if (s == "markdown" || s == "md") return TableFormat::Markdown;
    if (s == "csv") return TableFormat::Csv;
    if (s == "json") return TableFormat::Json;
    return std::nullopt;
}

std::string format_cell(const Quartiles& q, bool word_count) {
    if (word_count)
        return fmt::format("{} ({}–{})", format_count(q.median), format_count(q.q25), format_count(q.q75));
    return fmt::format("{:.2f} ({:.2f}–{:.2f})", q.median, q.q25, q.q75);
}

nlohmann::ordered_json summaries_json(const std::vector<MetricSummary>& summaries) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& s : summaries) {
        nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
        for (Metric m : kAllMetrics) {
            const auto& q = s.get(m);
            if (!q) continue;
            metrics[std::string(metric_key(m))] = {{"median", q->median}, {"q25", q->q25}, {"q75", q->q75}};
        }
        rows.push_back({{"category", s.group.category},
                        {"model_id", s.group.model_id},
                        {"prompt_kind", s.group.prompt_kind},
                        {"n", s.n},
                        {"metrics", std::move(metrics)}});
    }
    return rows;
}

std::vector<MetricSummary> load_summaries_json(std::string_view content) {
    nlohmann::json rows;
    try {
        rows = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("summary json: ") + e.what());
    }
    if (!rows.is_array()) throw DataError("summary json: expected an array");

    std::vector<MetricSummary> out;
    try {
        for (const auto& r : rows) {
            MetricSummary s;
            s.group = {r.at("category").get<std::string>(), r.at("model_id").get<std::string>(),
                       r.at("prompt_kind").get<std::string>()};
            s.n = r.at("n").get<std::size_t>();
            for (const auto& [key, q] : r.at("metrics").items()) {
                auto m = parse_metric_key(key);
                if (!m) throw DataError("summary json: unknown metric " + key);
                s.get(*m) = Quartiles{q.at("q25").get<double>(), q.at("median").get<double>(),
                                      q.at("q75").get<double>()};
            }
            out.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("summary json: ") + e.what());
    }
    return out;
}

std::string render_table(const std::vector<MetricSummary>& summaries, TableFormat format) {
    switch (format) {
        case TableFormat::Json: return summaries_json(summaries).dump(2) + "\n";
        case TableFormat::Csv: {
            std::string out = csv_row(header_cells());
            for (const auto& s : summaries) out += csv_row(row_cells(s));
            return out;
        }
        case TableFormat::Markdown: {
            auto header = header_cells();
            std::string out = markdown_row(header);
            out += "|";
            for (std::size_t i = 0; i < header.size(); ++i) out += "---|";
            out += "\n";
            for (const auto& s : summaries) out += markdown_row(row_cells(s));
            return out;
        }
    }
    return {};
}

std::string render_transfer_markdown(const classifier::TransferResult& result) {
    std::vector<std::string> sets;
    for (const auto& c : result.cells) {
        if (std::find(sets.begin(), sets.end(), c.train_set) == sets.end()) sets.push_back(c.train_set);
        if (std::find(sets.begin(), sets.end(), c.test_set) == sets.end()) sets.push_back(c.test_set);
    }

    std::vector<std::string> header{"Train \\ Test"};
    header.insert(header.end(), sets.begin(), sets.end());
    std::string out = markdown_row(header);
    out += "|";
    for (std::size_t i = 0; i < header.size(); ++i) out += "---|";
    out += "\n";

    for (const auto& train : sets) {
        std::vector<std::string> cells{train};
        bool any = false;
        for (const auto& test : sets) {
            std::string cell;
            for (const auto& c : result.cells) {
                if (c.train_set == train && c.test_set == test) {
                    cell = format_cell({c.auc_q25, c.auc_median, c.auc_q75});
                    any = true;
                }
            }
            cells.push_back(cell);
        }
        if (any) out += markdown_row(cells);
    }
    return out;
}

}  // namespace normpipe::report
