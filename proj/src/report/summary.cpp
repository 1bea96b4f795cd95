#include "normpipe/report.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace normpipe::report {

namespace {

constexpr std::string_view kMetricKeys[] = {"rouge1",  "rouge2", "rougeL",  "bleu",      "gleu",
                                            "bert_p",  "bert_r", "bert_f1", "num_words", "num_unique_words"};

double metric_value(const textmetrics::ScoredPair& p, Metric m) {
    switch (m) {
        case Metric::Rouge1: return p.rouge1;
        case Metric::Rouge2: return p.rouge2;
        case Metric::RougeL: return p.rougeL;
        case Metric::Bleu: return p.bleu;
        case Metric::Gleu: return p.gleu;
        case Metric::BertP: return p.bert_p;
        case Metric::BertR: return p.bert_r;
        case Metric::BertF1: return p.bert_f1;
        case Metric::NumWords: return static_cast<double>(p.num_words);
        case Metric::NumUniqueWords: return static_cast<double>(p.num_unique_words);
    }
    return 0.0;
}

int category_rank(const std::string& c) {
    if (auto parsed = parse_category(c)) return static_cast<int>(*parsed);
    return 3;
}

bool group_less(const GroupKey& a, const GroupKey& b) {
    return std::forward_as_tuple(category_rank(a.category), a.category, a.model_id, a.prompt_kind) <
           std::forward_as_tuple(category_rank(b.category), b.category, b.model_id, b.prompt_kind);
}

struct GroupLess {
    bool operator()(const GroupKey& a, const GroupKey& b) const { return group_less(a, b); }
};

}  // namespace

std::string_view metric_key(Metric m) { return kMetricKeys[static_cast<std::size_t>(m)]; }

std::optional<Metric> parse_metric_key(std::string_view key) {
    for (Metric m : kAllMetrics)
        if (metric_key(m) == key) return m;
    return std::nullopt;
}

std::vector<MetricSummary> summarize(const std::vector<textmetrics::ScoredPair>& pairs, const Grouping& grouping) {
    if (pairs.empty()) throw PreconditionError("summarize: no scored pairs");

    std::map<GroupKey, std::vector<const textmetrics::ScoredPair*>, GroupLess> groups;
    for (const auto& p : pairs) {
        GroupKey key{grouping.category ? p.category : "", grouping.model ? p.model_id : "",
                     grouping.prompt_kind ? p.prompt_kind : ""};
        groups[key].push_back(&p);
    }

    std::vector<MetricSummary> out;
    for (const auto& [key, members] : groups) {
        MetricSummary s;
        s.group = key;
        s.n = members.size();
        for (Metric m : kAllMetrics) {
            std::vector<double> values;
            values.reserve(members.size());
            for (const auto* p : members) values.push_back(metric_value(*p, m));
            s.get(m) = quartiles(values);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<MetricSummary> summarize_word_counts(const corpus::CorpusHandle& corpus, const std::string& label,
                                                 textmetrics::MetricProfile profile) {
    if (corpus.size() == 0) throw PreconditionError("summarize_word_counts: empty corpus");

    std::map<GroupKey, std::pair<std::vector<double>, std::vector<double>>, GroupLess> groups;
    for (const auto& t : corpus.records()) {
        const auto& c = t.participant().category;
        GroupKey key{c ? std::string(to_string(*c)) : "", label, ""};
        auto wc = textmetrics::word_counts(t.text(), profile);
        auto& [words, unique] = groups[key];
        words.push_back(static_cast<double>(wc.num_words));
        unique.push_back(static_cast<double>(wc.num_unique_words));
    }

    std::vector<MetricSummary> out;
    for (const auto& [key, values] : groups) {
        MetricSummary s;
        s.group = key;
        s.n = values.first.size();
        s.get(Metric::NumWords) = quartiles(values.first);
        s.get(Metric::NumUniqueWords) = quartiles(values.second);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace normpipe::report
