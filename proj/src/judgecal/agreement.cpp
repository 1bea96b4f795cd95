#include "normpipe/judgecal.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace normpipe::judgecal {

std::string_view to_string(CorrelationKind k) { return k == CorrelationKind::Pearson ? "pearson" : "spearman"; }

std::optional<CorrelationKind> parse_correlation_kind(std::string_view s) {
    const std::string lower = to_lower_ascii(s);
    if (lower == "pearson") return CorrelationKind::Pearson;
    if (lower == "spearman") return CorrelationKind::Spearman;
    return std::nullopt;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw PreconditionError("pearson needs two equal samples of size >= 2");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

std::vector<double> midranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
        i = j + 1;
    }
    return r;
}

// Humans before judges, then by name.
bool rater_less(const std::string& a, const std::string& b) {
    const bool ha = a.starts_with("human:"), hb = b.starts_with("human:");
    if (ha != hb) return ha;
    return a < b;
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(midranks(a), midranks(b));
}

AgreementReport agreement(const std::vector<RatingRecord>& ratings, CorrelationKind kind) {
    std::map<std::string, std::map<std::string, int>> by_rater;  // rater -> item -> rating
    for (const RatingRecord& r : ratings) {
        if (r.rating < 1 || r.rating > 4)
            throw DataError("rating out of range for " + r.item_id + " by " + r.rater);
        if (!by_rater[r.rater].emplace(r.item_id, r.rating).second)
            throw DataError("duplicate rating of " + r.item_id + " by " + r.rater);
    }
    std::vector<std::string> raters;
    for (const auto& [name, items] : by_rater) raters.push_back(name);
    std::sort(raters.begin(), raters.end(), rater_less);

    AgreementReport report;
    report.kind = kind;
    for (std::size_t i = 0; i < raters.size(); ++i)
        for (std::size_t j = i + 1; j < raters.size(); ++j) {
            const auto& a = by_rater[raters[i]];
            const auto& b = by_rater[raters[j]];
            std::vector<double> xa, xb;
            for (const auto& [item, rating] : a)
                if (auto it = b.find(item); it != b.end()) {
                    xa.push_back(rating);
                    xb.push_back(it->second);
                }
            if (xa.size() < 2) {
                emit_warning("judgecal", raters[i] + " and " + raters[j] + " share " + std::to_string(xa.size()) +
                                             " item(s); pair omitted");
                continue;
            }
            report.pairs.push_back({raters[i], raters[j],
                                    kind == CorrelationKind::Pearson ? pearson(xa, xb) : spearman(xa, xb), xa.size()});
        }
    if (report.pairs.empty()) throw PreconditionError("agreement needs two raters sharing at least two items");

    for (const std::string& name : raters) {
        const auto& items = by_rater[name];
        RaterSummary s;
        s.rater = name;
        s.n = items.size();
        for (const auto& [item, rating] : items) s.mean += rating;
        s.mean /= static_cast<double>(s.n);
        if (s.n > 1) {
            double ss = 0.0;
            for (const auto& [item, rating] : items) ss += (rating - s.mean) * (rating - s.mean);
            s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
        }
        report.raters.push_back(s);
    }
    return report;
}

std::string display_name(std::string_view rater) {
    if (rater.starts_with("human:")) return "Human " + std::string(rater.substr(6));
    if (rater.starts_with("judge:")) return "LLM-as-a-Judge (" + std::string(rater.substr(6)) + ")";
    return std::string(rater);
}

namespace {
std::string fmt3(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : "undefined"; }
}  // namespace

std::string render_agreement(const AgreementReport& report) {
    std::string out = fmt::format("| Comparison | Correlation ({}) |\n|---|---|\n", to_string(report.kind));
    for (const PairAgreement& p : report.pairs)
        out += fmt::format("| {} vs {} | {} |\n", display_name(p.rater_a), display_name(p.rater_b), fmt3(p.correlation));
    out += "\n| Evaluator | Mean Score | Standard Deviation |\n|---|---|---|\n";
    for (const RaterSummary& r : report.raters)
        out += fmt::format("| {} | {:.3f} | {} |\n", display_name(r.rater), r.mean, fmt3(r.sd));
    return out;
}

nlohmann::ordered_json agreement_json(const AgreementReport& report) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["correlation"] = std::string(to_string(report.kind));
    j["sd_denominator"] = "n-1";
    j["items"] = "all items rated by both raters of a pair";
    ordered_json pairs = ordered_json::array();
    for (const PairAgreement& p : report.pairs)
        pairs.push_back({{"rater_a", p.rater_a},
                         {"rater_b", p.rater_b},
                         {"correlation", p.correlation ? ordered_json(*p.correlation) : ordered_json(nullptr)},
                         {"n_items", p.n_items}});
    j["pairs"] = pairs;
    ordered_json raters = ordered_json::array();
    for (const RaterSummary& r : report.raters)
        raters.push_back({{"rater", r.rater},
                          {"mean", r.mean},
                          {"sd", r.sd ? ordered_json(*r.sd) : ordered_json(nullptr)},
                          {"n", r.n}});
    j["raters"] = raters;
    return j;
}

}  // namespace normpipe::judgecal
