#include "normpipe/embedlab.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace normpipe::resources {
extern const std::string_view kStopwords;
}  // namespace normpipe::resources

namespace normpipe::embedlab {

std::vector<std::string> default_tracked_terms() {
    return {"cookie", "sink", "dish", "water", "jar", "stool", "reach",
            "fall",   "run",  "wash", "boy",   "girl", "mother", "woman"};
}

const std::vector<std::string>& default_stopwords() {
    static const std::vector<std::string> words = [] {
        std::vector<std::string> out;
        std::string_view rest = resources::kStopwords;
        while (!rest.empty()) {
            const std::size_t nl = rest.find('\n');
            std::string_view line = trim(rest.substr(0, nl));
            rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
            if (!line.empty() && line.front() != '#') out.emplace_back(line);
        }
        return out;
    }();
    return words;
}

FrequencyTable frequency_table(const corpus::CorpusHandle& corpus, const std::vector<std::string>& tracked_terms,
                               std::size_t top_k, const std::vector<std::string>& stopwords) {
    if (top_k < 1) throw PreconditionError("top_k must be >= 1");
    FrequencyTable t;
    for (const corpus::Transcript& rec : corpus.records())
        for (const std::string& tok : rec.tokens()) {
            ++t.counts[tok];
            ++t.total_tokens;
        }

    t.tracked_terms = tracked_terms;
    for (const std::string& term : tracked_terms) {
        const auto it = t.counts.find(to_lower_ascii(term));
        t.tracked[term] = it == t.counts.end() ? 0 : it->second;
    }

    const std::set<std::string, std::less<>> stop(stopwords.begin(), stopwords.end());
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (const auto& [tok, n] : t.counts)
        if (!stop.contains(tok)) ranked.emplace_back(tok, n);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > top_k) ranked.resize(top_k);
    t.top = std::move(ranked);
    return t;
}

std::vector<TermComparison> compare_frequencies(const FrequencyTable& a, const FrequencyTable& b) {
    if (a.tracked_terms != b.tracked_terms)
        throw PreconditionError("frequency tables track different term lists");
    auto rate = [](const FrequencyTable& t, const std::string& term) {
        if (t.total_tokens == 0) return 0.0;
        return 1000.0 * static_cast<double>(t.tracked.at(term)) / static_cast<double>(t.total_tokens);
    };
    std::vector<TermComparison> out;
    for (const std::string& term : a.tracked_terms) {
        TermComparison c{term, rate(a, term), rate(b, term), 0.0};
        c.ratio = c.rate_a == 0.0 ? std::numeric_limits<double>::infinity() : c.rate_b / c.rate_a;
        out.push_back(c);
    }
    return out;
}

std::string format_ratio(double ratio, int precision) {
    if (std::isinf(ratio)) return "inf";
    return fmt::format("{:.{}f}", ratio, precision);
}

std::string projection_csv(const Projection2D& projection) {
    std::string out = "x,y,id,category,age,gender,mmse,source\n";
    for (const ProjectedPoint& p : projection.points) {
        const RecordMeta& m = p.meta;
        out += fmt::format("{:.6f},{:.6f},{},{},{},{},{},{}\n", p.x, p.y, csv_field(p.id),
                           m.category ? to_string(*m.category) : "", m.age ? std::to_string(*m.age) : "",
                           m.gender ? to_string(*m.gender) : "", m.mmse ? std::to_string(*m.mmse) : "", csv_field(m.source));
    }
    return out;
}

}  // namespace normpipe::embedlab
