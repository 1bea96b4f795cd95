#include "normpipe/textmetrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace normpipe::textmetrics {
namespace {

// N-gram key: tokens joined by a unit separator, which never appears in tokens.
std::unordered_map<std::string, std::size_t> ngram_counts(const TokenSeq& seq, int n) {
    std::unordered_map<std::string, std::size_t> counts;
    if (n <= 0 || seq.size() < static_cast<std::size_t>(n)) return counts;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
        std::string key = seq[i];
        for (int k = 1; k < n; ++k) {
            key += '\x1f';
            key += seq[i + k];
        }
        ++counts[key];
    }
    return counts;
}

std::size_t total(const std::unordered_map<std::string, std::size_t>& counts, NgramCounting counting) {
    if (counting == NgramCounting::Distinct) return counts.size();
    std::size_t sum = 0;
    for (const auto& [_, c] : counts) sum += c;
    return sum;
}

std::size_t overlap(const std::unordered_map<std::string, std::size_t>& cand,
                    const std::unordered_map<std::string, std::size_t>& ref, NgramCounting counting) {
    std::size_t m = 0;
    for (const auto& [gram, c] : cand) {
        auto it = ref.find(gram);
        if (it == ref.end()) continue;
        m += counting == NgramCounting::Distinct ? 1 : std::min(c, it->second);
    }
    return m;
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

std::size_t ngram_matches(const TokenSeq& candidate, const TokenSeq& reference, int n,
                          NgramCounting counting) {
    return overlap(ngram_counts(candidate, n), ngram_counts(reference, n), counting);
}

Prf rouge_n_prf(const TokenSeq& candidate, const TokenSeq& reference, int n, NgramCounting counting) {
    if (n < 1) throw PreconditionError("rouge_n requires n >= 1");
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    const std::size_t cand_total = total(cand, counting);
    const std::size_t ref_total = total(ref, counting);
    if (cand_total == 0 || ref_total == 0) return {};
    const double m = static_cast<double>(overlap(cand, ref, counting));
    Prf out;
    out.precision = m / static_cast<double>(cand_total);
    out.recall = m / static_cast<double>(ref_total);
    out.f1 = harmonic(out.precision, out.recall);
    return out;
}

double rouge_n(const TokenSeq& candidate, const TokenSeq& reference, int n, NgramCounting counting) {
    return rouge_n_prf(candidate, reference, n, counting).f1;
}

namespace {

// Row-major (|a|+1) x (|b|+1) LCS length table.
std::vector<std::size_t> lcs_table(const TokenSeq& a, const TokenSeq& b) {
    const std::size_t cols = b.size() + 1;
    std::vector<std::size_t> t((a.size() + 1) * cols, 0);
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            t[i * cols + j] = a[i - 1] == b[j - 1] ? t[(i - 1) * cols + j - 1] + 1
                                                   : std::max(t[(i - 1) * cols + j], t[i * cols + j - 1]);
    return t;
}

}  // namespace

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
    return lcs_table(a, b).back();
}

double rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    const double lcs = static_cast<double>(lcs_length(candidate, reference));
    return harmonic(lcs / static_cast<double>(candidate.size()), lcs / static_cast<double>(reference.size()));
}

double rouge_l_summary(std::span<const TokenSeq> candidate_sentences,
                       std::span<const TokenSeq> reference_sentences) {
    std::unordered_set<std::string> cand_words;
    std::unordered_set<std::string> ref_words;
    for (const TokenSeq& s : candidate_sentences) cand_words.insert(s.begin(), s.end());
    for (const TokenSeq& s : reference_sentences) ref_words.insert(s.begin(), s.end());
    if (cand_words.empty() || ref_words.empty()) return 0.0;

    std::unordered_set<std::string> hit;
    for (const TokenSeq& ref : reference_sentences) {
        for (const TokenSeq& cand : candidate_sentences) {
            const std::vector<std::size_t> t = lcs_table(ref, cand);
            const std::size_t cols = cand.size() + 1;
            std::size_t i = ref.size();
            std::size_t j = cand.size();
            while (i > 0 && j > 0) {
                if (ref[i - 1] == cand[j - 1]) {
                    hit.insert(ref[i - 1]);
                    --i;
                    --j;
                } else if (t[(i - 1) * cols + j] > t[i * cols + j - 1]) {
                    --i;
                } else {
                    --j;
                }
            }
        }
    }
    const double h = static_cast<double>(hit.size());
    return harmonic(h / static_cast<double>(cand_words.size()), h / static_cast<double>(ref_words.size()));
}

double bleu(const TokenSeq& candidate, const TokenSeq& reference, const BleuOptions& options) {
    if (candidate.empty() || reference.empty()) return 0.0;
    // Orders for which the candidate has no n-grams are left out, so a short
    // candidate is scored on the orders it can express.
    const int orders = std::min<int>(options.max_order, static_cast<int>(candidate.size()));
    double log_sum = 0.0;
    for (int n = 1; n <= orders; ++n) {
        const auto cand = ngram_counts(candidate, n);
        const double matches = static_cast<double>(overlap(cand, ngram_counts(reference, n), NgramCounting::Clipped));
        const double count = static_cast<double>(candidate.size() - static_cast<std::size_t>(n) + 1);
        double p = matches / count;
        if (options.smoothing && n > 1) p = (matches + 1.0) / (count + 1.0);
        if (p <= 0.0) return 0.0;
        log_sum += std::log(p);
    }
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return bp * std::exp(log_sum / orders);
}

double google_bleu(const TokenSeq& candidate, const TokenSeq& reference) {
    std::size_t matches = 0;
    std::size_t cand_total = 0;
    std::size_t ref_total = 0;
    for (int n = 1; n <= 4; ++n) {
        const auto cand = ngram_counts(candidate, n);
        const auto ref = ngram_counts(reference, n);
        matches += overlap(cand, ref, NgramCounting::Clipped);
        cand_total += total(cand, NgramCounting::Clipped);
        ref_total += total(ref, NgramCounting::Clipped);
    }
    if (cand_total == 0 || ref_total == 0) return 0.0;
    const double m = static_cast<double>(matches);
    return std::min(m / static_cast<double>(cand_total), m / static_cast<double>(ref_total));
}

Prf bert_score_vectors(const std::vector<std::vector<double>>& candidate,
                       const std::vector<std::vector<double>>& reference) {
    if (candidate.empty() || reference.empty()) return {};
    const std::size_t dim = candidate.front().size();
    auto check = [dim](const std::vector<std::vector<double>>& rows) {
        for (const auto& v : rows)
            if (v.size() != dim) throw DataError("token embeddings have inconsistent dimensions");
    };
    check(candidate);
    check(reference);

    auto norm = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    std::vector<double> cn(candidate.size());
    std::vector<double> rn(reference.size());
    for (std::size_t i = 0; i < candidate.size(); ++i) cn[i] = norm(candidate[i]);
    for (std::size_t j = 0; j < reference.size(); ++j) rn[j] = norm(reference[j]);

    std::vector<double> row_best(candidate.size(), 0.0);
    std::vector<double> col_best(reference.size(), 0.0);
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        for (std::size_t j = 0; j < reference.size(); ++j) {
            double sim = 0.0;
            if (cn[i] > 0.0 && rn[j] > 0.0) {
                double dot = 0.0;
                for (std::size_t k = 0; k < dim; ++k) dot += candidate[i][k] * reference[j][k];
                sim = std::clamp(dot / (cn[i] * rn[j]), 0.0, 1.0);
            }
            row_best[i] = std::max(row_best[i], sim);
            col_best[j] = std::max(col_best[j], sim);
        }
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    Prf out;
    out.precision = mean(row_best);
    out.recall = mean(col_best);
    out.f1 = harmonic(out.precision, out.recall);
    return out;
}

Prf bert_score(const TokenSeq& candidate, const TokenSeq& reference, TokenEmbedder& embedder) {
    if (candidate.empty() || reference.empty()) return {};
    auto cand = embedder.embed_tokens(candidate);
    auto ref = embedder.embed_tokens(reference);
    if (cand.size() != candidate.size() || ref.size() != reference.size())
        throw DataError("token embedder returned the wrong number of vectors");
    return bert_score_vectors(cand, ref);
}

WordCounts word_counts(std::string_view text) { return word_counts(text, MetricProfile::Pipeline); }

WordCounts word_counts(std::string_view text, MetricProfile profile) {
    const TokenSeq words = profile == MetricProfile::Published ? split_whitespace(text) : tokenize(text);
    std::unordered_set<std::string_view> distinct;
    for (const std::string& w : words) distinct.insert(w);
    return {words.size(), distinct.size()};
}

ScoredPair score_pair(const corpus::Transcript& real, const corpus::Transcript& synthetic,
                      TokenEmbedder& embedder, const PairIdentity& identity, const ScoringOptions& options) {
    if (real.id() != synthetic.id())
        throw PreconditionError("score_pair: participant ids differ ('" + real.id() + "' vs '" + synthetic.id() + "')");

    ScoredPair out;
    out.participant_id = real.id();
    out.model_id = identity.model_id;
    out.prompt_kind = identity.prompt_kind;
    if (real.participant().category) out.category = std::string(to_string(*real.participant().category));

    if (options.profile == MetricProfile::Published) {
        const std::vector<TokenSeq> cand_sents = split_sentences(synthetic.text());
        const std::vector<TokenSeq> ref_sents = split_sentences(real.text());
        const TokenSeq cand_words = sentence_words(synthetic.text());
        const TokenSeq ref_words = sentence_words(real.text());
        out.rouge1 = rouge_n(cand_words, ref_words, 1, NgramCounting::Distinct);
        out.rouge2 = rouge_n(cand_words, ref_words, 2, NgramCounting::Distinct);
        out.rougeL = rouge_l_summary(cand_sents, ref_sents);
        const TokenSeq cand_mt = tokenize_13a(synthetic.text());
        const TokenSeq ref_mt = tokenize_13a(real.text());
        out.bleu = bleu(cand_mt, ref_mt, options.bleu);
        out.gleu = google_bleu(cand_mt, ref_mt);
    } else {
        const TokenSeq& cand = synthetic.tokens();
        const TokenSeq& ref = real.tokens();
        out.rouge1 = rouge_n(cand, ref, 1);
        out.rouge2 = rouge_n(cand, ref, 2);
        out.rougeL = rouge_l(cand, ref);
        out.bleu = bleu(cand, ref, options.bleu);
        out.gleu = google_bleu(cand, ref);
    }

    const Prf bert = bert_score(synthetic.tokens(), real.tokens(), embedder);
    out.bert_p = bert.precision;
    out.bert_r = bert.recall;
    out.bert_f1 = bert.f1;

    const WordCounts wc = word_counts(synthetic.text(), options.profile);
    out.num_words = wc.num_words;
    out.num_unique_words = wc.num_unique_words;
    return out;
}

void to_json(nlohmann::ordered_json& j, const ScoredPair& p) {
    j = nlohmann::ordered_json{
        {"participant_id", p.participant_id},
        {"model_id", p.model_id},
        {"prompt_kind", p.prompt_kind},
        {"category", p.category},
        {"rouge1", p.rouge1},
        {"rouge2", p.rouge2},
        {"rougeL", p.rougeL},
        {"bleu", p.bleu},
        {"gleu", p.gleu},
        {"bert_p", p.bert_p},
        {"bert_r", p.bert_r},
        {"bert_f1", p.bert_f1},
        {"num_words", p.num_words},
        {"num_unique_words", p.num_unique_words},
    };
}

namespace {

template <typename Json>
void read_scored_pair(const Json& j, ScoredPair& p) {
    j.at("participant_id").get_to(p.participant_id);
    j.at("model_id").get_to(p.model_id);
    p.prompt_kind = j.value("prompt_kind", "");
    p.category = j.value("category", "");
    j.at("rouge1").get_to(p.rouge1);
    j.at("rouge2").get_to(p.rouge2);
    j.at("rougeL").get_to(p.rougeL);
    j.at("bleu").get_to(p.bleu);
    j.at("gleu").get_to(p.gleu);
    j.at("bert_p").get_to(p.bert_p);
    j.at("bert_r").get_to(p.bert_r);
    j.at("bert_f1").get_to(p.bert_f1);
    j.at("num_words").get_to(p.num_words);
    j.at("num_unique_words").get_to(p.num_unique_words);
}

}  // namespace

void from_json(const nlohmann::ordered_json& j, ScoredPair& p) { read_scored_pair(j, p); }
void from_json(const nlohmann::json& j, ScoredPair& p) { read_scored_pair(j, p); }

}  // namespace normpipe::textmetrics
