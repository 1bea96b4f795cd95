// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero
// if any fails. `normpipe_acceptance 5` runs criterion 5 only.

#include "normpipe/classifier.hpp"
#include "normpipe/corpus.hpp"
#include "normpipe/embedlab.hpp"
#include "normpipe/judgecal.hpp"
#include "normpipe/llmgate.hpp"
#include "normpipe/textmetrics.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace normpipe;
namespace fs = std::filesystem;
namespace txt = normpipe::textmetrics;

namespace {

// Tolerances and limits.
constexpr double kAppendixMetricTol = 0.03;
constexpr double kAppendixCountTol = 3.0;
constexpr double kGleuZeroCase = 0.11;
constexpr double kOracleTol = 1e-12;
constexpr double kBertOracleTol = 1e-9;
constexpr double kPerplexityTol = 1e-3;
constexpr double kTsneGradTol = 1e-4;
constexpr double kSilhouetteMin = 0.3;
constexpr double kSelfTransferMin = 0.99;
constexpr double kShuffledTol = 0.1;
constexpr double kEnetGradTol = 1e-5;
constexpr double kZeroWeightTol = 1e-6;
constexpr double kPearsonHand = 0.8;

struct Outcome {
    bool pass = true;
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (failures.size() < 5) failures.push_back(what);
        }
    }
};

struct Criterion {
    int id;
    const char* name;
    std::chrono::seconds limit;
    std::function<void(Outcome&)> run;
};

nlohmann::json appendix() { return nlohmann::json::parse(read_file(NORMPIPE_TEST_DATA "/appendix_pairs.json")); }

// ---------------------------------------------------------------------------
// 1, 2: appendix values
// ---------------------------------------------------------------------------

txt::ScoredPair score_block(const nlohmann::json& b) {
    corpus::ParticipantProfile p{"appendix", std::nullopt, std::nullopt, std::nullopt,
                                 parse_category(b["category"].get<std::string>())};
    const corpus::Transcript real(p, b["original"].get<std::string>(), Source::Real);
    const corpus::Transcript syn(p, b["generated"].get<std::string>(), Source::Synthetic);
    llmgate::HashTokenEmbedder emb;
    return txt::score_pair(real, syn, emb, {b["model"].get<std::string>(), "advanced"});
}

void criterion_appendix(Outcome& o) {
    const auto blocks = appendix();
    o.expect(blocks.size() >= 7, "fewer than 7 appendix blocks");
    for (const auto& b : blocks) {
        const auto s = score_block(b);
        const auto& m = b["metrics"];
        const std::string tag = b["category"].get<std::string>() + "/" + b["model"].get<std::string>();
        auto near = [&](double got, const char* key, double tol) {
            const double want = m[key].get<double>();
            o.expect(std::abs(got - want) <= tol, fmt::format("{} {}: {:.4f} vs {}", tag, key, got, want));
        };
        near(s.rouge1, "ROUGE-1", kAppendixMetricTol);
        near(s.rougeL, "ROUGE-L", kAppendixMetricTol);
        near(s.gleu, "Google BLEU", kAppendixMetricTol);
        near(static_cast<double>(s.num_words), "num words", kAppendixCountTol);
        near(static_cast<double>(s.num_unique_words), "num unique words", kAppendixCountTol);
    }
}

void criterion_bleu_zero(Outcome& o) {
    bool found = false;
    for (const auto& b : appendix()) {
        if (b["category"] != "AD" || b["model"] != "gpt-4o-trivial") continue;
        found = true;
        const auto s = score_block(b);
        o.expect(s.bleu == 0.0, fmt::format("BLEU {} is not exactly 0", s.bleu));
        o.expect(std::abs(s.gleu - kGleuZeroCase) <= kAppendixMetricTol, fmt::format("GLEU {:.4f}", s.gleu));
    }
    o.expect(found, "AD/gpt-4o-trivial block missing");
}

// ---------------------------------------------------------------------------
// 3: metric properties and brute-force oracles
// ---------------------------------------------------------------------------

std::vector<std::string> ngrams(const txt::TokenSeq& s, int n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i) {
        std::string g;
        for (int k = 0; k < n; ++k) g += s[i + static_cast<std::size_t>(k)] + '\x1f';
        out.push_back(g);
    }
    return out;
}

// Each candidate n-gram claims one unused equal reference n-gram.
std::size_t oracle_matches(const txt::TokenSeq& c, const txt::TokenSeq& r, int n) {
    const auto cg = ngrams(c, n), rg = ngrams(r, n);
    std::vector<bool> used(rg.size(), false);
    std::size_t m = 0;
    for (const auto& g : cg)
        for (std::size_t j = 0; j < rg.size(); ++j)
            if (!used[j] && rg[j] == g) {
                used[j] = true;
                ++m;
                break;
            }
    return m;
}

// Longest common subsequence by enumerating every subsequence of `a`.
std::size_t oracle_lcs(const txt::TokenSeq& a, const txt::TokenSeq& b) {
    std::size_t best = 0;
    for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
        std::size_t j = 0, len = 0;
        bool ok = true;
        for (std::size_t i = 0; i < a.size() && ok; ++i) {
            if (!(mask & (1u << i))) continue;
            while (j < b.size() && b[j] != a[i]) ++j;
            if (j == b.size()) ok = false;
            else {
                ++j;
                ++len;
            }
        }
        if (ok) best = std::max(best, len);
    }
    return best;
}

double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

double oracle_rouge_n(const txt::TokenSeq& c, const txt::TokenSeq& r, int n) {
    const double cn = static_cast<double>(ngrams(c, n).size()), rn = static_cast<double>(ngrams(r, n).size());
    if (cn == 0 || rn == 0) return 0.0;
    const double m = static_cast<double>(oracle_matches(c, r, n));
    return f1(m / cn, m / rn);
}

double oracle_rouge_l(const txt::TokenSeq& c, const txt::TokenSeq& r) {
    if (c.empty() || r.empty()) return 0.0;
    const double l = static_cast<double>(oracle_lcs(c, r));
    return f1(l / static_cast<double>(c.size()), l / static_cast<double>(r.size()));
}

double oracle_bleu(const txt::TokenSeq& c, const txt::TokenSeq& r) {
    if (c.empty() || r.empty()) return 0.0;
    const int order = std::min<int>(4, static_cast<int>(c.size()));
    double log_sum = 0.0;
    for (int n = 1; n <= order; ++n) {
        const double m = static_cast<double>(oracle_matches(c, r, n));
        if (m == 0) return 0.0;
        log_sum += std::log(m / static_cast<double>(ngrams(c, n).size()));
    }
    const double cl = static_cast<double>(c.size()), rl = static_cast<double>(r.size());
    const double bp = cl < rl ? std::exp(1.0 - rl / cl) : 1.0;
    return bp * std::exp(log_sum / order);
}

double oracle_gleu(const txt::TokenSeq& c, const txt::TokenSeq& r) {
    double m = 0, cn = 0, rn = 0;
    for (int n = 1; n <= 4; ++n) {
        m += static_cast<double>(oracle_matches(c, r, n));
        cn += static_cast<double>(ngrams(c, n).size());
        rn += static_cast<double>(ngrams(r, n).size());
    }
    const double denom = std::max(cn, rn);
    return denom > 0 ? m / denom : 0.0;
}

void criterion_metric_properties(Outcome& o) {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> vocab{"boy", "jar", "cookie", "sink", "water", "girl"};
    auto random_seq = [&](std::size_t len) {
        txt::TokenSeq s;
        for (std::size_t i = 0; i < len; ++i) s.tokens.push_back(vocab[rng() % vocab.size()]);
        return s;
    };
    llmgate::HashTokenEmbedder emb(16);
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0 + 1e-12; };

    for (int k = 0; k < 1000; ++k) {
        const txt::TokenSeq c = random_seq(rng() % 9), r = random_seq(rng() % 9);
        const std::vector<txt::TokenSeq> cs{c}, rs{r};
        const txt::Prf bert = c.empty() || r.empty() ? txt::Prf{} : txt::bert_score(c, r, emb);
        const std::map<std::string, double> values{
            {"rouge1", txt::rouge_n(c, r, 1)},
            {"rouge2", txt::rouge_n(c, r, 2)},
            {"rouge1_distinct", txt::rouge_n(c, r, 1, txt::NgramCounting::Distinct)},
            {"rougeL", txt::rouge_l(c, r)},
            {"rougeL_summary", txt::rouge_l_summary(cs, rs)},
            {"bleu", txt::bleu(c, r)},
            {"gleu", txt::google_bleu(c, r)},
            {"bert_p", bert.precision},
            {"bert_r", bert.recall},
            {"bert_f1", bert.f1}};
        for (const auto& [name, v] : values) o.expect(in_unit(v), fmt::format("{} = {} out of range", name, v));

        for (int n = 1; n <= 4; ++n)
            o.expect(txt::ngram_matches(c, r, n) == oracle_matches(c, r, n), fmt::format("clipped {}-gram count", n));
        o.expect(txt::lcs_length(c, r) == oracle_lcs(c, r), "LCS length");
        o.expect(std::abs(values.at("rouge1") - oracle_rouge_n(c, r, 1)) <= kOracleTol, "ROUGE-1 oracle");
        o.expect(std::abs(values.at("rouge2") - oracle_rouge_n(c, r, 2)) <= kOracleTol, "ROUGE-2 oracle");
        o.expect(std::abs(values.at("rougeL") - oracle_rouge_l(c, r)) <= kOracleTol, "ROUGE-L oracle");
        o.expect(std::abs(values.at("bleu") - oracle_bleu(c, r)) <= kOracleTol, "BLEU oracle");
        o.expect(std::abs(values.at("gleu") - oracle_gleu(c, r)) <= kOracleTol, "GLEU oracle");

        if (!c.empty()) {
            const std::vector<txt::TokenSeq> cc{c};
            auto one = [](double v) { return std::abs(v - 1.0) <= 1e-12; };
            o.expect(one(txt::rouge_n(c, c, 1)), "rouge1(x,x)");
            if (c.size() >= 2) o.expect(one(txt::rouge_n(c, c, 2)), "rouge2(x,x)");
            o.expect(one(txt::rouge_l(c, c)), "rougeL(x,x)");
            o.expect(one(txt::rouge_l_summary(cc, cc)), "rougeL_summary(x,x)");
            o.expect(one(txt::bleu(c, c)), "bleu(x,x)");
            o.expect(one(txt::google_bleu(c, c)), "gleu(x,x)");
            o.expect(one(txt::bert_score(c, c, emb).f1), "bert_f1(x,x)");
        }
    }
}

// ---------------------------------------------------------------------------
// 4: BERTScore contract
// ---------------------------------------------------------------------------

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return d / std::sqrt(na * nb);
}

void criterion_bertscore(Outcome& o) {
    llmgate::HashTokenEmbedder emb;
    const txt::TokenSeq t = txt::tokenize("the boy is reaching for the cookie jar while the sink overflows");
    const txt::Prf same = txt::bert_score(t, t, emb);
    o.expect(same.f1 == 1.0 || std::abs(same.f1 - 1.0) <= 1e-12, fmt::format("identical F1 {}", same.f1));

    const std::vector<std::vector<double>> cand{{1.0, 0.2, 0.0}, {0.3, 1.0, 0.5}};
    const std::vector<std::vector<double>> ref{{0.9, 0.1, 0.1}, {0.0, 0.8, 0.6}, {0.4, 0.4, 0.4}};
    double p = 0, r = 0;
    for (const auto& c : cand) {
        double best = -1;
        for (const auto& x : ref) best = std::max(best, cosine(c, x));
        p += best / static_cast<double>(cand.size());
    }
    for (const auto& x : ref) {
        double best = -1;
        for (const auto& c : cand) best = std::max(best, cosine(c, x));
        r += best / static_cast<double>(ref.size());
    }
    const txt::Prf got = txt::bert_score_vectors(cand, ref);
    o.expect(std::abs(got.precision - p) <= kBertOracleTol, fmt::format("precision {} vs {}", got.precision, p));
    o.expect(std::abs(got.recall - r) <= kBertOracleTol, fmt::format("recall {} vs {}", got.recall, r));
    o.expect(std::abs(got.f1 - f1(p, r)) <= kBertOracleTol, fmt::format("F1 {} vs {}", got.f1, f1(p, r)));
}

// ---------------------------------------------------------------------------
// 5: t-SNE numerics
// ---------------------------------------------------------------------------

Eigen::MatrixXd gaussian_points(int per_cluster, int dim, double sep, std::uint64_t seed, std::vector<int>* labels) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(per_cluster * 3, dim);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < per_cluster; ++i) {
            for (int k = 0; k < dim; ++k) x(c * per_cluster + i, k) = g(rng) + (k == c ? sep : 0.0);
            if (labels) labels->push_back(c);
        }
    return x;
}

std::vector<embedlab::EmbeddingRecord> as_records(const Eigen::MatrixXd& x) {
    std::vector<embedlab::EmbeddingRecord> out;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        embedlab::EmbeddingRecord r;
        r.id = std::to_string(i);
        r.vector.assign(x.row(i).data(), x.row(i).data() + x.cols());
        for (Eigen::Index k = 0; k < x.cols(); ++k) r.vector[static_cast<std::size_t>(k)] = x(i, k);
        out.push_back(std::move(r));
    }
    return out;
}

void criterion_tsne(Outcome& o) {
    // Perplexity of each conditional row, recomputed from the returned bandwidths.
    const Eigen::MatrixXd x = gaussian_points(10, 6, 3.0, 5, nullptr);
    const double target = 8.0;
    const embedlab::Affinities aff = embedlab::compute_affinities(x, target);
    const Eigen::MatrixXd d = embedlab::squared_distances(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double z = 0;
        std::vector<double> w(static_cast<std::size_t>(x.rows()), 0.0);
        for (Eigen::Index j = 0; j < x.rows(); ++j)
            if (j != i) z += (w[static_cast<std::size_t>(j)] = std::exp(-aff.betas[static_cast<std::size_t>(i)] * d(i, j)));
        double h = 0;
        for (double v : w)
            if (v > 0) h -= (v / z) * std::log(v / z);
        o.expect(std::abs(std::exp(h) - target) <= kPerplexityTol, fmt::format("row {} perplexity {}", i, std::exp(h)));
    }

    // Analytic gradient vs central differences, n = 12, d = 5.
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x12(12, 5), y(12, 2);
    for (Eigen::Index i = 0; i < 12; ++i) {
        for (Eigen::Index k = 0; k < 5; ++k) x12(i, k) = g(rng);
        for (Eigen::Index k = 0; k < 2; ++k) y(i, k) = g(rng);
    }
    const Eigen::MatrixXd p = embedlab::compute_affinities(x12, 3.0).joint;
    const Eigen::MatrixXd grad = embedlab::kl_gradient(p, y);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index k = 0; k < 2; ++k) {
            Eigen::MatrixXd yp = y, ym = y;
            yp(i, k) += h;
            ym(i, k) -= h;
            const double fd = (embedlab::kl_divergence(p, yp) - embedlab::kl_divergence(p, ym)) / (2 * h);
            const double rel = std::abs(fd - grad(i, k)) / std::max(1e-8, std::max(std::abs(fd), std::abs(grad(i, k))));
            o.expect(rel < kTsneGradTol, fmt::format("gradient ({}, {}) relative error {}", i, k, rel));
        }

    // Cluster structure and KL descent on seeded runs.
    std::vector<int> labels;
    const Eigen::MatrixXd x60 = gaussian_points(20, 10, 8.0, 3, &labels);
    const auto records = as_records(x60);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        embedlab::TsneConfig cfg;
        cfg.perplexity = 15;
        cfg.iterations = 500;
        cfg.seed = seed;
        const embedlab::Projection2D proj = embedlab::tsne_project(records, cfg);
        o.expect(proj.kl_final <= proj.kl_initial,
                 fmt::format("seed {}: KL {} -> {}", seed, proj.kl_initial, proj.kl_final));
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(proj.points.size()), 2);
        for (std::size_t i = 0; i < proj.points.size(); ++i) {
            pts(static_cast<Eigen::Index>(i), 0) = proj.points[i].x;
            pts(static_cast<Eigen::Index>(i), 1) = proj.points[i].y;
        }
        const double s = embedlab::silhouette(pts, labels);
        o.expect(s > kSilhouetteMin, fmt::format("seed {}: silhouette {}", seed, s));
    }
}

// ---------------------------------------------------------------------------
// 6: classifier
// ---------------------------------------------------------------------------

double auc_oracle(const std::vector<double>& s, const std::vector<bool>& pos) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (pos[i] && !pos[j]) {
                den += 1;
                num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return num / den;
}

classifier::LabeledEmbeddingSet labeled_gaussians(int per_class, int dim, double sep, std::uint64_t seed,
                                                  const std::string& label) {
    std::vector<int> cls;
    classifier::LabeledEmbeddingSet s;
    s.set_label = label;
    s.vectors = gaussian_points(per_class, dim, sep, seed, &cls);
    for (std::size_t i = 0; i < cls.size(); ++i) {
        s.ids.push_back("id" + std::to_string(i));
        s.labels.push_back(kAllCategories[cls[i]]);
    }
    return s;
}

void criterion_classifier(Outcome& o) {
    // Binary AUC against the pairwise count for every size up to 12, with ties.
    std::mt19937_64 rng(31);
    for (int n = 2; n <= 12; ++n)
        for (int rep = 0; rep < 200; ++rep) {
            std::vector<double> s(static_cast<std::size_t>(n));
            std::vector<bool> pos(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                s[static_cast<std::size_t>(i)] = static_cast<double>(rng() % 5);
                pos[static_cast<std::size_t>(i)] = rng() & 1;
            }
            pos[0] = true;
            pos[1] = false;
            const double got = classifier::roc_auc_binary(s, pos), want = auc_oracle(s, pos);
            o.expect(std::abs(got - want) <= kOracleTol, fmt::format("n={} AUC {} vs {}", n, got, want));
        }

    // OVO macro AUC against a direct transcription of its definition.
    for (int n = 3; n <= 12; ++n) {
        Eigen::MatrixXd probs = Eigen::MatrixXd::Random(n, 3).cwiseAbs();
        std::vector<int> lab(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) lab[static_cast<std::size_t>(i)] = i % 3;
        double total = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b) {
                std::vector<double> sa, sb;
                std::vector<bool> pa, pb;
                for (int i = 0; i < n; ++i) {
                    const int l = lab[static_cast<std::size_t>(i)];
                    if (l != a && l != b) continue;
                    const double den = probs(i, a) + probs(i, b);
                    sa.push_back(probs(i, a) / den);
                    sb.push_back(probs(i, b) / den);
                    pa.push_back(l == a);
                    pb.push_back(l == b);
                }
                total += 0.5 * (auc_oracle(sa, pa) + auc_oracle(sb, pb));
            }
        const double got = classifier::roc_auc_ovo_macro(probs, lab);
        o.expect(std::abs(got - total / 3) <= kOracleTol, fmt::format("OVO n={} {} vs {}", n, got, total / 3));
    }

    // Separable self-transfer.
    classifier::TransferOptions opt;
    opt.trials = 5;
    opt.folds = 3;
    const auto sep = classifier::transfer_matrix(
        {labeled_gaussians(30, 8, 6.0, 14, "a"), labeled_gaussians(30, 8, 6.0, 24, "b")}, opt);
    for (const auto& c : sep.cells)
        if (c.train_set == c.test_set)
            o.expect(c.auc_median >= kSelfTransferMin,
                     fmt::format("separable self-transfer {} median {}", c.train_set, c.auc_median));

    // Shuffled labels over 5 seeds.
    auto shuffled_a = labeled_gaussians(100, 8, 4.0, 15, "a");
    auto shuffled_b = labeled_gaussians(100, 8, 4.0, 25, "b");
    std::shuffle(shuffled_a.labels.begin(), shuffled_a.labels.end(), std::mt19937_64(16));
    std::shuffle(shuffled_b.labels.begin(), shuffled_b.labels.end(), std::mt19937_64(26));
    const auto sh = classifier::transfer_matrix({shuffled_a, shuffled_b}, opt);
    for (const auto& c : sh.cells) {
        if (c.train_set != c.test_set) continue;
        o.expect(c.n_seeds == 5, "shuffled run did not use 5 seeds");
        o.expect(std::abs(c.auc_median - 0.5) <= kShuffledTol, fmt::format("shuffled {} median {}", c.train_set, c.auc_median));
    }

    // Smooth-part gradient vs central differences.
    std::mt19937_64 g(5);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd z(15, 4), w(4, 3);
    Eigen::RowVectorXd b(3);
    std::vector<int> y(15);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = nd(g);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = nd(g);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = nd(g);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 3);
    Eigen::MatrixXd gw;
    Eigen::RowVectorXd gb;
    classifier::cross_entropy_gradient(z, y, w, b, gw, gb);
    const double h = 1e-6;
    auto check = [&](double analytic, double fd, const std::string& what) {
        const double rel = std::abs(analytic - fd) / std::max(1e-8, std::max(std::abs(analytic), std::abs(fd)));
        o.expect(rel < kEnetGradTol, fmt::format("{} relative error {}", what, rel));
    };
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        Eigen::MatrixXd wp = w, wm = w;
        wp.data()[k] += h;
        wm.data()[k] -= h;
        check(gw.data()[k], (classifier::cross_entropy(z, y, wp, b) - classifier::cross_entropy(z, y, wm, b)) / (2 * h),
              fmt::format("dW[{}]", k));
    }
    for (Eigen::Index k = 0; k < b.size(); ++k) {
        Eigen::RowVectorXd bp = b, bm = b;
        bp[k] += h;
        bm[k] -= h;
        check(gb[k], (classifier::cross_entropy(z, y, w, bp) - classifier::cross_entropy(z, y, w, bm)) / (2 * h),
              fmt::format("db[{}]", k));
    }

    // A huge penalty drives every weight to zero.
    for (double alpha : {0.0, 0.5, 1.0}) {
        const auto model = classifier::fit_elastic_net(labeled_gaussians(10, 5, 3.0, 2, "z"), alpha, 1e8);
        o.expect(model.weights.cwiseAbs().maxCoeff() <= kZeroWeightTol,
                 fmt::format("alpha {}: max |w| {}", alpha, model.weights.cwiseAbs().maxCoeff()));
    }
}

// ---------------------------------------------------------------------------
// 7: judge
// ---------------------------------------------------------------------------

void criterion_judge(Outcome& o) {
    std::mt19937_64 rng(77);
    const std::vector<std::string> markers{"Total rating", "total rating", "TOTAL RATING", "Total Rating",
                                           "**Total rating**"};
    const std::vector<std::string> seps{":", ": ", " : ", ":   ", ":\t", " ", ":** ", "**: "};
    const std::vector<std::string> evals{"Evaluation: natural and hesitant.", "evaluation:too formal",
                                         "EVALUATION:   long, but plausible"};
    for (int k = 0; k < 200; ++k) {
        const int rating = 1 + static_cast<int>(rng() % 4);
        const std::string line = markers[rng() % markers.size()] + seps[rng() % seps.size()] + std::to_string(rating);
        const std::string eval = evals[rng() % evals.size()];
        std::string v;
        switch (rng() % 3) {
            case 0: v = "Feedback:::\n" + eval + "\n" + line + "\n"; break;
            case 1: v = line + "  \n" + eval; break;
            default: v = "\n\t" + eval + "\n\n" + line; break;
        }
        try {
            o.expect(judgecal::parse_rating(v).rating == rating, "planted rating not recovered: " + v);
        } catch (const std::exception& e) {
            o.expect(false, std::string("parse failed: ") + e.what());
        }
    }

    const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4}, rev{4, 3, 2, 1};
    o.expect(std::abs(*judgecal::pearson(a, a) - 1.0) <= 1e-12, "self correlation");
    o.expect(std::abs(*judgecal::pearson(a, rev) + 1.0) <= 1e-12, "reflected correlation");
    o.expect(std::abs(*judgecal::pearson(a, b) - kPearsonHand) <= 1e-12, "hand case 0.8");

    std::vector<judgecal::RatingRecord> ratings;
    for (int i = 0; i < 4; ++i) {
        const std::string item = "m/advanced/p" + std::to_string(i);
        ratings.push_back({item, "human:1", static_cast<int>(a[static_cast<std::size_t>(i)]), ""});
        ratings.push_back({item, "human:2", static_cast<int>(b[static_cast<std::size_t>(i)]), ""});
        ratings.push_back({item, "judge:gpt-4o", static_cast<int>(rev[static_cast<std::size_t>(i)]), ""});
    }
    const std::string md = judgecal::render_agreement(judgecal::agreement(ratings));
    o.expect(md.find("| Comparison | Correlation (pearson) |") != std::string::npos, "correlation table header");
    o.expect(md.find("| Human 1 vs Human 2 | 0.800 |") != std::string::npos, "human pair row");
    o.expect(md.find("| Human 1 vs LLM-as-a-Judge (gpt-4o) | -1.000 |") != std::string::npos, "judge pair row");
    o.expect(md.find("| Evaluator | Mean Score | Standard Deviation |") != std::string::npos, "mean/SD header");
    o.expect(md.find("| Human 1 | 2.500 | 1.291 |") != std::string::npos, "mean/SD row");
}

// ---------------------------------------------------------------------------
// 8: end-to-end fixture run through the CLI
// ---------------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[e.path().lexically_relative(dir).generic_string()] = read_file(e.path().string());
    return out;
}

void criterion_end_to_end(Outcome& o) {
    const fs::path out = fs::temp_directory_path() / "normpipe-acceptance-e2e";
    fs::remove_all(out);
    const std::string cmd = fmt::format("\"{}\" run --backend mock --config \"{}\" --out \"{}\" > \"{}\" 2>&1", NORMPIPE_CLI,
                                        NORMPIPE_TEST_DATA "/fixture/pipeline.json", out.string(),
                                        (fs::temp_directory_path() / "normpipe-acceptance-e2e.log").string());
    o.expect(std::system(cmd.c_str()) == 0, "first run exited non-zero");
    if (!o.pass) return;

    for (const char* f : {"report/summary.md", "report/summary.csv", "report/summary.json", "classifier/transfer.csv",
                          "judge/agreement.json", "projection/projection.csv", "projection/scatter_category.svg",
                          "manifest.json"})
        o.expect(fs::exists(out / f), std::string("missing ") + f);

    const std::string table = read_file((out / "report/summary.md").string());
    o.expect(table.rfind("| Category | Model | ROUGE-1 | ROUGE-L | BERT F1 | Google BLEU | Num Words |", 0) == 0,
             "summary header");
    for (const char* cat : {"| Control |", "| MCI |", "| AD |"})
        o.expect(table.find(cat) != std::string::npos, std::string("summary lacks ") + cat);

    const auto manifest = nlohmann::json::parse(read_file((out / "manifest.json").string()));
    o.expect(manifest["status"] == "complete", "manifest status");
    for (const auto& s : manifest["stages"]) o.expect(s["status"] == "complete", "stage " + s["name"].get<std::string>());
    std::set<std::string> listed;
    for (const auto& a : manifest["artifacts"]) o.expect(listed.insert(a["path"]).second, "listed twice");
    const auto first = snapshot(out);
    for (const auto& [path, content] : first)
        if (path != "manifest.json") o.expect(listed.count(path) == 1, "not in manifest: " + path);
    o.expect(listed.size() + 1 == first.size(), "manifest lists files that do not exist");

    o.expect(std::system(cmd.c_str()) == 0, "second run exited non-zero");
    o.expect(snapshot(out) == first, "second run changed bytes");
    fs::remove_all(out);
}

// ---------------------------------------------------------------------------
// 9: refusal detection
// ---------------------------------------------------------------------------

void criterion_refusals(Outcome& o) {
    for (const char* quoted : {"I'm sorry, I can't help with that.",
                               "I can't generate responses involving people's identity or conditions.",
                               "I'm sorry, but I cannot interpret images of people."})
        o.expect(llmgate::detect_refusal(quoted), std::string("not flagged: ") + quoted);

    int narratives = 0;
    bool appendix_refusal = false;
    for (const auto& b : appendix()) {
        const std::string gen = b["generated"].get<std::string>();
        if (b["model"].get<std::string>().ends_with("comprehensive")) {
            ++narratives;
            o.expect(!llmgate::detect_refusal(gen), "narrative flagged: " + b["category"].get<std::string>());
        }
        if (b["model"] == "gpt-4o-trivial" && b["category"] == "AD") appendix_refusal = llmgate::detect_refusal(gen);
    }
    o.expect(narratives == 6, fmt::format("{} narratives, expected 6", narratives));
    o.expect(appendix_refusal, "appendix refusal not flagged");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace std::chrono_literals;
    const std::vector<Criterion> criteria{
        {1, "appendix metric oracle", 1s, criterion_appendix},
        {2, "BLEU zero case", 1s, criterion_bleu_zero},
        {3, "metric ranges, identities and clipped-count oracle", 30s, criterion_metric_properties},
        {4, "BERTScore contract", 1s, criterion_bertscore},
        {5, "t-SNE numerics", 60s, criterion_tsne},
        {6, "classifier suite", 120s, criterion_classifier},
        {7, "judge suite", 1s, criterion_judge},
        {8, "end-to-end fixture run", 180s, criterion_end_to_end},
        {9, "refusal detection", 1s, criterion_refusals},
    };

    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    set_warning_sink([](std::string_view, std::string_view) {});
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        o.expect(secs < static_cast<double>(c.limit.count()),
                 fmt::format("runtime {:.2f}s over the {}s limit", secs, c.limit.count()));
        std::cout << fmt::format("{} criterion {}: {} ({:.2f}s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs);
        for (const auto& f : o.failures) std::cout << "    " << f << "\n";
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
