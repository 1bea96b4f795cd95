#pragma once

#include "normpipe/corpus.hpp"
#include "normpipe/tokenize.hpp"

#include <json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace normpipe::textmetrics {

// ---------------------------------------------------------------------------
// N-gram overlap metrics. All return values lie in [0, 1].
// ---------------------------------------------------------------------------

/// How n-gram overlaps are counted.
///   Clipped:  multisets; a candidate n-gram matches at most as often as it
///             occurs in the reference.
///   Distinct: sets; each distinct n-gram counts once on either side. This is
///             the convention of the widely used `rouge` Python package.
enum class NgramCounting { Clipped, Distinct };

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Overlap count between candidate and reference n-grams under `counting`.
std::size_t ngram_matches(const TokenSeq& candidate, const TokenSeq& reference, int n,
                          NgramCounting counting = NgramCounting::Clipped);

/// ROUGE-N precision/recall/F1; all zero when either side has no n-grams.
Prf rouge_n_prf(const TokenSeq& candidate, const TokenSeq& reference, int n,
                NgramCounting counting = NgramCounting::Clipped);
double rouge_n(const TokenSeq& candidate, const TokenSeq& reference, int n,
               NgramCounting counting = NgramCounting::Clipped);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

/// Sentence-level ROUGE-L: F1 of LCS/|candidate| and LCS/|reference|.
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

/// Summary-level ROUGE-L over sentence lists with distinct-token union LCS:
/// the union, over every (reference sentence, candidate sentence) pair, of the
/// distinct tokens on one reconstructed LCS, divided by the distinct token
/// counts of each side. LCS backtracking steps back along the candidate on ties.
double rouge_l_summary(std::span<const TokenSeq> candidate_sentences,
                       std::span<const TokenSeq> reference_sentences);

struct BleuOptions {
    int max_order = 4;
    /// Add-one smoothing of the n>1 precisions. Off: any zero precision gives 0.
    bool smoothing = false;
};

/// Sentence BLEU: geometric mean of clipped precisions for n = 1..max_order
/// times the brevity penalty exp(1 - r/c) when c < r.
double bleu(const TokenSeq& candidate, const TokenSeq& reference, const BleuOptions& options = {});

/// Google-BLEU: min(precision, recall) of clipped matches pooled over n = 1..4.
double google_bleu(const TokenSeq& candidate, const TokenSeq& reference);

// ---------------------------------------------------------------------------
// BERTScore-style greedy matching.
// ---------------------------------------------------------------------------

/// Produces one vector per token, all with the same dimension.
class TokenEmbedder {
public:
    virtual ~TokenEmbedder() = default;
    virtual std::vector<std::vector<double>> embed_tokens(const TokenSeq& tokens) = 0;
};

/// Greedy cosine matching. Negative cosines are clamped to 0 so every field
/// stays in [0, 1]; no IDF weighting, no baseline rescaling.
Prf bert_score(const TokenSeq& candidate, const TokenSeq& reference, TokenEmbedder& embedder);

/// Same computation on precomputed token vectors (rows = tokens).
Prf bert_score_vectors(const std::vector<std::vector<double>>& candidate,
                       const std::vector<std::vector<double>>& reference);

// ---------------------------------------------------------------------------
// Word counts and the per-pair scoring bundle.
// ---------------------------------------------------------------------------

/// Which tokenisation each metric family uses inside score_pair.
///   Published: ROUGE over '.'-split sentences of raw words with distinct
///              n-gram sets and summary-level union LCS; BLEU/GLEU over 13a
///              tokens; word counts over raw whitespace words. Reproduces the
///              magnitudes reported for real-vs-synthetic picture descriptions.
///   Pipeline:  every metric over the pipeline tokenizer with clipped counts
///              and sentence-level LCS.
enum class MetricProfile { Published, Pipeline };

struct ScoringOptions {
    MetricProfile profile = MetricProfile::Published;
    BleuOptions bleu;
};

struct WordCounts {
    std::size_t num_words = 0;
    std::size_t num_unique_words = 0;
};

/// Pipeline counting: |tokenize(text)| and its distinct-token count.
WordCounts word_counts(std::string_view text);
WordCounts word_counts(std::string_view text, MetricProfile profile);

struct ScoredPair {
    std::string participant_id;
    std::string model_id;
    std::string prompt_kind;
    std::string category;

    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rougeL = 0.0;
    double bleu = 0.0;
    double gleu = 0.0;
    double bert_p = 0.0;
    double bert_r = 0.0;
    double bert_f1 = 0.0;
    std::size_t num_words = 0;
    std::size_t num_unique_words = 0;
};

struct PairIdentity {
    std::string model_id;
    std::string prompt_kind;
};

/// Scores a synthetic transcript (candidate) against the real one (reference).
/// BERTScore always runs over pipeline tokens. Word counts describe the
/// synthetic text.
ScoredPair score_pair(const corpus::Transcript& real, const corpus::Transcript& synthetic,
                      TokenEmbedder& embedder, const PairIdentity& identity,
                      const ScoringOptions& options = {});

void to_json(nlohmann::ordered_json& j, const ScoredPair& p);
void from_json(const nlohmann::ordered_json& j, ScoredPair& p);
void from_json(const nlohmann::json& j, ScoredPair& p);

}  // namespace normpipe::textmetrics
