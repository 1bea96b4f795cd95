#pragma once

#include "normpipe/common.hpp"
#include "normpipe/corpus.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace normpipe::embedlab {

struct RecordMeta {
    std::optional<Category> category;
    std::optional<int> age;
    std::optional<Gender> gender;
    std::optional<int> mmse;
    std::string source;  // corpus label
    Source origin = Source::Synthetic;
};

struct EmbeddingRecord {
    std::string id;
    std::vector<double> vector;
    RecordMeta meta;
};

/// Metadata of a transcript, tagged with its corpus label.
RecordMeta meta_of(const corpus::Transcript& t, const std::string& source_label);

// ---------------------------------------------------------------------------
// t-SNE (exact, O(n^2)).
// ---------------------------------------------------------------------------

struct TsneConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    std::uint64_t seed = 0;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iterations = 250;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    int momentum_switch = 250;
    double init_sigma = 1e-4;
};

struct ProjectedPoint {
    double x = 0.0;
    double y = 0.0;
    std::string id;
    RecordMeta meta;
};

struct Projection2D {
    std::vector<ProjectedPoint> points;
    double kl_initial = 0.0;
    double kl_final = 0.0;
    TsneConfig config;
};

struct Affinities {
    Eigen::MatrixXd joint;               // symmetric, zero diagonal, sums to 1
    std::vector<double> perplexities;    // achieved perplexity of each conditional row
    std::vector<double> betas;           // precision 1/(2 sigma^2) of each row
};

/// Squared Euclidean distances between rows.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x);

/// Bisection on each row's Gaussian precision to hit `perplexity`, then
/// P = (P_j|i + P_i|j) / 2n.
Affinities compute_affinities(const Eigen::MatrixXd& x, double perplexity, double tol = 1e-10,
                              int max_steps = 200);

/// KL(P || Q) where Q is the Student-t similarity of the 2-D layout `y`.
double kl_divergence(const Eigen::MatrixXd& p, const Eigen::MatrixXd& y);

/// Gradient of kl_divergence with respect to y (n x 2).
Eigen::MatrixXd kl_gradient(const Eigen::MatrixXd& p, const Eigen::MatrixXd& y);

/// Requires n >= 10 and 3 <= perplexity < n/3. Deterministic for a seed.
/// Throws NumericError naming the iteration if the gradient goes non-finite.
Projection2D tsne_project(const std::vector<EmbeddingRecord>& records, const TsneConfig& config);

/// Mean silhouette of `labels` over rows of `points`, Euclidean distance.
double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels);

/// CSV with header x,y,id,category,age,gender,mmse,source.
std::string projection_csv(const Projection2D& projection);

// ---------------------------------------------------------------------------
// Word frequencies.
// ---------------------------------------------------------------------------

std::vector<std::string> default_tracked_terms();

/// The bundled stopword list (function words and speech fillers).
const std::vector<std::string>& default_stopwords();

struct FrequencyTable {
    std::map<std::string, std::size_t> counts;
    std::size_t total_tokens = 0;
    std::vector<std::string> tracked_terms;  // order as requested
    std::map<std::string, std::size_t> tracked;
    std::vector<std::pair<std::string, std::size_t>> top;  // stopwords excluded; ties alphabetical
};

/// Pipeline-tokenizer counts over every transcript. Stopwords only affect `top`.
FrequencyTable frequency_table(const corpus::CorpusHandle& corpus, const std::vector<std::string>& tracked_terms,
                               std::size_t top_k, const std::vector<std::string>& stopwords = default_stopwords());

struct TermComparison {
    std::string term;
    double rate_a = 0.0;  // per 1000 tokens
    double rate_b = 0.0;
    double ratio = 0.0;   // rate_b / rate_a; +inf when rate_a == 0
};

/// Throws PreconditionError if the tables track different terms.
std::vector<TermComparison> compare_frequencies(const FrequencyTable& a, const FrequencyTable& b);

/// "inf" for infinite ratios, otherwise fixed with `precision` decimals.
std::string format_ratio(double ratio, int precision = 3);

}  // namespace normpipe::embedlab
