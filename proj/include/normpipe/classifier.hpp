#pragma once

#include "normpipe/common.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace normpipe::classifier {

struct LabeledEmbeddingSet {
    std::string set_label;
    std::vector<std::string> ids;  // one per row; used to align sets
    Eigen::MatrixXd vectors;       // n x d
    std::vector<Category> labels;

    /// Throws DataError on size mismatches, duplicate ids, non-finite values
    /// or fewer than two distinct labels.
    void validate() const;
};

/// Per-feature mean and population standard deviation; zero-variance
/// features get scale 1.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& z) const;
};

struct ElasticNetModel {
    Eigen::MatrixXd weights;  // d x c, in standardized feature space
    Eigen::RowVectorXd biases;
    std::vector<Category> classes;  // column order; the classes seen in training
    double l1_ratio = 0.0;
    double lambda = 0.0;
    Standardizer standardizer;
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
    std::vector<double> objective_trace;  // filled when FitOptions::record_trace
};

struct FitOptions {
    double tolerance = 1e-7;
    int patience = 5;
    int max_iterations = 5000;
    bool record_trace = false;
};

/// Multinomial cross-entropy (mean over rows) plus
/// lambda * (alpha * |W|_1 + (1 - alpha) / 2 * |W|_2^2), minimised by
/// proximal gradient descent with backtracking. The bias is not penalised.
ElasticNetModel fit_elastic_net(const LabeledEmbeddingSet& train, double alpha, double lambda,
                                std::uint64_t seed = 0, const FitOptions& options = {});

/// Softmax class probabilities, columns in model.classes order.
Eigen::MatrixXd predict_proba(const ElasticNetModel& model, const Eigen::MatrixXd& vectors);

// Pieces of the objective, exposed for gradient checks.
double cross_entropy(const Eigen::MatrixXd& z, const std::vector<int>& y, const Eigen::MatrixXd& w,
                     const Eigen::RowVectorXd& b);
void cross_entropy_gradient(const Eigen::MatrixXd& z, const std::vector<int>& y, const Eigen::MatrixXd& w,
                            const Eigen::RowVectorXd& b, Eigen::MatrixXd& grad_w, Eigen::RowVectorXd& grad_b);
double elastic_penalty(const Eigen::MatrixXd& w, double alpha, double lambda);

/// Binary ROC AUC with midrank ties. Throws PreconditionError when a side is empty.
double roc_auc_binary(const std::vector<double>& scores, const std::vector<bool>& positive);

/// One-vs-one macro AUC. `labels` index the columns of `probs`. Each pair
/// averages both directions; pairs missing a side are skipped with a warning.
double roc_auc_ovo_macro(const Eigen::MatrixXd& probs, const std::vector<int>& labels);

/// Labels mapped onto model columns; throws DataError for unseen classes.
std::vector<int> class_indices(const ElasticNetModel& model, const std::vector<Category>& labels);

/// Fold index per row. Every class needs at least `folds` members; otherwise
/// PreconditionError naming the class.
std::vector<int> stratified_folds(const std::vector<Category>& labels, int folds, std::uint64_t seed);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-class stratified split; each class contributes round(n_c * fraction)
/// test rows, clamped to [1, n_c - 1].
Split stratified_split(const std::vector<Category>& labels, double test_fraction, std::uint64_t seed);

LabeledEmbeddingSet subset(const LabeledEmbeddingSet& set, const std::vector<std::size_t>& rows);

struct TuneResult {
    double alpha = 0.0;
    double lambda = 0.0;
    double cv_auc = 0.0;
    int trials = 0;
};

/// Seeded random search: alpha ~ U[0,1], lambda = 10^U[-5,2], scored by mean
/// OVO macro AUC over stratified folds.
TuneResult tune(const LabeledEmbeddingSet& train, int trials, int folds, std::uint64_t seed,
                const FitOptions& options = {});

struct TransferOptions {
    int trials = 500;
    int folds = 5;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    double test_fraction = 0.2;
    FitOptions fit;
};

struct TransferCell {
    std::string train_set;
    std::string test_set;
    double auc_median = 0.0;
    double auc_q25 = 0.0;
    double auc_q75 = 0.0;
    int n_seeds = 0;
    std::vector<double> aucs;  // one per seed
};

struct TransferResult {
    std::vector<TransferCell> cells;  // train-major, in input order
    std::map<std::string, std::vector<TuneResult>> tuned;  // per train set, one per seed
    TransferOptions options;
};

/// For every training set and seed: stratified split by id, tune and fit on
/// the training rows, then score each set's rows with the held-out ids using
/// that set's own labels. Sets must cover the same ids (DataError lists the
/// missing ones) and share a dimension.
TransferResult transfer_matrix(const std::vector<LabeledEmbeddingSet>& sets, const TransferOptions& options);

/// Columns train_set,test_set,median,q25,q75,n_seeds.
std::string transfer_csv(const TransferResult& result);

/// Protocol description and tuned hyperparameters.
nlohmann::ordered_json transfer_metadata(const TransferResult& result);

}  // namespace normpipe::classifier
