#include "normpipe/embedlab.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace normpipe::embedlab {

RecordMeta meta_of(const corpus::Transcript& t, const std::string& source_label) {
    const auto& p = t.participant();
    return {p.category, p.age, p.gender, p.mmse, source_label, t.source()};
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
    const Eigen::VectorXd sq = x.rowwise().squaredNorm();
    Eigen::MatrixXd d = (-2.0 * x * x.transpose()).colwise() + sq;
    d.rowwise() += sq.transpose();
    d = d.cwiseMax(0.0);
    d.diagonal().setZero();
    return d;
}

Affinities compute_affinities(const Eigen::MatrixXd& x, double perplexity, double tol, int max_steps) {
    const Eigen::Index n = x.rows();
    const Eigen::MatrixXd d = squared_distances(x);
    const double target = std::log(perplexity);
    Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(n, n);
    Affinities out;
    out.perplexities.resize(static_cast<std::size_t>(n));
    out.betas.resize(static_cast<std::size_t>(n));

    for (Eigen::Index i = 0; i < n; ++i) {
        double dmin = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) dmin = std::min(dmin, d(i, j));

        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        double entropy = 0.0;
        Eigen::VectorXd row(n);
        for (int step = 0; step < max_steps; ++step) {
            double sum = 0.0, weighted = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                // Shifting by the nearest distance keeps exp() away from underflow.
                const double shifted = d(i, j) - dmin;
                row(j) = j == i ? 0.0 : std::exp(-beta * shifted);
                sum += row(j);
                weighted += row(j) * shifted;
            }
            entropy = std::log(sum) + beta * weighted / sum;
            row /= sum;
            const double diff = entropy - target;
            if (std::abs(diff) < tol) break;
            if (diff > 0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        cond.row(i) = row.transpose();
        out.perplexities[static_cast<std::size_t>(i)] = std::exp(entropy);
        out.betas[static_cast<std::size_t>(i)] = beta;
    }
    out.joint = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
    return out;
}

namespace {

// Student-t kernel 1/(1 + |yi - yj|^2) with zero diagonal.
Eigen::MatrixXd student_kernel(const Eigen::MatrixXd& y) {
    Eigen::MatrixXd num = (1.0 + squared_distances(y).array()).inverse().matrix();
    num.diagonal().setZero();
    return num;
}

Eigen::MatrixXd gradient_with(const Eigen::MatrixXd& p, const Eigen::MatrixXd& y, const Eigen::MatrixXd& num) {
    const Eigen::MatrixXd q = num / num.sum();
    const Eigen::MatrixXd w = ((p - q).array() * num.array()).matrix();
    // sum_j w_ij (y_i - y_j) = diag(rowsum w) y - w y
    return 4.0 * (w.rowwise().sum().asDiagonal() * y - w * y);
}

double kl_with(const Eigen::MatrixXd& p, const Eigen::MatrixXd& num) {
    const double z = num.sum();
    double kl = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            const double pij = p(i, j);
            if (i == j || pij <= 0.0) continue;
            kl += pij * std::log(pij / std::max(num(i, j) / z, std::numeric_limits<double>::min()));
        }
    return kl;
}

}  // namespace

double kl_divergence(const Eigen::MatrixXd& p, const Eigen::MatrixXd& y) { return kl_with(p, student_kernel(y)); }

Eigen::MatrixXd kl_gradient(const Eigen::MatrixXd& p, const Eigen::MatrixXd& y) {
    return gradient_with(p, y, student_kernel(y));
}

Projection2D tsne_project(const std::vector<EmbeddingRecord>& records, const TsneConfig& config) {
    const std::size_t n = records.size();
    if (n < 10) throw PreconditionError("t-SNE needs at least 10 records, got " + std::to_string(n));
    if (!(config.perplexity >= 3.0) || !(config.perplexity < static_cast<double>(n) / 3.0))
        throw PreconditionError("perplexity " + std::to_string(config.perplexity) + " outside [3, n/3) for n = " +
                                std::to_string(n));
    if (config.iterations < 1) throw PreconditionError("t-SNE needs at least one iteration");

    const std::size_t dim = records.front().vector.size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        if (records[i].vector.size() != dim)
            throw DataError("embedding '" + records[i].id + "' has dimension " +
                            std::to_string(records[i].vector.size()) + ", expected " + std::to_string(dim));
        for (std::size_t k = 0; k < dim; ++k) {
            const double v = records[i].vector[k];
            if (!std::isfinite(v)) throw DataError("embedding '" + records[i].id + "' has a non-finite value");
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
        }
    }

    const Eigen::MatrixXd p = compute_affinities(x, config.perplexity).joint;

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, config.init_sigma);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index k = 0; k < 2; ++k) y(i, k) = gauss(rng);

    Projection2D out;
    out.config = config;
    out.kl_initial = kl_divergence(p, y);

    Eigen::MatrixXd update = Eigen::MatrixXd::Zero(y.rows(), 2);
    Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(y.rows(), 2);
    for (int it = 0; it < config.iterations; ++it) {
        const double exaggeration = it < config.exaggeration_iterations ? config.early_exaggeration : 1.0;
        const double momentum = it < config.momentum_switch ? config.initial_momentum : config.final_momentum;
        const Eigen::MatrixXd grad = gradient_with(exaggeration * p, y, student_kernel(y));
        if (!grad.allFinite()) throw NumericError("t-SNE gradient became non-finite at iteration " + std::to_string(it));

        for (Eigen::Index i = 0; i < y.rows(); ++i)
            for (Eigen::Index k = 0; k < 2; ++k) {
                const bool same_sign = (grad(i, k) > 0.0) == (update(i, k) > 0.0);
                gains(i, k) = std::max(same_sign ? gains(i, k) * 0.8 : gains(i, k) + 0.2, 0.01);
            }
        update = momentum * update - config.learning_rate * gains.cwiseProduct(grad);
        y += update;
        y.rowwise() -= y.colwise().mean();
    }

    out.kl_final = kl_divergence(p, y);
    if (!std::isfinite(out.kl_final)) throw NumericError("t-SNE ended with a non-finite KL divergence");
    out.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.points.push_back({y(static_cast<Eigen::Index>(i), 0), y(static_cast<Eigen::Index>(i), 1), records[i].id,
                              records[i].meta});
    return out;
}

double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels) {
    const Eigen::Index n = points.rows();
    if (static_cast<std::size_t>(n) != labels.size()) throw PreconditionError("silhouette: label count mismatch");
    const Eigen::MatrixXd d = squared_distances(points).cwiseSqrt();
    std::map<int, std::vector<Eigen::Index>> members;
    for (Eigen::Index i = 0; i < n; ++i) members[labels[static_cast<std::size_t>(i)]].push_back(i);
    if (members.size() < 2) throw PreconditionError("silhouette needs at least two clusters");

    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int own = labels[static_cast<std::size_t>(i)];
        if (members[own].size() < 2) continue;  // singleton clusters score 0
        double a = 0.0;
        for (Eigen::Index j : members[own]) a += d(i, j);
        a /= static_cast<double>(members[own].size() - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, idx] : members) {
            if (label == own) continue;
            double s = 0.0;
            for (Eigen::Index j : idx) s += d(i, j);
            b = std::min(b, s / static_cast<double>(idx.size()));
        }
        const double m = std::max(a, b);
        total += m > 0.0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

}  // namespace normpipe::embedlab
