#include "normpipe/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace normpipe::classifier {

void LabeledEmbeddingSet::validate() const {
    const auto n = static_cast<std::size_t>(vectors.rows());
    if (ids.size() != n || labels.size() != n)
        throw DataError("set '" + set_label + "': " + std::to_string(n) + " vectors, " + std::to_string(ids.size()) +
                        " ids, " + std::to_string(labels.size()) + " labels");
    if (!vectors.allFinite()) throw DataError("set '" + set_label + "' contains non-finite values");
    if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size())
        throw DataError("set '" + set_label + "' has duplicate ids");
    if (std::set<Category>(labels.begin(), labels.end()).size() < 2)
        throw DataError("set '" + set_label + "' needs at least two distinct labels");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - s.mean;
    s.scale = (centered.colwise().squaredNorm() / static_cast<double>(std::max<Eigen::Index>(x.rows(), 1))).cwiseSqrt();
    for (Eigen::Index k = 0; k < s.scale.size(); ++k)
        if (!(s.scale(k) > 1e-12)) s.scale(k) = 1.0;
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::MatrixXd Standardizer::invert(const Eigen::MatrixXd& z) const {
    return (z.array().rowwise() * scale.array()).matrix().rowwise() + mean;
}

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
    p = p.array().exp().matrix();
    return p.array().colwise() / p.rowwise().sum().array();
}

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& v, double t) {
    return v.unaryExpr([t](double x) { return x > t ? x - t : (x < -t ? x + t : 0.0); });
}

}  // namespace

double cross_entropy(const Eigen::MatrixXd& z, const std::vector<int>& y, const Eigen::MatrixXd& w,
                     const Eigen::RowVectorXd& b) {
    const Eigen::MatrixXd logits = (z * w).rowwise() + b;
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
        total += lse - logits(i, y[static_cast<std::size_t>(i)]);
    }
    return total / static_cast<double>(logits.rows());
}

void cross_entropy_gradient(const Eigen::MatrixXd& z, const std::vector<int>& y, const Eigen::MatrixXd& w,
                            const Eigen::RowVectorXd& b, Eigen::MatrixXd& grad_w, Eigen::RowVectorXd& grad_b) {
    Eigen::MatrixXd residual = softmax_rows((z * w).rowwise() + b);
    for (Eigen::Index i = 0; i < residual.rows(); ++i) residual(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    residual /= static_cast<double>(z.rows());
    grad_w = z.transpose() * residual;
    grad_b = residual.colwise().sum();
}

double elastic_penalty(const Eigen::MatrixXd& w, double alpha, double lambda) {
    return lambda * (alpha * w.cwiseAbs().sum() + 0.5 * (1.0 - alpha) * w.squaredNorm());
}

ElasticNetModel fit_elastic_net(const LabeledEmbeddingSet& train, double alpha, double lambda, std::uint64_t,
                                const FitOptions& options) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("l1_ratio must lie in [0, 1]");
    if (!(lambda >= 0.0)) throw PreconditionError("penalty must be >= 0");
    if (train.vectors.rows() == 0) throw DataError("training set '" + train.set_label + "' is empty");

    ElasticNetModel model;
    model.l1_ratio = alpha;
    model.lambda = lambda;
    std::set<Category> present(train.labels.begin(), train.labels.end());
    model.classes.assign(present.begin(), present.end());
    if (model.classes.size() < 2)
        throw DataError("training set '" + train.set_label + "' holds a single class");
    const std::vector<int> y = class_indices(model, train.labels);

    model.standardizer = Standardizer::fit(train.vectors);
    const Eigen::MatrixXd z = model.standardizer.apply(train.vectors);
    const auto d = z.cols();
    const auto c = static_cast<Eigen::Index>(model.classes.size());

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, c);
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(c);
    Eigen::MatrixXd gw;
    Eigen::RowVectorXd gb;
    double smooth = cross_entropy(z, y, w, b);
    double objective = smooth + elastic_penalty(w, alpha, lambda);
    double step = 1.0;
    int quiet = 0;
    if (options.record_trace) model.objective_trace.push_back(objective);

    int it = 0;
    for (; it < options.max_iterations; ++it) {
        cross_entropy_gradient(z, y, w, b, gw, gb);
        step = std::min(step * 2.0, 1e6);
        Eigen::MatrixXd w_next;
        Eigen::RowVectorXd b_next;
        double smooth_next = 0.0;
        for (int tries = 0;; ++tries) {
            w_next = soft_threshold(w - step * gw, step * lambda * alpha) / (1.0 + step * lambda * (1.0 - alpha));
            b_next = b - step * gb;
            smooth_next = cross_entropy(z, y, w_next, b_next);
            const double dw = (w_next - w).squaredNorm() + (b_next - b).squaredNorm();
            const double model_bound = smooth + (gw.cwiseProduct(w_next - w)).sum() + gb.dot(b_next - b) + dw / (2.0 * step);
            if (smooth_next <= model_bound + 1e-12 || tries > 60) break;
            step *= 0.5;
        }
        const double next_objective = smooth_next + elastic_penalty(w_next, alpha, lambda);
        if (!std::isfinite(next_objective))
            throw NumericError("elastic-net objective became non-finite at iteration " + std::to_string(it));
        const double decrease = objective - next_objective;
        w = std::move(w_next);
        b = std::move(b_next);
        smooth = smooth_next;
        objective = next_objective;
        if (options.record_trace) model.objective_trace.push_back(objective);
        quiet = decrease < options.tolerance ? quiet + 1 : 0;
        if (quiet >= options.patience) {
            model.converged = true;
            ++it;
            break;
        }
    }
    model.weights = std::move(w);
    model.biases = std::move(b);
    model.iterations = it;
    model.objective = objective;
    return model;
}

Eigen::MatrixXd predict_proba(const ElasticNetModel& model, const Eigen::MatrixXd& vectors) {
    if (vectors.cols() != model.weights.rows())
        throw DataError("dimension mismatch: model expects " + std::to_string(model.weights.rows()) + ", got " +
                        std::to_string(vectors.cols()));
    return softmax_rows((model.standardizer.apply(vectors) * model.weights).rowwise() + model.biases);
}

std::vector<int> class_indices(const ElasticNetModel& model, const std::vector<Category>& labels) {
    std::vector<int> out;
    out.reserve(labels.size());
    for (Category l : labels) {
        const auto it = std::find(model.classes.begin(), model.classes.end(), l);
        if (it == model.classes.end())
            throw DataError("class " + std::string(to_string(l)) + " was not present in training");
        out.push_back(static_cast<int>(it - model.classes.begin()));
    }
    return out;
}

}  // namespace normpipe::classifier
