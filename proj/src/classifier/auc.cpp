#include "normpipe/classifier.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace normpipe::classifier {

double roc_auc_binary(const std::vector<double>& scores, const std::vector<bool>& positive) {
    if (scores.size() != positive.size()) throw PreconditionError("roc_auc_binary: size mismatch");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks (1-based) over tied score groups.
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double pos = 0.0, rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (positive[i]) {
            pos += 1.0;
            rank_sum += rank[i];
        }
    const double neg = static_cast<double>(n) - pos;
    if (pos == 0.0 || neg == 0.0) throw PreconditionError("roc_auc_binary needs both positive and negative samples");
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double roc_auc_ovo_macro(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
    if (static_cast<std::size_t>(probs.rows()) != labels.size())
        throw PreconditionError("roc_auc_ovo_macro: " + std::to_string(probs.rows()) + " rows vs " +
                                std::to_string(labels.size()) + " labels");
    const auto c = static_cast<int>(probs.cols());
    for (int l : labels)
        if (l < 0 || l >= c) throw PreconditionError("label index out of range");
    if (std::set<int>(labels.begin(), labels.end()).size() < 2)
        throw PreconditionError("OVO AUC needs at least two classes present");

    double total = 0.0;
    int pairs = 0;
    for (int i = 0; i < c; ++i)
        for (int j = i + 1; j < c; ++j) {
            std::vector<double> s_i, s_j;
            std::vector<bool> is_i;
            bool has_i = false, has_j = false;
            for (std::size_t r = 0; r < labels.size(); ++r) {
                if (labels[r] != i && labels[r] != j) continue;
                const double pi = probs(static_cast<Eigen::Index>(r), i);
                const double pj = probs(static_cast<Eigen::Index>(r), j);
                const double denom = pi + pj;
                s_i.push_back(denom > 0.0 ? pi / denom : 0.5);
                s_j.push_back(denom > 0.0 ? pj / denom : 0.5);
                is_i.push_back(labels[r] == i);
                (labels[r] == i ? has_i : has_j) = true;
            }
            if (!has_i || !has_j) {
                emit_warning("classifier", "OVO pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                               ") skipped: one class has no samples");
                continue;
            }
            std::vector<bool> is_j(is_i.size());
            for (std::size_t k = 0; k < is_i.size(); ++k) is_j[k] = !is_i[k];
            total += 0.5 * (roc_auc_binary(s_i, is_i) + roc_auc_binary(s_j, is_j));
            ++pairs;
        }
    if (pairs == 0) throw PreconditionError("every OVO pair was skipped");
    return total / pairs;
}

}  // namespace normpipe::classifier
