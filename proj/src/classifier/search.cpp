#include "normpipe/classifier.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

namespace normpipe::classifier {
namespace {

// Row indices per class, in a seeded shuffle.
std::map<Category, std::vector<std::size_t>> shuffled_by_class(const std::vector<Category>& labels,
                                                               std::uint64_t seed) {
    std::map<Category, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::mt19937_64 rng(seed);
    for (auto& [cls, rows] : by_class) std::shuffle(rows.begin(), rows.end(), rng);
    return by_class;
}

}  // namespace

std::vector<int> stratified_folds(const std::vector<Category>& labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw PreconditionError("need at least 2 folds");
    auto by_class = shuffled_by_class(labels, seed);
    for (const auto& [cls, rows] : by_class)
        if (rows.size() < static_cast<std::size_t>(folds))
            throw PreconditionError("class " + std::string(to_string(cls)) + " has " + std::to_string(rows.size()) +
                                    " members, fewer than " + std::to_string(folds) + " folds");
    std::vector<int> fold(labels.size(), 0);
    // Continue the round-robin across classes so fold sizes stay balanced too.
    int next = 0;
    for (const auto& [cls, rows] : by_class)
        for (std::size_t row : rows) {
            fold[row] = next;
            next = (next + 1) % folds;
        }
    return fold;
}

Split stratified_split(const std::vector<Category>& labels, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw PreconditionError("test_fraction must lie in (0, 1)");
    Split out;
    for (const auto& [cls, rows] : shuffled_by_class(labels, seed)) {
        if (rows.size() < 2)
            throw PreconditionError("class " + std::string(to_string(cls)) + " needs at least 2 members to split");
        auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
        n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
        out.test.insert(out.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.train.insert(out.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

LabeledEmbeddingSet subset(const LabeledEmbeddingSet& set, const std::vector<std::size_t>& rows) {
    LabeledEmbeddingSet out;
    out.set_label = set.set_label;
    out.vectors.resize(static_cast<Eigen::Index>(rows.size()), set.vectors.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.vectors.row(static_cast<Eigen::Index>(k)) = set.vectors.row(static_cast<Eigen::Index>(rows[k]));
        out.ids.push_back(set.ids[rows[k]]);
        out.labels.push_back(set.labels[rows[k]]);
    }
    return out;
}

TuneResult tune(const LabeledEmbeddingSet& train, int trials, int folds, std::uint64_t seed,
                const FitOptions& options) {
    if (trials < 1) throw PreconditionError("tune needs at least one trial");
    train.validate();
    const std::vector<int> fold = stratified_folds(train.labels, folds, seed);

    std::vector<LabeledEmbeddingSet> fold_train, fold_test;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
        fold_train.push_back(subset(train, tr));
        fold_test.push_back(subset(train, te));
    }

    std::mt19937_64 rng(seed ^ 0x5eed5eedULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TuneResult best;
    best.cv_auc = -1.0;
    best.trials = trials;
    for (int t = 0; t < trials; ++t) {
        const double alpha = unit(rng);
        const double lambda = std::pow(10.0, -5.0 + 7.0 * unit(rng));
        double sum = 0.0;
        for (int f = 0; f < folds; ++f) {
            const ElasticNetModel m = fit_elastic_net(fold_train[static_cast<std::size_t>(f)], alpha, lambda, seed, options);
            const auto& test = fold_test[static_cast<std::size_t>(f)];
            sum += roc_auc_ovo_macro(predict_proba(m, test.vectors), class_indices(m, test.labels));
        }
        const double score = sum / folds;
        if (score > best.cv_auc) {
            best.alpha = alpha;
            best.lambda = lambda;
            best.cv_auc = score;
        }
    }
    return best;
}

TransferResult transfer_matrix(const std::vector<LabeledEmbeddingSet>& sets, const TransferOptions& options) {
    if (sets.size() < 2) throw PreconditionError("transfer matrix needs at least two sets");
    if (options.seeds.empty()) throw PreconditionError("transfer matrix needs at least one seed");
    for (const auto& s : sets) s.validate();
    const Eigen::Index dim = sets.front().vectors.cols();

    std::vector<std::unordered_map<std::string, std::size_t>> index(sets.size());
    for (std::size_t s = 0; s < sets.size(); ++s) {
        if (sets[s].vectors.cols() != dim)
            throw DataError("set '" + sets[s].set_label + "' has dimension " + std::to_string(sets[s].vectors.cols()) +
                            ", expected " + std::to_string(dim));
        for (std::size_t i = 0; i < sets[s].ids.size(); ++i) index[s][sets[s].ids[i]] = i;
    }
    for (std::size_t s = 1; s < sets.size(); ++s) {
        std::vector<std::string> missing;
        for (const std::string& id : sets[0].ids)
            if (!index[s].contains(id)) missing.push_back(sets[0].set_label + ":" + id + " absent from " + sets[s].set_label);
        for (const std::string& id : sets[s].ids)
            if (!index[0].contains(id)) missing.push_back(sets[s].set_label + ":" + id + " absent from " + sets[0].set_label);
        if (!missing.empty()) {
            std::string msg = "sets are not aligned by id: ";
            for (std::size_t k = 0; k < missing.size(); ++k) msg += (k ? ", " : "") + missing[k];
            throw DataError(msg);
        }
    }

    TransferResult result;
    result.options = options;
    std::vector<std::vector<std::vector<double>>> aucs(sets.size(), std::vector<std::vector<double>>(sets.size()));
    for (std::size_t tr = 0; tr < sets.size(); ++tr) {
        const LabeledEmbeddingSet& train_set = sets[tr];
        for (std::uint64_t seed : options.seeds) {
            const Split split = stratified_split(train_set.labels, options.test_fraction, seed);
            const LabeledEmbeddingSet train = subset(train_set, split.train);
            const TuneResult tuned = tune(train, options.trials, options.folds, seed, options.fit);
            result.tuned[train_set.set_label].push_back(tuned);
            const ElasticNetModel model = fit_elastic_net(train, tuned.alpha, tuned.lambda, seed, options.fit);

            for (std::size_t te = 0; te < sets.size(); ++te) {
                std::vector<std::size_t> rows;
                for (std::size_t i : split.test) rows.push_back(index[te].at(train_set.ids[i]));
                const LabeledEmbeddingSet test = subset(sets[te], rows);
                aucs[tr][te].push_back(
                    roc_auc_ovo_macro(predict_proba(model, test.vectors), class_indices(model, test.labels)));
            }
        }
    }
    for (std::size_t tr = 0; tr < sets.size(); ++tr)
        for (std::size_t te = 0; te < sets.size(); ++te) {
            const auto q = quartiles(aucs[tr][te]);
            result.cells.push_back({sets[tr].set_label, sets[te].set_label, q.median, q.q25, q.q75,
                                    static_cast<int>(aucs[tr][te].size()), aucs[tr][te]});
        }
    return result;
}

std::string transfer_csv(const TransferResult& result) {
    std::string out = "train_set,test_set,median,q25,q75,n_seeds\n";
    for (const TransferCell& c : result.cells)
        out += fmt::format("{},{},{:.4f},{:.4f},{:.4f},{}\n", csv_field(c.train_set), csv_field(c.test_set),
                           c.auc_median, c.auc_q25, c.auc_q75, c.n_seeds);
    return out;
}

nlohmann::ordered_json transfer_metadata(const TransferResult& result) {
    nlohmann::ordered_json j;
    j["metric"] = "macro one-vs-one ROC AUC (both directions averaged per pair, midrank ties)";
    j["quantiles"] = "linear interpolation between order statistics";
    j["split"] = fmt::format("stratified {}/{} train/test, redrawn for every seed, aligned by record id",
                             static_cast<int>(std::lround(100 * (1 - result.options.test_fraction))),
                             static_cast<int>(std::lround(100 * result.options.test_fraction)));
    j["tuning"] = fmt::format("random search, {} trials, stratified {}-fold CV on the training rows of each seed",
                              result.options.trials, result.options.folds);
    j["seeds"] = result.options.seeds;
    nlohmann::ordered_json tuned = nlohmann::ordered_json::object();
    for (const auto& [label, runs] : result.tuned) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < runs.size(); ++k)
            arr.push_back({{"seed", result.options.seeds[k]},
                           {"l1_ratio", runs[k].alpha},
                           {"lambda", runs[k].lambda},
                           {"cv_auc", runs[k].cv_auc}});
        tuned[label] = arr;
    }
    j["tuned"] = tuned;
    return j;
}

}  // namespace normpipe::classifier
