#include "normpipe/embedlab.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace normpipe;
using namespace normpipe::embedlab;

namespace {

std::vector<EmbeddingRecord> gaussian_clusters(int per_cluster, int dim, double separation, std::uint64_t seed,
                                               std::vector<int>* labels = nullptr) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<EmbeddingRecord> out;
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < per_cluster; ++i) {
            EmbeddingRecord r;
            r.id = "c" + std::to_string(c) + "_" + std::to_string(i);
            r.vector.resize(static_cast<std::size_t>(dim));
            for (int k = 0; k < dim; ++k) r.vector[static_cast<std::size_t>(k)] = noise(rng) + (k == c ? separation : 0.0);
            r.meta.category = kAllCategories[c];
            out.push_back(std::move(r));
            if (labels) labels->push_back(c);
        }
    }
    return out;
}

Eigen::MatrixXd to_matrix(const std::vector<EmbeddingRecord>& recs) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(recs.size()), static_cast<Eigen::Index>(recs[0].vector.size()));
    for (std::size_t i = 0; i < recs.size(); ++i)
        for (std::size_t k = 0; k < recs[i].vector.size(); ++k)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = recs[i].vector[k];
    return x;
}

corpus::CorpusHandle one_text_corpus(const std::string& text) {
    return corpus::CorpusHandle("c", Source::Real,
                                {corpus::Transcript({"a", {}, {}, {}, Category::AD}, text, Source::Real)});
}

}  // namespace

TEST_SUITE("embedlab") {

TEST_CASE("affinities hit the target perplexity and form a distribution") {
    const auto recs = gaussian_clusters(10, 6, 4.0, 1);
    const Affinities a = compute_affinities(to_matrix(recs), 7.0);
    for (double perp : a.perplexities) CHECK(perp == doctest::Approx(7.0).epsilon(1e-6));
    CHECK(a.joint.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.joint.minCoeff() >= 0.0);
    CHECK(a.joint.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.joint - a.joint.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("KL gradient matches central finite differences") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(12, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const Eigen::MatrixXd p = compute_affinities(x, 3.0).joint;
    Eigen::MatrixXd y(12, 2);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = g(rng);

    const Eigen::MatrixXd analytic = kl_gradient(p, y);
    Eigen::MatrixXd numeric(12, 2);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        Eigen::MatrixXd yp = y, ym = y;
        yp.data()[i] += h;
        ym.data()[i] -= h;
        numeric.data()[i] = (kl_divergence(p, yp) - kl_divergence(p, ym)) / (2 * h);
    }
    const double rel = (analytic - numeric).norm() / numeric.norm();
    CHECK(rel < 1e-4);
}

TEST_CASE("three separated clusters stay separated in 2D") {
    std::vector<int> labels;
    const auto recs = gaussian_clusters(20, 16, 10.0, 2, &labels);
    TsneConfig cfg;
    cfg.perplexity = 10;
    cfg.seed = 3;
    const Projection2D proj = tsne_project(recs, cfg);
    Eigen::MatrixXd pts(60, 2);
    for (int i = 0; i < 60; ++i) {
        pts(i, 0) = proj.points[static_cast<std::size_t>(i)].x;
        pts(i, 1) = proj.points[static_cast<std::size_t>(i)].y;
    }
    CHECK(silhouette(pts, labels) > 0.3);
    CHECK(proj.kl_final <= proj.kl_initial);
    CHECK(proj.points[0].meta.category == Category::Control);
}

TEST_CASE("same seed gives the same projection") {
    const auto recs = gaussian_clusters(5, 4, 3.0, 9);
    TsneConfig cfg;
    cfg.perplexity = 4;
    cfg.iterations = 300;
    cfg.seed = 42;
    const Projection2D a = tsne_project(recs, cfg);
    const Projection2D b = tsne_project(recs, cfg);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].x == b.points[i].x);
        CHECK(a.points[i].y == b.points[i].y);
    }
    CHECK(a.kl_final == b.kl_final);
}

TEST_CASE("duplicate inputs land on the same spot") {
    auto recs = gaussian_clusters(5, 4, 6.0, 4);
    recs[1].vector = recs[0].vector;
    TsneConfig cfg;
    cfg.perplexity = 4;
    // The default step of 200 overshoots badly on 15 points and leaves the
    // layout too spread out for the duplicates' mutual pull to close the gap.
    cfg.learning_rate = 5;
    const Projection2D p = tsne_project(recs, cfg);
    CHECK(std::hypot(p.points[0].x - p.points[1].x, p.points[0].y - p.points[1].y) < 1e-3);
}

TEST_CASE("t-SNE preconditions") {
    TsneConfig cfg;
    cfg.perplexity = 3;
    CHECK_THROWS_AS(tsne_project(gaussian_clusters(3, 4, 1.0, 1), cfg), PreconditionError);  // n = 9
    cfg.perplexity = 4;
    CHECK_THROWS_AS(tsne_project(gaussian_clusters(4, 4, 1.0, 1), cfg), PreconditionError);  // 4 >= 12/3
    cfg.perplexity = 2.5;
    CHECK_THROWS_AS(tsne_project(gaussian_clusters(10, 4, 1.0, 1), cfg), PreconditionError);
    auto bad = gaussian_clusters(10, 4, 1.0, 1);
    bad[3].vector[0] = std::nan("");
    cfg.perplexity = 5;
    CHECK_THROWS_AS(tsne_project(bad, cfg), DataError);
}

TEST_CASE("silhouette hand case") {
    Eigen::MatrixXd pts(4, 2);
    pts << 0, 0, 0, 1, 10, 0, 10, 1;
    // a = 1, b = mean(10, sqrt(101)) for every point.
    const double b = (10.0 + std::sqrt(101.0)) / 2.0;
    CHECK(silhouette(pts, {0, 0, 1, 1}) == doctest::Approx((b - 1.0) / b));
}

TEST_CASE("projection CSV") {
    Projection2D p;
    RecordMeta m{Category::MCI, 70, Gender::Female, 25, "real"};
    p.points.push_back({1.5, -2.0, "p1", m});
    p.points.push_back({0.0, 0.0, "p,2", RecordMeta{}});
    CHECK(projection_csv(p) ==
          "x,y,id,category,age,gender,mmse,source\n"
          "1.500000,-2.000000,p1,MCI,70,female,25,real\n"
          "0.000000,0.000000,\"p,2\",,,,,\n");
}

TEST_CASE("frequency table basics") {
    const FrequencyTable t = frequency_table(one_text_corpus("cookie cookie sink"), {"cookie"}, 1);
    CHECK(t.tracked.at("cookie") == 2);
    CHECK(t.total_tokens == 3);
    REQUIRE(t.top.size() == 1);
    CHECK(t.top[0].first == "cookie");
}

TEST_CASE("stopwords leave tracked counts alone but drop out of the ranking") {
    const FrequencyTable t = frequency_table(one_text_corpus("the the the um um jar"), {"the", "jar"}, 5);
    CHECK(t.tracked.at("the") == 3);
    REQUIRE(t.top.size() == 1);
    CHECK(t.top[0].first == "jar");
    std::size_t sum = 0;
    for (const auto& [tok, n] : t.counts) sum += n;
    CHECK(sum == t.total_tokens);
}

TEST_CASE("top ranking breaks ties alphabetically") {
    const FrequencyTable t = frequency_table(one_text_corpus("sink jar boy jar sink"), {}, 3);
    REQUIRE(t.top.size() == 3);
    CHECK(t.top[0].first == "jar");
    CHECK(t.top[1].first == "sink");
    CHECK(t.top[2].first == "boy");
}

TEST_CASE("frequency comparison") {
    const auto tracked = std::vector<std::string>{"dish", "sink", "cookie"};
    const FrequencyTable a = frequency_table(one_text_corpus("dish sink sink"), tracked, 3);
    const FrequencyTable b = frequency_table(one_text_corpus("sink cookie sink cookie"), tracked, 3);
    const auto same = compare_frequencies(a, a);
    CHECK(same[0].ratio == doctest::Approx(1.0));
    const auto cmp = compare_frequencies(a, b);
    CHECK(cmp[0].term == "dish");
    CHECK(cmp[0].ratio == 0.0);
    CHECK(cmp[1].rate_a == doctest::Approx(1000.0 * 2 / 3));
    CHECK(cmp[1].rate_b == doctest::Approx(500.0));
    CHECK(cmp[1].ratio == doctest::Approx(0.75));
    CHECK(std::isinf(cmp[2].ratio));
    CHECK(format_ratio(cmp[2].ratio) == "inf");
    CHECK(format_ratio(0.75) == "0.750");
    const FrequencyTable c = frequency_table(one_text_corpus("dish"), {"dish"}, 1);
    CHECK_THROWS_AS(compare_frequencies(a, c), PreconditionError);
}

TEST_CASE("bundled stopwords include fillers") {
    const auto& sw = default_stopwords();
    CHECK(std::find(sw.begin(), sw.end(), "um") != sw.end());
    CHECK(std::find(sw.begin(), sw.end(), "the") != sw.end());
    CHECK(std::find(sw.begin(), sw.end(), "cookie") == sw.end());
}

}
