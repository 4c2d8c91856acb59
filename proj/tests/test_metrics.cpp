#include "abtt/metrics.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace abtt;

namespace {
Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}
}  // namespace

TEST_CASE("cosine on analytic cases") {
    CHECK(cosine(vec2(1, 0), vec2(0, 1)) == 0.0);
    Vector v = vec2(0.3, -1.2);
    CHECK(std::abs(cosine(v, 3.0 * v) - 1.0) < 1e-12);
    CHECK(std::abs(cosine(vec2(1, 0), vec2(1, 1)) - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(cosine(vec2(1, 0), vec2(1, 1)) - 0.70711) < 1e-5);
}

TEST_CASE("cosine rejects zero vectors; try_cosine reports them") {
    CHECK_FALSE(try_cosine(vec2(0, 0), vec2(1, 1)).has_value());
    CHECK_THROWS_AS(cosine(vec2(0, 0), vec2(1, 1)), NumericalError);
}

TEST_CASE("cosine is scale invariant") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        Vector a(5), b(5);
        for (int i = 0; i < 5; ++i) {
            a(i) = rng.normal();
            b(i) = rng.normal();
        }
        double alpha = std::exp(rng.uniform(-3, 3));
        double beta = std::exp(rng.uniform(-3, 3));
        CHECK(std::abs(cosine(a, b) - cosine((alpha * a).eval(), (beta * b).eval())) < 1e-12);
    }
}

TEST_CASE("spearman on monotone and reversed data") {
    CHECK(spearman({10, 20, 30}, {1, 2, 3}) == 1.0);
    CHECK(spearman({30, 20, 10}, {1, 2, 3}) == -1.0);
}

TEST_CASE("spearman matches the rank-difference oracle") {
    std::vector<double> gold = {1, 2, 3, 4};
    std::vector<double> sys = {2, 1, 4, 3};
    double expected = oracles::spearman_difference_formula(sys, gold);
    CHECK(expected == 0.6);  // 1 - 6*4/(4*15)
    CHECK(std::abs(spearman(sys, gold) - 0.6) < 1e-12);
}

TEST_CASE("spearman uses fractional ranks for ties") {
    auto ranks = fractional_ranks({1.0, 1.0, 2.0});
    CHECK(ranks[0] == 1.5);
    CHECK(ranks[1] == 1.5);
    CHECK(ranks[2] == 3.0);
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x(30), y(30), y_warped(30);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
            y_warped[i] = std::exp(2.0 * y[i]) + 5.0;  // strictly increasing in y
        }
        CHECK(std::abs(spearman(x, y) - spearman(x, y_warped)) < 1e-12);
    }
}

TEST_CASE("spearman and pearson reject degenerate inputs") {
    CHECK_THROWS_AS(spearman({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), NumericalError);
    CHECK_THROWS_AS(pearson({2.0, 2.0}, {1.0, 3.0}), NumericalError);
    CHECK_THROWS_AS(spearman({1.0}, {1.0}), NumericalError);
}

TEST_CASE("pearson on analytic cases") {
    std::vector<double> gold = {0.5, 1.0, 7.0, -2.0};
    std::vector<double> affine(gold.size()), negated(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
        affine[i] = 2.0 * gold[i] + 1.0;
        negated[i] = -gold[i];
    }
    CHECK(std::abs(pearson(affine, gold) - 1.0) < 1e-12);
    CHECK(std::abs(pearson(negated, gold) + 1.0) < 1e-12);

    std::vector<double> g = {0, 1, 2};
    std::vector<double> s = {0, 1, 4};
    double expected = oracles::pearson_direct_formula(s, g);
    CHECK(std::abs(expected - 0.9608) < 1e-4);
    CHECK(std::abs(pearson(s, g) - expected) < 1e-12);
}

TEST_CASE("purity on analytic cases") {
    // identical partition (up to labels)
    CHECK(purity({0, 0, 1, 1, 2}, {4, 4, 0, 0, 1}) == 1.0);
    // one cluster, two equal classes of size 5
    CHECK(purity(std::vector<int>(10, 0), {0, 0, 0, 0, 0, 1, 1, 1, 1, 1}) == 0.5);
    // clusters {a,b,c},{d,e} against classes {a,b,d},{c,e}: (2+1)/5
    CHECK(purity({0, 0, 0, 1, 1}, {0, 0, 1, 0, 1}) == 0.6);
}

TEST_CASE("purity is relabel-invariant and bounded below by the majority class") {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        std::size_t n = 20;
        std::vector<int> clusters(n), gold(n), relabeled(n);
        std::vector<int> perm = {2, 0, 3, 1};
        for (std::size_t i = 0; i < n; ++i) {
            clusters[i] = static_cast<int>(rng.below(4));
            gold[i] = static_cast<int>(rng.below(3));
            relabeled[i] = perm[static_cast<std::size_t>(clusters[i])];
        }
        CHECK(purity(clusters, gold) == purity(relabeled, gold));

        std::vector<std::size_t> class_sizes(3, 0);
        for (int g : gold) ++class_sizes[static_cast<std::size_t>(g)];
        double majority = static_cast<double>(*std::max_element(class_sizes.begin(),
                                                                class_sizes.end())) /
                          static_cast<double>(n);
        CHECK(purity(clusters, gold) >= majority - 1e-12);
    }
}

TEST_CASE("kmeans separates two far pairs") {
    Matrix points(4, 2);
    points << 0, 0, 0.1, 0, 100, 100, 100.1, 100;
    KMeansResult result = kmeans(points, 2, 0);
    CHECK(result.clustering.assignment[0] == result.clustering.assignment[1]);
    CHECK(result.clustering.assignment[2] == result.clustering.assignment[3]);
    CHECK(result.clustering.assignment[0] != result.clustering.assignment[2]);
}

TEST_CASE("kmeans with k = n puts every point alone") {
    Matrix points(5, 3);
    Rng rng(2);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 3; ++j) points(i, j) = rng.normal();
    KMeansResult result = kmeans(points, 5, 1);
    CHECK(result.wcss < 1e-18);
    std::vector<int> sorted = result.clustering.assignment;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("kmeans matches the exhaustive oracle on separated micro-instances") {
    Rng rng(17);
    Matrix points(12, 3);
    Eigen::MatrixXd centers(3, 3);
    centers << 0, 0, 0, 10, 0, 0, 0, 10, 0;  // separation 10 sigma
    for (Index i = 0; i < 12; ++i)
        for (Index j = 0; j < 3; ++j) points(i, j) = centers(i % 3, j) + rng.normal();
    KMeansResult result = kmeans(points, 3, 0);
    double oracle = oracles::exhaustive_best_wcss(points, 3);
    CHECK(std::abs(result.wcss - oracle) < 1e-9);
}

TEST_CASE("kmeans at n=30 agrees with a 100-restart reference run") {
    Rng rng(23);
    Matrix points(30, 4);
    for (Index i = 0; i < 30; ++i)
        for (Index j = 0; j < 4; ++j) points(i, j) = 10.0 * static_cast<double>(i % 3) + rng.normal();
    KMeansResult standard = kmeans(points, 3, 0, 10);
    KMeansResult reference = kmeans(points, 3, 0, 100);
    CHECK(std::abs(standard.wcss - reference.wcss) < 1e-9);
}

TEST_CASE("kmeans WCSS never increases across iterations") {
    Rng rng(31);
    for (int t = 0; t < 25; ++t) {
        Index n = 5 + static_cast<Index>(rng.below(30));
        Index d = 2 + static_cast<Index>(rng.below(4));
        int k = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(6, static_cast<std::uint64_t>(n))));
        Matrix points(n, d);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < d; ++j) points(i, j) = rng.normal();
        KMeansDiag diag;
        kmeans(points, k, static_cast<std::uint64_t>(t), 4, 300, &diag);
        for (const auto& trace : diag.wcss_per_iteration) {
            REQUIRE_FALSE(trace.empty());
            for (std::size_t i = 1; i < trace.size(); ++i)
                CHECK(trace[i] <= trace[i - 1] + 1e-9 * (1.0 + trace[i - 1]));
        }
    }
}

TEST_CASE("kmeans is deterministic for a fixed seed and rejects k > n") {
    Matrix points(6, 2);
    Rng rng(41);
    for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 2; ++j) points(i, j) = rng.normal();
    KMeansResult a = kmeans(points, 3, 9);
    KMeansResult b = kmeans(points, 3, 9);
    CHECK(a.clustering.assignment == b.clustering.assignment);
    CHECK(a.wcss == b.wcss);
    CHECK_THROWS_AS(kmeans(points, 7, 0), Error);
}

TEST_CASE("kmeans survives duplicate points needing empty-cluster repair") {
    Matrix points(8, 2);
    for (Index i = 0; i < 6; ++i) points.row(i) << 1.0, 1.0;  // six identical points
    points.row(6) << 5.0, 5.0;
    points.row(7) << 5.1, 5.0;
    KMeansResult result = kmeans(points, 3, 0);
    CHECK(result.clustering.assignment.size() == 8);
    CHECK(result.wcss >= 0.0);
}
