#include "abtt/postprocess.hpp"

#include "abtt/serialize.hpp"
#include "abtt/synth.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace abtt;

namespace {

EmbeddingSet shifted_random_set(Index n, Index d, std::uint64_t seed, double mu_scale = 1.0) {
    Rng rng(seed);
    Vector mu(d);
    for (Index j = 0; j < d; ++j) mu(j) = mu_scale * rng.normal();
    Matrix m(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) m(i, j) = mu(j) + rng.normal();
    std::vector<std::string> words;
    for (Index i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
    return EmbeddingSet::from_rows(words, m);
}

}  // namespace

TEST_CASE("default null dimension follows the d/100 rule") {
    CHECK(default_null_dimension(300) == 3);
    CHECK(default_null_dimension(200) == 2);
    CHECK(default_null_dimension(50) == 1);
    CHECK(default_null_dimension(1) == 1);
    CHECK(default_null_dimension(1000) == 10);
}

TEST_CASE("fit with the default D picks d/100 components") {
    for (Index d : {300, 200, 50}) {
        EmbeddingSet set = shifted_random_set(d == 300 ? 60 : 40, d, 7);
        PostprocessModel model = fit(set, std::nullopt, Mode::strict, 0);
        CHECK(model.null_dim() == default_null_dimension(d));
        CHECK(model.dim() == d);
    }
}

TEST_CASE("literal and strict coincide on zero-mean input") {
    EmbeddingSet set = shifted_random_set(400, 12, 3, 0.0);
    EmbeddingSet centered = center(set, compute_mean(set));  // exactly zero mean
    PostprocessModel literal = fit(centered, 2, Mode::literal, 1);
    PostprocessModel strict = fit(centered, 2, Mode::strict, 1);
    EmbeddingSet a = transform(literal, centered);
    EmbeddingSet b = transform(strict, centered);
    CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("strict mode nulls every fitted direction") {
    EmbeddingSet set = shifted_random_set(500, 20, 11);
    PostprocessModel model = fit(set, 3, Mode::strict, 0);
    EmbeddingSet processed = transform(model, set);
    Eigen::MatrixXd projections = processed.matrix * model.components.transpose();
    for (Index w = 0; w < processed.size(); ++w) {
        double norm = set.matrix.row(w).norm();
        for (Index j = 0; j < 3; ++j)
            CHECK(std::abs(projections(w, j)) < 1e-9 * std::max(1.0, norm));
    }
}

TEST_CASE("literal mode leaves the constant projection -u.mu") {
    // Expanding u_j . [(v - mu) - sum_i (u_i . v) u_i] with orthonormal u gives
    // -u_j . mu for every word; checked numerically on random instances.
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        EmbeddingSet set = shifted_random_set(300, 16, seed);
        PostprocessModel model = fit(set, 3, Mode::literal, 0);
        EmbeddingSet processed = transform(model, set);
        Eigen::MatrixXd projections = processed.matrix * model.components.transpose();
        Vector expected = -(model.components * model.mu);
        for (Index w = 0; w < processed.size(); ++w)
            for (Index j = 0; j < 3; ++j)
                CHECK(std::abs(projections(w, j) - expected(j)) < 1e-9);

        // constant-projection invariant: variance across words is tiny
        double avg_sq = set.matrix.rowwise().squaredNorm().mean();
        for (Index j = 0; j < 3; ++j) {
            double mean = projections.col(j).mean();
            double var = (projections.col(j).array() - mean).square().mean();
            CHECK(var < 1e-16 * avg_sq);
        }
    }
}

TEST_CASE("strict mode removes energy and shifts the spectrum") {
    EmbeddingSet set = shifted_random_set(600, 25, 23);
    const Index D = 4;
    PostprocessModel model = fit(set, D, Mode::strict, 0);
    EmbeddingSet processed = transform(model, set);

    CHECK(processed.matrix.squaredNorm() <= set.matrix.squaredNorm());

    // Leading raw variance of the processed set equals the (D+1)-th raw
    // variance of the original centered set. (The sum-normalized ratios have a
    // different denominator after nulling, so the comparison is on raw
    // variances.)
    Spectrum original = full_spectrum_detail(center(set, compute_mean(set)));
    Spectrum after = full_spectrum_detail(center(processed, compute_mean(processed)));
    double expected = original.variances[static_cast<std::size_t>(D)];
    CHECK(std::abs(after.variances[0] - expected) <= 1e-6 * expected);
}

TEST_CASE("strict output is idempotent under re-fitting") {
    EmbeddingSet set = shifted_random_set(500, 20, 31);
    PostprocessModel model = fit(set, 3, Mode::strict, 0);
    EmbeddingSet processed = transform(model, set);
    double avg_norm = processed.matrix.rowwise().norm().mean();
    CHECK(compute_mean(processed).norm() < 1e-9 * std::max(1.0, avg_norm));
}

TEST_CASE("D = 0 means mean removal only") {
    EmbeddingSet set = shifted_random_set(200, 10, 5);
    PostprocessModel model = fit(set, 0, Mode::strict, 0);
    CHECK(model.null_dim() == 0);
    EmbeddingSet processed = transform(model, set);
    EmbeddingSet centered = center(set, compute_mean(set));
    CHECK((processed.matrix - centered.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transform preserves vocabulary and row order") {
    EmbeddingSet set = shifted_random_set(50, 8, 13);
    EmbeddingSet processed = postprocess(set, 2, Mode::strict, 0);
    CHECK(processed.words == set.words);
    CHECK(processed.dim() == set.dim());
}

TEST_CASE("transform rejects dimension mismatches") {
    EmbeddingSet set = shifted_random_set(50, 8, 13);
    EmbeddingSet other = shifted_random_set(50, 9, 13);
    PostprocessModel model = fit(set, 2, Mode::strict, 0);
    CHECK_THROWS_AS(transform(model, other), Error);
}

TEST_CASE("sweep is deterministic and hits D = 0") {
    EmbeddingSet set = shifted_random_set(300, 12, 17);
    auto evaluator = [](const EmbeddingSet& processed) {
        return processed.matrix.squaredNorm();  // any deterministic functional
    };
    auto a = sweep_null_dimensions(set, {0, 1, 2}, Mode::strict, 0, evaluator);
    auto b = sweep_null_dimensions(set, {0, 1, 2}, Mode::strict, 0, evaluator);
    REQUIRE(a.size() == 3);
    CHECK(a[0].null_d == 0);
    CHECK(a[0].score == evaluator(center(set, compute_mean(set))));
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].score == b[i].score);
        CHECK(a[i].null_d == b[i].null_d);
    }
}

TEST_CASE("spectrum flatness picks out the planted null depth") {
    SynthSpec spec;
    spec.vocab = 20000;
    spec.dim = 50;
    spec.d_star = 3;
    spec.alpha_bound = 3.0;
    spec.mu_scale = 0.3;
    spec.seed = 5;
    SynthResult synth = generate(spec);

    std::vector<Index> candidates = {1, 2, 3, 4, 5, 6, 7, 8};
    auto rows = sweep_null_dimensions(synth.embeddings, candidates, Mode::strict, 0,
                                      [](const EmbeddingSet& s) { return spectrum_flatness(s); });
    // smallest D whose residual spectrum is flat (max/min < 1.3) is exactly D*
    Index first_flat = -1;
    for (const auto& row : rows) {
        if (row.score < 1.3) {
            first_flat = row.null_d;
            break;
        }
    }
    CHECK(first_flat == 3);
}

TEST_CASE("postprocess model round-trips through JSON") {
    EmbeddingSet set = shifted_random_set(120, 9, 19);
    PostprocessModel model = fit(set, 2, Mode::strict, 3);
    Json j = to_json(model);
    PostprocessModel back = model_from_json(j);
    CHECK(back.mode == model.mode);
    CHECK((back.mu - model.mu).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.components - model.components).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.variance_ratios == model.variance_ratios);

    PostprocessModel mean_only = fit(set, 0, Mode::literal, 0);
    PostprocessModel mean_back = model_from_json(to_json(mean_only));
    CHECK(mean_back.null_dim() == 0);
    CHECK(mean_back.dim() == set.dim());
}
