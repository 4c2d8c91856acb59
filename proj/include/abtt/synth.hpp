// Synthetic embedding generator with known planted structure:
//
//   v(w) = mu + sum_{i<=D*} alpha_i(w) u_i + residual(w)
//
// with an orthonormal random frame u, bounded coefficients |alpha_i| <= A, and
// spherically symmetric residuals. Optional plants: a monotone link between
// alpha_1 and a Zipfian frequency table, clustered residuals for a designated
// word block, and parallelogram quadruples in residual space. The planted
// ground truth doubles as the oracle for evaluation tests: gold datasets are
// derived from the clean residuals, so removing the planted contamination must
// move system scores toward the gold.
#pragma once

#include "abtt/common.hpp"
#include "abtt/embedding.hpp"
#include "abtt/evals.hpp"
#include "abtt/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace abtt {

enum class FreqLink { none, monotone };

struct ClusterPlant {
    int n_categories = 5;
    double within_scale = 0.4;
    double between_scale = 1.0;
    Index n_words = 400;  // words [0, n_words) carry category structure
};

struct AnalogyPlant {
    Index n_quadruples = 200;
    double alignment = 0.85;  // cosine between the planted w4 residual and v2 - v1 + v3
};

struct SynthSpec {
    Index vocab = 20000;
    Index dim = 50;
    Index d_star = 3;        // planted dominant directions
    double mu_scale = 0.3;   // ||mu|| as a fraction of the expected residual norm
    double alpha_bound = 2.0;  // keeps the default inside the D* A^2 <= d/4 regime
    FreqLink freq_link = FreqLink::none;
    std::optional<ClusterPlant> cluster_plant;
    std::optional<AnalogyPlant> analogy_plant;
    std::uint64_t seed = 0;

    void validate() const {
        if (vocab < 1 || dim < 1) throw Error("SynthSpec: vocab and dim must be positive");
        if (d_star < 0 || d_star >= dim) throw Error("SynthSpec: need 0 <= D* < d");
        if (mu_scale < 0.0) throw Error("SynthSpec: mu_scale must be non-negative");
        if (alpha_bound < 0.0) throw Error("SynthSpec: alpha_bound must be non-negative");
        if (freq_link == FreqLink::monotone && d_star < 1)
            throw Error("SynthSpec: freq_link needs at least one planted direction");
        Index reserved = 0;
        if (cluster_plant) {
            if (cluster_plant->n_categories < 1 || cluster_plant->n_words < cluster_plant->n_categories)
                throw Error("SynthSpec: cluster plant needs n_words >= n_categories >= 1");
            reserved += cluster_plant->n_words;
        }
        if (analogy_plant) {
            if (analogy_plant->n_quadruples < 1)
                throw Error("SynthSpec: analogy plant needs at least one quadruple");
            if (analogy_plant->alignment <= 0.0 || analogy_plant->alignment > 1.0)
                throw Error("SynthSpec: analogy alignment must lie in (0, 1]");
            reserved += 4 * analogy_plant->n_quadruples;
        }
        if (reserved > vocab) throw Error("SynthSpec: plants reserve more words than the vocabulary");
    }
};

struct SynthTruth {
    Vector mu;                    // planted mean
    Matrix components;            // D* x d, orthonormal rows
    Matrix alpha;                 // |V| x D*
    EmbeddingSet residuals;       // clean isotropic part, same tokens
    std::vector<int> labels;      // category per word, -1 when unlabeled
    std::optional<FrequencyTable> freqs;
    std::vector<std::array<Index, 4>> quadruples;
};

struct SynthResult {
    EmbeddingSet embeddings;
    SynthTruth truth;
};

// E||residual|| for a standard normal d-vector: sqrt(2) Gamma((d+1)/2) / Gamma(d/2).
inline double expected_residual_norm(Index d) {
    return std::sqrt(2.0) *
           std::exp(std::lgamma(0.5 * (static_cast<double>(d) + 1.0)) -
                    std::lgamma(0.5 * static_cast<double>(d)));
}

inline SynthResult generate(const SynthSpec& spec) {
    spec.validate();
    const Index n = spec.vocab;
    const Index d = spec.dim;
    const Index ds = spec.d_star;
    const double bound_budget = static_cast<double>(ds) * spec.alpha_bound * spec.alpha_bound;
    if (bound_budget > static_cast<double>(d) / 4.0) {
        std::fprintf(stderr,
                     "warning: synth spec outside the bounded-energy regime: D* A^2 = %.3g "
                     "exceeds d/4 = %.3g\n",
                     bound_budget, static_cast<double>(d) / 4.0);
    }

    Rng rng(spec.seed);
    SynthTruth truth;

    // Planted orthonormal frame.
    truth.components.resize(ds, d);
    if (ds > 0) {
        Eigen::MatrixXd raw(d, ds);
        for (Index j = 0; j < ds; ++j)
            for (Index i = 0; i < d; ++i) raw(i, j) = rng.normal();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, ds);
        truth.components = q.transpose();
    }

    // Planted mean.
    truth.mu = Vector::Zero(d);
    if (spec.mu_scale > 0.0) {
        Vector direction(d);
        for (Index i = 0; i < d; ++i) direction(i) = rng.normal();
        double norm = direction.norm();
        if (norm == 0.0) norm = 1.0;
        truth.mu = (spec.mu_scale * expected_residual_norm(d) / norm) * direction;
    }

    // Zipfian frequency table (exponent 1) when the monotone link is requested.
    std::vector<std::string> words(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "w%06lld", static_cast<long long>(i));
        words[static_cast<std::size_t>(i)] = buf;
    }
    if (spec.freq_link == FreqLink::monotone) {
        FrequencyTable table;
        for (Index i = 0; i < n; ++i) {
            auto count = static_cast<std::uint64_t>(
                std::llround(1e12 / static_cast<double>(i + 1)));
            if (count == 0) count = 1;
            table.counts[words[static_cast<std::size_t>(i)]] = count;
            table.total += count;
        }
        truth.freqs = std::move(table);
    }

    // Coefficients: uniform in [-A, A]; alpha_1 rides the frequency rank when
    // linked (word i has ascending-probability rank n - i).
    truth.alpha.resize(n, ds);
    for (Index w = 0; w < n; ++w)
        for (Index j = 0; j < ds; ++j)
            truth.alpha(w, j) = rng.uniform(-spec.alpha_bound, spec.alpha_bound);
    if (spec.freq_link == FreqLink::monotone) {
        for (Index w = 0; w < n; ++w) {
            double rank = static_cast<double>(n - w);
            truth.alpha(w, 0) = spec.alpha_bound * (2.0 * rank / static_cast<double>(n) - 1.0);
        }
    }

    // Residuals: isotropic, except the cluster block which gets
    // between * center(category) + within * noise.
    truth.labels.assign(static_cast<std::size_t>(n), -1);
    Matrix residuals(n, d);
    Matrix centers;
    Index cluster_words = 0;
    if (spec.cluster_plant) {
        const auto& plant = *spec.cluster_plant;
        cluster_words = plant.n_words;
        centers.resize(plant.n_categories, d);
        for (Index c = 0; c < centers.rows(); ++c)
            for (Index j = 0; j < d; ++j) centers(c, j) = rng.normal();
    }
    for (Index w = 0; w < n; ++w) {
        for (Index j = 0; j < d; ++j) residuals(w, j) = rng.normal();
        if (w < cluster_words) {
            const auto& plant = *spec.cluster_plant;
            int label = static_cast<int>(w % plant.n_categories);
            truth.labels[static_cast<std::size_t>(w)] = label;
            residuals.row(w) =
                plant.between_scale * centers.row(label) + plant.within_scale * residuals.row(w);
        }
    }

    // Parallelogram quadruples: w4's residual is rebuilt to have cosine
    // `alignment` with v2 - v1 + v3, keeping its original norm.
    if (spec.analogy_plant) {
        const auto& plant = *spec.analogy_plant;
        for (Index g = 0; g < plant.n_quadruples; ++g) {
            Index base = cluster_words + 4 * g;
            std::array<Index, 4> quad = {base, base + 1, base + 2, base + 3};
            Vector combo = (residuals.row(quad[1]) - residuals.row(quad[0]) +
                            residuals.row(quad[2]))
                               .transpose();
            double combo_norm = combo.norm();
            if (combo_norm == 0.0) continue;  // degenerate draw; leave w4 untouched
            Vector unit = combo / combo_norm;
            Vector noise(d);
            for (Index j = 0; j < d; ++j) noise(j) = rng.normal();
            noise -= noise.dot(unit) * unit;
            double noise_norm = noise.norm();
            if (noise_norm == 0.0) noise_norm = 1.0;
            double keep_norm = residuals.row(quad[3]).norm();
            double a = plant.alignment;
            residuals.row(quad[3]) =
                (keep_norm * (a * unit + std::sqrt(std::max(0.0, 1.0 - a * a)) / noise_norm * noise))
                    .transpose();
            truth.quadruples.push_back(quad);
        }
    }

    Matrix contaminated = residuals;
    if (ds > 0) contaminated += truth.alpha * truth.components;
    contaminated.rowwise() += truth.mu.transpose();

    SynthResult result;
    result.truth = std::move(truth);
    result.truth.residuals = EmbeddingSet::from_rows(words, std::move(residuals));
    result.embeddings = EmbeddingSet::from_rows(std::move(words), std::move(contaminated));
    return result;
}

struct OracleOptions {
    Index n_sim_pairs = 500;
    double analogy_margin = 0.1;  // required cosine gap over the best distractor
    std::uint64_t seed = 1;       // for pair sampling and the clean k-means run
};

struct OracleDatasets {
    SimilarityDataset sim;
    std::optional<CategorizationDataset> categorization;
    std::optional<AnalogyDataset> analogy;
    // Reference scores of the clean residuals on the emitted gold datasets.
    double clean_sim_spearman_x100 = 0.0;
    std::optional<double> clean_cat_purity_x100;
    std::optional<double> clean_analogy_accuracy_x100;
};

// Derives gold-standard task datasets from the planted truth. Similarity gold
// comes from clean residual cosines; categories from the cluster plant;
// analogies from the planted quadruples, kept only when the clean target beats
// every distractor by the margin.
inline OracleDatasets oracle_eval(const SynthTruth& truth, const SynthSpec& spec,
                                  const OracleOptions& options = {}) {
    const EmbeddingSet& clean = truth.residuals;
    const Index n = clean.size();
    OracleDatasets out;

    Rng rng(Rng::derive(spec.seed, options.seed));
    out.sim.name = "synth-sim";
    for (Index i = 0; i < options.n_sim_pairs; ++i) {
        Index a = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
        Index b = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
        if (a == b) b = (b + 1) % n;
        double gold = cosine(clean.matrix.row(a).transpose(), clean.matrix.row(b).transpose());
        out.sim.items.push_back(
            {clean.words[static_cast<std::size_t>(a)], clean.words[static_cast<std::size_t>(b)], gold});
    }
    out.clean_sim_spearman_x100 = eval_similarity(clean, out.sim).score_x100;

    if (spec.cluster_plant) {
        CategorizationDataset cat;
        cat.name = "synth-cat";
        for (Index w = 0; w < n; ++w) {
            int label = truth.labels[static_cast<std::size_t>(w)];
            if (label < 0) continue;
            cat.items.push_back(
                {clean.words[static_cast<std::size_t>(w)], "c" + std::to_string(label)});
        }
        out.categorization = std::move(cat);
        out.clean_cat_purity_x100 =
            eval_categorization(clean, *out.categorization, options.seed).score_x100;
    }

    if (!truth.quadruples.empty()) {
        AnalogyDataset analogy;
        analogy.name = "synth-analogy";
        Vector norms = clean.matrix.rowwise().norm();
        std::size_t planted = 0;
        for (const auto& quad : truth.quadruples) {
            Vector query = (clean.matrix.row(quad[1]) - clean.matrix.row(quad[0]) +
                            clean.matrix.row(quad[2]))
                               .transpose();
            double qnorm = query.norm();
            if (qnorm == 0.0) continue;
            double target = -2.0, runner_up = -2.0;
            for (Index w = 0; w < n; ++w) {
                if (w == quad[0] || w == quad[1] || w == quad[2]) continue;
                if (norms(w) == 0.0) continue;
                double cos = clean.matrix.row(w).dot(query) / (norms(w) * qnorm);
                if (w == quad[3]) {
                    target = cos;
                    continue;
                }
                if (cos > runner_up) runner_up = cos;
            }
            if (target < runner_up + options.analogy_margin) continue;
            AnalogyDataset::Item item;
            item.w1 = clean.words[static_cast<std::size_t>(quad[0])];
            item.w2 = clean.words[static_cast<std::size_t>(quad[1])];
            item.w3 = clean.words[static_cast<std::size_t>(quad[2])];
            item.w4 = clean.words[static_cast<std::size_t>(quad[3])];
            item.section =
                planted % 2 == 0 ? AnalogySection::semantic : AnalogySection::syntactic;
            ++planted;
            analogy.items.push_back(std::move(item));
        }
        if (!analogy.items.empty()) {
            out.analogy = std::move(analogy);
            out.clean_analogy_accuracy_x100 = eval_analogy(clean, *out.analogy).score_x100;
        }
    }
    return out;
}

}  // namespace abtt
