// Statistical and clustering primitives shared by the evaluators:
// cosine similarity, Spearman/Pearson correlation, k-means, purity.
#pragma once

#include "abtt/common.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace abtt {

// Cosine similarity; nullopt when either vector has zero norm.
inline std::optional<double> try_cosine(const Eigen::Ref<const Vector>& a,
                                        const Eigen::Ref<const Vector>& b) {
    double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return std::nullopt;
    return a.dot(b) / (na * nb);
}

inline double cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    auto c = try_cosine(a, b);
    if (!c) throw NumericalError("cosine undefined for a zero vector");
    return *c;
}

// Parallel (system, gold) score lists for correlation scoring.
struct ScoredPairs {
    std::vector<double> system;
    std::vector<double> gold;

    void validate() const {
        if (system.size() != gold.size()) throw Error("ScoredPairs: length mismatch");
        if (system.size() < 2) throw NumericalError("ScoredPairs: need at least 2 pairs");
        for (double v : system)
            if (!std::isfinite(v)) throw Error("ScoredPairs: non-finite system score");
        for (double v : gold)
            if (!std::isfinite(v)) throw Error("ScoredPairs: non-finite gold score");
    }
};

// Fractional (average) ranks, 1-based; ties share the mean of their positions.
inline std::vector<double> fractional_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw NumericalError("pearson: need n >= 2");
    std::size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw NumericalError("pearson: correlation undefined (zero variance)");
    return sxy / std::sqrt(sxx * syy);
}

inline double pearson(const ScoredPairs& pairs) {
    pairs.validate();
    return pearson(pairs.system, pairs.gold);
}

// Spearman: Pearson of the fractional-rank vectors.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw NumericalError("spearman: need n >= 2");
    return pearson(fractional_ranks(x), fractional_ranks(y));
}

inline double spearman(const ScoredPairs& pairs) {
    pairs.validate();
    return spearman(pairs.system, pairs.gold);
}

struct Clustering {
    std::vector<int> assignment;  // item -> cluster id in [0, k)
    int k = 0;
};

struct KMeansResult {
    Clustering clustering;
    double wcss = 0.0;
};

// Per-restart WCSS traces, filled when a diagnostics sink is passed to kmeans.
struct KMeansDiag {
    std::vector<std::vector<double>> wcss_per_iteration;
};

namespace detail {

inline double wcss_of(const Matrix& points, const Matrix& centroids,
                      const std::vector<int>& assignment) {
    double total = 0.0;
    for (Index i = 0; i < points.rows(); ++i)
        total += (points.row(i) - centroids.row(assignment[i])).squaredNorm();
    return total;
}

// Nearest centroid per point via ||p||^2 - 2 p.c + ||c||^2; first index wins ties.
inline void assign_nearest(const Matrix& points, const Matrix& centroids,
                           std::vector<int>& assignment) {
    Eigen::MatrixXd dots = points * centroids.transpose();  // n x k
    Eigen::VectorXd cnorm = centroids.rowwise().squaredNorm();
    for (Index i = 0; i < points.rows(); ++i) {
        int best = 0;
        double best_d = cnorm(0) - 2.0 * dots(i, 0);
        for (Index c = 1; c < centroids.rows(); ++c) {
            double d = cnorm(c) - 2.0 * dots(i, c);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        assignment[static_cast<std::size_t>(i)] = best;
    }
}

inline Matrix kmeanspp_seed(const Matrix& points, int k, Rng& rng) {
    Index n = points.rows();
    Matrix centroids(k, points.cols());
    centroids.row(0) = points.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
    std::vector<double> d2(static_cast<std::size_t>(n), 0.0);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < c; ++j)
                best = std::min(best, (points.row(i) - centroids.row(j)).squaredNorm());
            d2[static_cast<std::size_t>(i)] = best;
            total += best;
        }
        Index pick;
        if (total <= 0.0) {
            pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
        } else {
            double r = rng.uniform01() * total;
            pick = n - 1;
            double acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (r < acc) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.row(c) = points.row(pick);
    }
    return centroids;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. `restarts` independent runs with
// derived seeds (seed + restart index); the lowest within-cluster sum of
// squares wins. Stops when assignments stabilize or after max_iterations.
inline KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts = 10,
                           int max_iterations = 300, KMeansDiag* diag = nullptr) {
    Index n = points.rows();
    if (k < 1) throw Error("kmeans: k must be positive");
    if (static_cast<Index>(k) > n) throw Error("kmeans: k exceeds number of points");
    if (restarts < 1) restarts = 1;

    KMeansResult best;
    best.wcss = std::numeric_limits<double>::infinity();
    if (diag) diag->wcss_per_iteration.assign(static_cast<std::size_t>(restarts), {});

    std::vector<KMeansResult> results(static_cast<std::size_t>(restarts));
    auto run_one = [&](std::size_t r) {
        Rng rng(seed + static_cast<std::uint64_t>(r));
        Matrix centroids = detail::kmeanspp_seed(points, k, rng);
        std::vector<int> assignment(static_cast<std::size_t>(n), -1);
        std::vector<int> previous;
        double last_wcss = std::numeric_limits<double>::infinity();

        for (int iter = 0; iter < max_iterations; ++iter) {
            detail::assign_nearest(points, centroids, assignment);

            // Empty clusters grab the point currently farthest from its centroid.
            std::vector<Index> counts(static_cast<std::size_t>(k), 0);
            for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
            std::vector<char> taken(static_cast<std::size_t>(n), 0);
            for (int c = 0; c < k; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0) continue;
                Index far = -1;
                double far_d = -1.0;
                for (Index i = 0; i < n; ++i) {
                    if (taken[static_cast<std::size_t>(i)]) continue;
                    if (counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])] <= 1)
                        continue;
                    double d = (points.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)]))
                                   .squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                if (far < 0) continue;
                taken[static_cast<std::size_t>(far)] = 1;
                --counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(far)])];
                assignment[static_cast<std::size_t>(far)] = c;
                counts[static_cast<std::size_t>(c)] = 1;
            }

            // Centroid update.
            centroids.setZero();
            for (Index i = 0; i < n; ++i)
                centroids.row(assignment[static_cast<std::size_t>(i)]) += points.row(i);
            for (int c = 0; c < k; ++c)
                if (counts[static_cast<std::size_t>(c)] > 0)
                    centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);

            double wcss = detail::wcss_of(points, centroids, assignment);
            if (wcss > last_wcss + 1e-9 * (1.0 + last_wcss))
                throw NumericalError("kmeans: WCSS increased across an iteration");
            if (diag) diag->wcss_per_iteration[r].push_back(wcss);
            last_wcss = wcss;

            if (assignment == previous) break;
            previous = assignment;
        }

        KMeansResult out;
        out.clustering.assignment = assignment;
        out.clustering.k = k;
        out.wcss = last_wcss;
        results[r] = std::move(out);
    };

    parallel_chunks(make_chunks(static_cast<Index>(restarts), 1),
                    [&](std::size_t, Index b, Index) { run_one(static_cast<std::size_t>(b)); });

    for (std::size_t r = 0; r < results.size(); ++r) {
        if (results[r].wcss < best.wcss) best = results[r];
    }
    return best;
}

// Purity: fraction of items falling in the majority gold class of their cluster.
inline double purity(const std::vector<int>& clusters, const std::vector<int>& gold) {
    if (clusters.size() != gold.size() || clusters.empty())
        throw Error("purity: item sets must match and be non-empty");
    int kc = *std::max_element(clusters.begin(), clusters.end()) + 1;
    int kg = *std::max_element(gold.begin(), gold.end()) + 1;
    if (*std::min_element(clusters.begin(), clusters.end()) < 0 ||
        *std::min_element(gold.begin(), gold.end()) < 0)
        throw Error("purity: negative label");
    std::vector<std::vector<std::size_t>> table(static_cast<std::size_t>(kc),
                                                std::vector<std::size_t>(static_cast<std::size_t>(kg), 0));
    for (std::size_t i = 0; i < clusters.size(); ++i)
        ++table[static_cast<std::size_t>(clusters[i])][static_cast<std::size_t>(gold[i])];
    std::size_t agree = 0;
    for (const auto& row : table) agree += *std::max_element(row.begin(), row.end());
    return static_cast<double>(agree) / static_cast<double>(clusters.size());
}

inline double purity(const Clustering& clustering, const std::vector<int>& gold) {
    return purity(clustering.assignment, gold);
}

}  // namespace abtt
