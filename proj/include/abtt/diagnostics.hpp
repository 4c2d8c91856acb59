// Geometric diagnostics: mean-norm statistics and spectrum decay, partition
// function concentration over random unit directions, and the correlation
// between leading-component coefficients and log word frequency.
#pragma once

#include "abtt/common.hpp"
#include "abtt/embedding.hpp"
#include "abtt/metrics.hpp"
#include "abtt/postprocess.hpp"
#include "abtt/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace abtt {

struct GeometryReport {
    double avg_norm = 0.0;  // mean of ||v(w)||_2
    double mu_norm = 0.0;   // ||mu||_2
    double ratio = 0.0;     // mu_norm / avg_norm
    std::vector<double> variance_ratios;                // descending, sums to ~1
    std::vector<double> max_normalized_singular_values; // s_i / s_1
};

inline GeometryReport geometry_report(const EmbeddingSet& set) {
    set.validate();
    if (set.size() < 2) throw Error("geometry_report: need at least two words");
    GeometryReport report;
    Vector mu = compute_mean(set);
    report.avg_norm = set.matrix.rowwise().norm().mean();
    report.mu_norm = mu.norm();
    report.ratio = report.avg_norm > 0.0 ? report.mu_norm / report.avg_norm : 0.0;
    Spectrum spec = full_spectrum_detail(center(set, mu));
    report.variance_ratios = spec.variance_ratios;
    report.max_normalized_singular_values = spec.max_normalized_singular_values();
    return report;
}

struct PartitionReport {
    std::size_t n_samples = 0;
    std::vector<double> values;  // Z(c) / mean(Z), one per sampled direction
    double cv = 0.0;             // sample std / mean of the raw Z values
    double min_value = 0.0;
    double max_value = 0.0;
};

// Z(c) = sum_w exp(c . v(w)) for uniformly random unit c, computed in
// log-space so that large-norm vocabularies cannot overflow.
inline PartitionReport partition_report(const EmbeddingSet& set, std::size_t n_samples,
                                        std::uint64_t seed) {
    set.validate();
    if (n_samples < 2) throw Error("partition_report: need at least 2 samples");

    const Index d = set.dim();
    Matrix directions(static_cast<Index>(n_samples), d);
    {
        Rng rng(seed);
        for (Index i = 0; i < directions.rows(); ++i) {
            for (Index j = 0; j < d; ++j) directions(i, j) = rng.normal();
            double norm = directions.row(i).norm();
            if (norm == 0.0) norm = 1.0;  // astronomically unlikely
            directions.row(i) /= norm;
        }
    }

    std::vector<double> log_z(n_samples, 0.0);
    auto chunks = make_chunks(directions.rows(), 64);
    parallel_chunks(chunks, [&](std::size_t, Index b, Index e) {
        Eigen::MatrixXd logits = set.matrix * directions.middleRows(b, e - b).transpose();
        for (Index c = 0; c < e - b; ++c) {
            double m = logits.col(c).maxCoeff();
            double acc = 0.0;
            for (Index w = 0; w < logits.rows(); ++w) acc += std::exp(logits(w, c) - m);
            log_z[static_cast<std::size_t>(b + c)] = m + std::log(acc);
        }
    });

    // Normalize by the mean in log-space: Z_j / mean(Z) with the max shifted out.
    double shift = *std::max_element(log_z.begin(), log_z.end());
    double mean_shifted = 0.0;
    for (double lz : log_z) mean_shifted += std::exp(lz - shift);
    mean_shifted /= static_cast<double>(n_samples);

    PartitionReport report;
    report.n_samples = n_samples;
    report.values.resize(n_samples);
    double ss = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        report.values[i] = std::exp(log_z[i] - shift) / mean_shifted;
        double dev = report.values[i] - 1.0;
        ss += dev * dev;
    }
    report.cv = std::sqrt(ss / static_cast<double>(n_samples - 1));
    report.min_value = *std::min_element(report.values.begin(), report.values.end());
    report.max_value = *std::max_element(report.values.begin(), report.values.end());
    return report;
}

struct FrequencyReport {
    std::vector<double> correlations;      // Spearman(alpha_i, log p), i = 1..D
    std::vector<double> abs_correlations;  // |Spearman|; component signs are conventional
    std::size_t n_words = 0;
    struct ScatterPoint {
        std::string token;
        double alpha1 = 0.0;
        double alpha2 = 0.0;
        double log_p = 0.0;
    };
    std::vector<ScatterPoint> scatter;  // capped sample for external plotting
};

// alpha_i(w) = u_i . (v(w) - mu); Spearman of each alpha_i against log p(w)
// over the words present in both the vocabulary and the frequency table.
inline FrequencyReport frequency_report(const EmbeddingSet& set, const PostprocessModel& model,
                                        const FrequencyTable& freqs,
                                        std::size_t scatter_cap = 1000) {
    set.validate();
    if (model.dim() != set.dim()) throw Error("frequency_report: dimension mismatch");
    if (model.null_dim() < 1) throw Error("frequency_report: model has no components");

    std::vector<Index> rows;
    std::vector<double> log_p;
    for (Index i = 0; i < set.size(); ++i) {
        auto c = freqs.count(set.words[static_cast<std::size_t>(i)]);
        if (!c || *c == 0) continue;  // log p undefined at zero counts
        rows.push_back(i);
        log_p.push_back(std::log(static_cast<double>(*c) / static_cast<double>(freqs.total)));
    }
    if (rows.size() < 10)
        throw NumericalError("frequency_report: fewer than 10 words shared with frequency table");

    const Index D = model.null_dim();
    Matrix alpha(static_cast<Index>(rows.size()), D);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Vector centered = set.matrix.row(rows[i]).transpose() - model.mu;
        alpha.row(static_cast<Index>(i)) = (model.components * centered).transpose();
    }

    FrequencyReport report;
    report.n_words = rows.size();
    for (Index j = 0; j < D; ++j) {
        std::vector<double> a(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) a[i] = alpha(static_cast<Index>(i), j);
        double rho = spearman(a, log_p);  // throws when either side has zero rank variance
        report.correlations.push_back(rho);
        report.abs_correlations.push_back(std::abs(rho));
    }
    std::size_t take = std::min(scatter_cap, rows.size());
    report.scatter.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        FrequencyReport::ScatterPoint p;
        p.token = set.words[static_cast<std::size_t>(rows[i])];
        p.alpha1 = alpha(static_cast<Index>(i), 0);
        p.alpha2 = D > 1 ? alpha(static_cast<Index>(i), 1) : 0.0;
        p.log_p = log_p[i];
        report.scatter.push_back(std::move(p));
    }
    return report;
}

// |cosine(mu, u_1)| with u_1 the top component of the centered set. A zero
// mean yields 0 with `degenerate_mean` set.
inline double mean_vs_pc1(const EmbeddingSet& set, std::uint64_t seed = 0,
                          bool* degenerate_mean = nullptr) {
    set.validate();
    if (set.size() < 2) throw Error("mean_vs_pc1: need at least two words");
    Vector mu = compute_mean(set);
    double avg_norm = set.matrix.rowwise().norm().mean();
    if (degenerate_mean) *degenerate_mean = false;
    if (mu.norm() <= 1e-12 * std::max(1.0, avg_norm)) {
        if (degenerate_mean) *degenerate_mean = true;
        return 0.0;
    }
    SpectralDecomposition decomp = top_components(center(set, mu), 1, seed);
    Vector u1 = decomp.components.row(0).transpose();
    return std::abs(cosine(mu, u1));
}

}  // namespace abtt
