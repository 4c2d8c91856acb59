// Mean computation, centering, and principal-component extraction.
//
// top_components runs randomized block power iteration (oversampled by 8
// columns) against the Gram matrix of the centered rows, with a Rayleigh-Ritz
// extraction every sweep. full_spectrum uses an exact dense eigendecomposition
// of the Gram matrix.
#pragma once

#include "abtt/common.hpp"
#include "abtt/embedding.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

namespace abtt {

struct SpectralDecomposition {
    Vector mu;                           // d; zero when fitted on pre-centered data
    Matrix components;                   // D x d, rows are orthonormal u_i
    std::vector<double> variance_ratios; // sigma_1 >= ... >= sigma_D, fractions of total variance

    Index null_dim() const { return components.rows(); }
    Index dim() const { return components.cols(); }
};

inline Vector compute_mean(const EmbeddingSet& set) {
    set.validate();
    return set.matrix.colwise().mean().transpose();
}

inline EmbeddingSet center(const EmbeddingSet& set, const Vector& mu) {
    if (mu.size() != set.dim()) throw Error("center: dimension mismatch");
    Matrix shifted = set.matrix.rowwise() - mu.transpose();
    return EmbeddingSet::from_rows(set.words, std::move(shifted));
}

namespace detail {

// X^T X accumulated over fixed row chunks; chunk partials are merged in index
// order so the result is identical for any thread count.
inline Eigen::MatrixXd gram(const Matrix& m) {
    const Index d = m.cols();
    auto chunks = make_chunks(m.rows(), 8192);
    std::vector<Eigen::MatrixXd> partial(chunks.size());
    parallel_chunks(chunks, [&](std::size_t i, Index b, Index e) {
        const auto block = m.middleRows(b, e - b);
        partial[i] = block.transpose() * block;
    });
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
    for (const auto& p : partial) g += p;
    g = 0.5 * (g + g.transpose()).eval();
    return g;
}

// sin of the largest principal angle between the column spans of two
// orthonormal d x D blocks.
inline double subspace_rotation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * b);
    double smin = svd.singularValues().minCoeff();
    smin = std::clamp(smin, -1.0, 1.0);
    return std::sqrt(std::max(0.0, 1.0 - smin * smin));
}

// Flip each row so its largest-magnitude coordinate (first on ties) is positive.
inline void canonicalize_signs(Matrix& components) {
    for (Index i = 0; i < components.rows(); ++i) {
        Index arg = 0;
        double best = -1.0;
        for (Index j = 0; j < components.cols(); ++j) {
            double m = std::abs(components(i, j));
            if (m > best) {
                best = m;
                arg = j;
            }
        }
        if (components(i, arg) < 0.0) components.row(i) = -components.row(i);
    }
}

inline void warn_if_not_centered(const EmbeddingSet& set) {
    double avg_norm = set.matrix.rowwise().norm().mean();
    double mean_norm = set.matrix.colwise().mean().norm();
    if (avg_norm > 0.0 && mean_norm > 1e-6 * avg_norm) {
        std::fprintf(stderr,
                     "warning: top_components input does not look centered "
                     "(|mean| = %.3g, %.3g of avg row norm)\n",
                     mean_norm, mean_norm / avg_norm);
    }
}

}  // namespace detail

// Leading D right singular directions of the centered row matrix.
// Deterministic for a fixed (input, D, seed); components are sign-canonicalized.
inline SpectralDecomposition top_components(const EmbeddingSet& centered, Index D,
                                            std::uint64_t seed) {
    centered.validate();
    const Index n = centered.size();
    const Index d = centered.dim();
    if (D < 1 || D > std::min(n - 1, d))
        throw Error("top_components: D out of range [1, min(|V|-1, d)]");
    detail::warn_if_not_centered(centered);

    const Eigen::MatrixXd g = detail::gram(centered.matrix);
    const double total = g.trace();
    if (!(total > 0.0)) throw NumericalError("top_components: input has zero variance");

    const Index block = std::min(D + 8, d);  // oversampling
    Rng rng(seed);
    Eigen::MatrixXd q(d, block);
    for (Index j = 0; j < block; ++j)
        for (Index i = 0; i < d; ++i) q(i, j) = rng.normal();
    {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
        q = qr.householderQ() * Eigen::MatrixXd::Identity(d, block);
    }

    constexpr int kMaxSweeps = 300;
    constexpr double kRotationTol = 1e-10;
    Eigen::MatrixXd top_prev;
    Eigen::VectorXd ritz_values;
    Eigen::MatrixXd top(d, D);
    bool converged = false;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        Eigen::MatrixXd z = g * q;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
        q = qr.householderQ() * Eigen::MatrixXd::Identity(d, block);

        Eigen::MatrixXd t = q.transpose() * g * q;
        t = 0.5 * (t + t.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        if (es.info() != Eigen::Success)
            throw NumericalError("top_components: Rayleigh-Ritz eigensolve failed");

        // Eigenvalues ascend; keep all Ritz values, extract the top D directions.
        ritz_values = es.eigenvalues().reverse();
        Eigen::MatrixXd w = es.eigenvectors().rowwise().reverse();
        top = q * w.leftCols(D);

        if (top_prev.size() > 0 &&
            detail::subspace_rotation(top, top_prev) < kRotationTol) {
            // A stalled rotation is not enough: certify with the Ritz residual
            // so that slowly rotating near-ties are not mistaken for converged.
            double residual = 0.0;
            for (Index i = 0; i < D; ++i)
                residual = std::max(residual,
                                    (g * top.col(i) - ritz_values(i) * top.col(i)).norm());
            if (residual <= 1e-10 * std::max(ritz_values(0), total * 1e-300)) {
                converged = true;
                break;
            }
        }
        top_prev = top;
    }

    const double at_d = ritz_values(D - 1);
    const double past_d = ritz_values.size() > D ? ritz_values(D) : 0.0;
    const double gap = (at_d - past_d) / std::max(at_d, 1e-300);
    if (!(at_d > total * 1e-14))
        throw NumericalError("top_components: degenerate spectrum, rank of the data is below D");
    // Numerically equal sigma_D and sigma_(D+1) leave the returned basis
    // arbitrary inside the tied plane; refuse rather than return one.
    if (ritz_values.size() > D && gap < 1e-8)
        throw NumericalError(
            "top_components: degenerate spectrum, sigma_D and sigma_(D+1) are numerically equal "
            "(relative gap " + std::to_string(gap) + "); adjust D");
    if (!converged) {
        // Healthy gap but the D-boundary did not settle within the sweep
        // budget. The Rayleigh-Ritz estimate is kept: variances converge
        // quadratically in the remaining boundary mixing.
        std::fprintf(stderr,
                     "warning: top_components stopped after 300 sweeps with subspace rotation "
                     "above tolerance (relative gap %.3g at the D boundary)\n",
                     gap);
    }

    SpectralDecomposition out;
    out.mu = Vector::Zero(d);
    out.components = top.transpose();
    detail::canonicalize_signs(out.components);
    out.variance_ratios.resize(static_cast<std::size_t>(D));
    for (Index i = 0; i < D; ++i)
        out.variance_ratios[static_cast<std::size_t>(i)] = ritz_values(i) / total;
    return out;
}

struct Spectrum {
    std::vector<double> variance_ratios;  // descending, sums to ~1
    std::vector<double> variances;        // squared singular values of the row matrix
    std::vector<double> singular_values;  // descending

    std::vector<double> max_normalized_singular_values() const {
        std::vector<double> out(singular_values.size());
        double top = singular_values.empty() ? 1.0 : singular_values.front();
        if (top <= 0.0) top = 1.0;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = singular_values[i] / top;
        return out;
    }
};

// All min(|V|-1, d) normalized variance ratios of a centered set, by exact
// dense eigendecomposition of the Gram matrix.
inline Spectrum full_spectrum_detail(const EmbeddingSet& centered) {
    centered.validate();
    const Index n = centered.size();
    const Index d = centered.dim();
    const Index count = std::min(n - 1, d);
    if (count < 1) throw Error("full_spectrum: need at least two rows");

    Eigen::MatrixXd g = detail::gram(centered.matrix);
    const double total = g.trace();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.info() != Eigen::Success) throw NumericalError("full_spectrum: eigensolve failed");

    Spectrum spec;
    spec.variances.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) {
        double lambda = std::max(0.0, es.eigenvalues()(d - 1 - i));
        spec.variances.push_back(lambda);
    }
    spec.variance_ratios.resize(spec.variances.size());
    spec.singular_values.resize(spec.variances.size());
    for (std::size_t i = 0; i < spec.variances.size(); ++i) {
        spec.variance_ratios[i] = total > 0.0 ? spec.variances[i] / total : 0.0;
        spec.singular_values[i] = std::sqrt(spec.variances[i]);
    }
    return spec;
}

inline std::vector<double> full_spectrum(const EmbeddingSet& centered) {
    return full_spectrum_detail(centered).variance_ratios;
}

}  // namespace abtt
