// The all-but-the-top transform: remove the common mean vector, then null the
// top D principal directions of the centered vectors.
//
// Two projection variants are kept side by side:
//   literal: v' = (v - mu) - sum_i (u_i . v)        u_i
//   strict:  v' = (v - mu) - sum_i (u_i . (v - mu)) u_i
// They differ by the constant vector sum_i (u_i . mu) u_i added to every word.
// literal reproduces the published recipe verbatim; strict yields exactly
// zero-mean output with exactly nulled directions.
#pragma once

#include "abtt/common.hpp"
#include "abtt/embedding.hpp"
#include "abtt/spectral.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace abtt {

enum class Mode { literal, strict };

inline std::string mode_name(Mode m) { return m == Mode::literal ? "literal" : "strict"; }

inline Mode parse_mode(std::string_view name) {
    if (name == "literal") return Mode::literal;
    if (name == "strict") return Mode::strict;
    throw ParseError("unknown mode: " + std::string(name) + " (expected literal|strict)");
}

// Rule of thumb: null about d/100 directions, at least one.
inline Index default_null_dimension(Index d) {
    return std::max<Index>(1, std::lround(static_cast<double>(d) / 100.0));
}

struct PostprocessModel {
    Vector mu;                            // d
    Matrix components;                    // D x d, orthonormal rows; D == 0 means mean removal only
    Mode mode = Mode::literal;
    std::vector<double> variance_ratios;  // of the fitted components, descending

    Index null_dim() const { return components.rows(); }
    Index dim() const { return mu.size(); }
};

// Fits mu and the top-D directions of the centered set. D = nullopt applies
// the d/100 rule; D = 0 is accepted and skips component extraction.
inline PostprocessModel fit(const EmbeddingSet& set, std::optional<Index> requested_d,
                            Mode mode = Mode::literal, std::uint64_t seed = 0) {
    set.validate();
    Index null_d = requested_d.value_or(default_null_dimension(set.dim()));
    if (null_d < 0) throw Error("fit: D must be non-negative");

    PostprocessModel model;
    model.mode = mode;
    model.mu = compute_mean(set);
    if (null_d == 0) {
        model.components.resize(0, set.dim());
        return model;
    }
    EmbeddingSet centered = center(set, model.mu);
    SpectralDecomposition decomp = top_components(centered, null_d, seed);
    model.components = std::move(decomp.components);
    model.variance_ratios = std::move(decomp.variance_ratios);
    return model;
}

// Applies the transform; vocabulary and row order are preserved, no row is
// renormalized.
inline EmbeddingSet transform(const PostprocessModel& model, const EmbeddingSet& set) {
    set.validate();
    if (model.dim() != set.dim()) throw Error("transform: dimension mismatch");

    Matrix out(set.size(), set.dim());
    auto chunks = make_chunks(set.size(), 16384);
    parallel_chunks(chunks, [&](std::size_t, Index b, Index e) {
        auto rows = set.matrix.middleRows(b, e - b);
        Matrix shifted = rows.rowwise() - model.mu.transpose();
        if (model.null_dim() == 0) {
            out.middleRows(b, e - b) = shifted;
            return;
        }
        // projections: alpha_i per row, from v (literal) or v - mu (strict)
        Matrix alpha = (model.mode == Mode::literal ? Matrix(rows * model.components.transpose())
                                                    : Matrix(shifted * model.components.transpose()));
        out.middleRows(b, e - b) = shifted - alpha * model.components;
    });
    return EmbeddingSet::from_rows(set.words, std::move(out));
}

inline EmbeddingSet postprocess(const EmbeddingSet& set, std::optional<Index> requested_d,
                                Mode mode = Mode::literal, std::uint64_t seed = 0,
                                PostprocessModel* fitted = nullptr) {
    PostprocessModel model = fit(set, requested_d, mode, seed);
    EmbeddingSet out = transform(model, set);
    if (fitted) *fitted = std::move(model);
    return out;
}

// Residual-spectrum flatness after nulling: ratio of the largest to the
// smallest variance ratio over the non-nulled part of the spectrum (nulled
// directions show up as trailing near-zero ratios and are excluded).
inline double spectrum_flatness(const EmbeddingSet& processed) {
    Vector mu = compute_mean(processed);
    Spectrum spec = full_spectrum_detail(center(processed, mu));
    const auto& r = spec.variance_ratios;
    if (r.empty() || r.front() <= 0.0)
        throw NumericalError("spectrum_flatness: empty spectrum");
    std::size_t last = r.size();
    while (last > 0 && r[last - 1] <= 1e-9 * r.front()) --last;
    if (last == 0) throw NumericalError("spectrum_flatness: spectrum is all zeros");
    return r.front() / r[last - 1];
}

struct SweepRow {
    Index null_d = 0;
    double score = 0.0;
};

// Fit + transform + evaluate for each candidate D. The evaluator maps a
// processed set to a scalar score; the CLI wires either a task evaluator or
// spectrum_flatness here.
inline std::vector<SweepRow> sweep_null_dimensions(
    const EmbeddingSet& set, const std::vector<Index>& candidates, Mode mode, std::uint64_t seed,
    const std::function<double(const EmbeddingSet&)>& evaluator) {
    std::vector<SweepRow> rows;
    rows.reserve(candidates.size());
    for (Index null_d : candidates) {
        EmbeddingSet processed = postprocess(set, null_d, mode, seed);
        rows.push_back({null_d, evaluator(processed)});
    }
    return rows;
}

}  // namespace abtt
