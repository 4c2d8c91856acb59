// JSON serialization for models and reports. Doubles round-trip losslessly
// (nlohmann emits shortest-round-trip decimal).
#pragma once

#include "abtt/diagnostics.hpp"
#include "abtt/evals.hpp"
#include "abtt/postprocess.hpp"
#include "abtt/spectral.hpp"
#include "abtt/synth.hpp"

#include "json.hpp"

#include <fstream>
#include <string>

namespace abtt {

using Json = nlohmann::json;

namespace detail {

inline Json vector_to_json(const Vector& v) {
    Json arr = Json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

inline Vector vector_from_json(const Json& arr) {
    Vector v(static_cast<Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Index>(i)) = arr[i].get<double>();
    return v;
}

inline Json matrix_rows_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_rows_from_json(const Json& rows, Index expected_cols = -1) {
    Index r = static_cast<Index>(rows.size());
    Index c = r > 0 ? static_cast<Index>(rows[0].size()) : std::max<Index>(expected_cols, 0);
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i) {
        if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != c)
            throw ParseError("ragged component matrix in JSON");
        for (Index j = 0; j < c; ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

}  // namespace detail

// {"d", "D", "mu", "components", "variance_ratios"}
inline Json to_json(const SpectralDecomposition& decomp) {
    return Json{{"d", decomp.dim()},
                {"D", decomp.null_dim()},
                {"mu", detail::vector_to_json(decomp.mu)},
                {"components", detail::matrix_rows_to_json(decomp.components)},
                {"variance_ratios", decomp.variance_ratios}};
}

inline Json to_json(const PostprocessModel& model) {
    return Json{{"d", model.dim()},
                {"D", model.null_dim()},
                {"mode", mode_name(model.mode)},
                {"mu", detail::vector_to_json(model.mu)},
                {"components", detail::matrix_rows_to_json(model.components)},
                {"variance_ratios", model.variance_ratios}};
}

inline PostprocessModel model_from_json(const Json& j) {
    PostprocessModel model;
    model.mu = detail::vector_from_json(j.at("mu"));
    model.components = detail::matrix_rows_from_json(j.at("components"), model.mu.size());
    if (model.components.rows() == 0) model.components.resize(0, model.mu.size());
    model.mode = parse_mode(j.value("mode", "literal"));
    if (j.contains("variance_ratios"))
        model.variance_ratios = j.at("variance_ratios").get<std::vector<double>>();
    if (j.contains("d") && j.at("d").get<Index>() != model.dim())
        throw ParseError("model JSON: declared d does not match mu length");
    if (j.contains("D") && j.at("D").get<Index>() != model.null_dim())
        throw ParseError("model JSON: declared D does not match component count");
    return model;
}

inline Json to_json(const EvalReport& report) {
    Json j{{"task", report.task},
           {"dataset", report.dataset},
           {"mode", report.mode},
           {"score_x100", report.score_x100},
           {"evaluated", report.evaluated},
           {"skipped", report.skipped},
           {"flagged", report.flagged}};
    if (!report.sections.empty()) j["sections"] = report.sections;
    return j;
}

inline EvalReport eval_report_from_json(const Json& j) {
    EvalReport report;
    report.task = j.at("task").get<std::string>();
    report.dataset = j.at("dataset").get<std::string>();
    report.mode = j.value("mode", "");
    report.score_x100 = j.at("score_x100").get<double>();
    report.evaluated = j.at("evaluated").get<std::size_t>();
    report.skipped = j.at("skipped").get<std::size_t>();
    report.flagged = j.value("flagged", std::size_t{0});
    if (j.contains("sections"))
        report.sections = j.at("sections").get<std::map<std::string, double>>();
    return report;
}

// The before/after table row: {"task","dataset","orig","proc","evaluated","skipped","mode","D"}
inline Json to_json(const PairedReport& paired) {
    Json j{{"task", paired.task},
           {"dataset", paired.dataset},
           {"orig", paired.orig.score_x100},
           {"proc", paired.proc.score_x100},
           {"evaluated", paired.orig.evaluated},
           {"skipped", paired.orig.skipped},
           {"mode", paired.mode},
           {"D", paired.null_dim}};
    j["orig_report"] = to_json(paired.orig);
    j["proc_report"] = to_json(paired.proc);
    return j;
}

inline Json to_json(const GeometryReport& report) {
    return Json{{"avg_norm", report.avg_norm},
                {"mu_norm", report.mu_norm},
                {"ratio", report.ratio},
                {"variance_ratios", report.variance_ratios},
                {"max_normalized_singular_values", report.max_normalized_singular_values}};
}

inline Json to_json(const PartitionReport& report) {
    return Json{{"n_samples", report.n_samples},
                {"cv", report.cv},
                {"min", report.min_value},
                {"max", report.max_value},
                {"values", report.values}};
}

inline Json to_json(const FrequencyReport& report) {
    Json scatter = Json::array();
    for (const auto& p : report.scatter)
        scatter.push_back(Json{
            {"token", p.token}, {"alpha1", p.alpha1}, {"alpha2", p.alpha2}, {"log_p", p.log_p}});
    return Json{{"correlations", report.correlations},
                {"abs_correlations", report.abs_correlations},
                {"n_words", report.n_words},
                {"scatter", std::move(scatter)}};
}

inline Json to_json(const SynthTruth& truth, const std::string& residuals_path) {
    Json quads = Json::array();
    for (const auto& q : truth.quadruples) quads.push_back({q[0], q[1], q[2], q[3]});
    Json j{{"mu", detail::vector_to_json(truth.mu)},
           {"components", detail::matrix_rows_to_json(truth.components)},
           {"alpha", detail::matrix_rows_to_json(truth.alpha)},
           {"labels", truth.labels},
           {"quadruples", std::move(quads)},
           {"residuals_file", residuals_path}};
    return j;
}

inline void write_json_file(const Json& j, const std::string& path, int indent = 2) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << j.dump(indent) << '\n';
    if (!out) throw ParseError("write failed: " + path);
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
    return j;
}

}  // namespace abtt
