// The four lexical/sentence evaluators: word similarity (Spearman), concept
// categorization (k-means purity), word analogy (3CosAdd accuracy), and
// semantic textual similarity (Pearson over averaged sentence vectors).
//
// Lookup policy, applied uniformly: exact-case lookup first, then an
// ASCII-lowercased fallback. Out-of-vocabulary items are skipped and counted;
// the vocabulary never changes under postprocessing, so coverage is identical
// between original and processed runs.
#pragma once

#include "abtt/common.hpp"
#include "abtt/embedding.hpp"
#include "abtt/metrics.hpp"
#include "abtt/postprocess.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace abtt {

struct SimilarityDataset {
    struct Item {
        std::string word1, word2;
        double gold;
    };
    std::string name;
    std::vector<Item> items;
};

struct CategorizationDataset {
    struct Item {
        std::string word;
        std::string category;
    };
    std::string name;
    std::vector<Item> items;
};

enum class AnalogySection { semantic, syntactic };

struct AnalogyDataset {
    struct Item {
        std::string w1, w2, w3, w4;
        AnalogySection section = AnalogySection::semantic;
    };
    std::string name;
    std::vector<Item> items;
};

struct STSDataset {
    struct Item {
        std::vector<std::string> sentence1, sentence2;
        double gold;
    };
    std::string name;
    std::vector<Item> items;
};

struct EvalReport {
    std::string task;
    std::string dataset;
    std::string mode;  // "orig" or "proc"
    double score_x100 = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
    std::size_t flagged = 0;  // degenerate items (zero query vectors etc.)
    std::map<std::string, double> sections;  // analogy: per-section accuracy x100
};

namespace detail {

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Exact-case lookup first, lowercased fallback second.
inline std::optional<Index> find_word(const EmbeddingSet& set, const std::string& token) {
    if (auto i = set.find(token)) return i;
    std::string lower = ascii_lower(token);
    if (lower != token)
        if (auto i = set.find(lower)) return i;
    return std::nullopt;
}

// Tokenization for sentence input: split on whitespace, strip leading and
// trailing non-alphanumeric bytes. Case is preserved here; lowercasing happens
// in the lookup fallback.
inline std::vector<std::string> tokenize_sentence(std::string_view text) {
    std::vector<std::string_view> raw;
    split_ws(text, raw);
    std::vector<std::string> out;
    out.reserve(raw.size());
    for (std::string_view t : raw) {
        std::size_t b = 0, e = t.size();
        while (b < e && !std::isalnum(static_cast<unsigned char>(t[b]))) ++b;
        while (e > b && !std::isalnum(static_cast<unsigned char>(t[e - 1]))) --e;
        if (e > b) out.emplace_back(t.substr(b, e - b));
    }
    return out;
}

inline std::vector<std::string_view> split_tsv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == '\t') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

inline std::string stem_of(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace detail

// --- dataset loaders (normalized TSV formats; analogy keeps the published
// space-separated layout with ":"-prefixed section headers) ---

inline SimilarityDataset load_similarity(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open similarity dataset: " + path);
    SimilarityDataset data;
    data.name = detail::stem_of(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::chomp(line);
        if (line.empty()) continue;
        auto fields = detail::split_tsv(line);
        double gold;
        if (fields.size() != 3 || !detail::parse_double(fields[2], gold) || !std::isfinite(gold))
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected \"word1\\tword2\\tscore\"");
        data.items.push_back({std::string(fields[0]), std::string(fields[1]), gold});
    }
    if (data.items.empty()) throw ParseError("empty similarity dataset: " + path);
    return data;
}

inline CategorizationDataset load_categorization(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open categorization dataset: " + path);
    CategorizationDataset data;
    data.name = detail::stem_of(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::chomp(line);
        if (line.empty()) continue;
        auto fields = detail::split_tsv(line);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected \"word\\tcategory\"");
        data.items.push_back({std::string(fields[0]), std::string(fields[1])});
    }
    if (data.items.empty()) throw ParseError("empty categorization dataset: " + path);
    return data;
}

// Published analogy format: ": section-name" headers, then "w1 w2 w3 w4"
// lines. Sections whose name starts with "gram" count as syntactic.
inline AnalogyDataset load_analogy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open analogy dataset: " + path);
    AnalogyDataset data;
    data.name = detail::stem_of(path);
    std::string line;
    std::vector<std::string_view> fields;
    AnalogySection section = AnalogySection::semantic;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::chomp(line);
        detail::split_ws(line, fields);
        if (fields.empty()) continue;
        if (fields[0] == ":") {
            std::string name = fields.size() > 1 ? std::string(fields[1]) : "";
            section = name.rfind("gram", 0) == 0 ? AnalogySection::syntactic
                                                 : AnalogySection::semantic;
            continue;
        }
        if (fields.size() != 4)
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected \"w1 w2 w3 w4\" or \": section\"");
        data.items.push_back({std::string(fields[0]), std::string(fields[1]),
                              std::string(fields[2]), std::string(fields[3]), section});
    }
    if (data.items.empty()) throw ParseError("empty analogy dataset: " + path);
    return data;
}

inline STSDataset load_sts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open STS dataset: " + path);
    STSDataset data;
    data.name = detail::stem_of(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::chomp(line);
        if (line.empty()) continue;
        auto fields = detail::split_tsv(line);
        double gold;
        if (fields.size() != 3 || !detail::parse_double(fields[2], gold) || !std::isfinite(gold))
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected \"sentence1\\tsentence2\\tscore\"");
        STSDataset::Item item;
        item.sentence1 = detail::tokenize_sentence(fields[0]);
        item.sentence2 = detail::tokenize_sentence(fields[1]);
        item.gold = gold;
        if (item.sentence1.empty() || item.sentence2.empty())
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": sentence empty after tokenization");
        data.items.push_back(std::move(item));
    }
    if (data.items.empty()) throw ParseError("empty STS dataset: " + path);
    return data;
}

// --- dataset writers (the same normalized formats the loaders accept) ---

inline void save_similarity(const SimilarityDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    std::string buf;
    for (const auto& item : data.items) {
        buf += item.word1;
        buf += '\t';
        buf += item.word2;
        buf += '\t';
        detail::append_double(buf, item.gold);
        buf += '\n';
    }
    out << buf;
    if (!out) throw ParseError("write failed: " + path);
}

inline void save_categorization(const CategorizationDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    for (const auto& item : data.items) out << item.word << '\t' << item.category << '\n';
    if (!out) throw ParseError("write failed: " + path);
}

inline void save_analogy(const AnalogyDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    // Grouped by section; "gram" prefix marks the syntactic block for the loader.
    for (int pass = 0; pass < 2; ++pass) {
        AnalogySection want = pass == 0 ? AnalogySection::semantic : AnalogySection::syntactic;
        bool header_written = false;
        for (const auto& item : data.items) {
            if (item.section != want) continue;
            if (!header_written) {
                out << (pass == 0 ? ": planted-semantic" : ": gram-planted") << '\n';
                header_written = true;
            }
            out << item.w1 << ' ' << item.w2 << ' ' << item.w3 << ' ' << item.w4 << '\n';
        }
    }
    if (!out) throw ParseError("write failed: " + path);
}

inline void save_sts(const STSDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    std::string buf;
    for (const auto& item : data.items) {
        for (std::size_t i = 0; i < item.sentence1.size(); ++i) {
            if (i) buf += ' ';
            buf += item.sentence1[i];
        }
        buf += '\t';
        for (std::size_t i = 0; i < item.sentence2.size(); ++i) {
            if (i) buf += ' ';
            buf += item.sentence2[i];
        }
        buf += '\t';
        detail::append_double(buf, item.gold);
        buf += '\n';
    }
    out << buf;
    if (!out) throw ParseError("write failed: " + path);
}

// --- evaluators ---

// Cosine of the two word vectors per pair, Spearman x100 against gold.
inline EvalReport eval_similarity(const EmbeddingSet& set, const SimilarityDataset& data) {
    EvalReport report;
    report.task = "sim";
    report.dataset = data.name;
    ScoredPairs pairs;
    for (const auto& item : data.items) {
        auto a = detail::find_word(set, item.word1);
        auto b = detail::find_word(set, item.word2);
        if (!a || !b) {
            ++report.skipped;
            continue;
        }
        auto cos = try_cosine(set.matrix.row(*a).transpose(), set.matrix.row(*b).transpose());
        if (!cos) {
            ++report.skipped;
            ++report.flagged;  // zero vector; cannot score the pair
            continue;
        }
        pairs.system.push_back(*cos);
        pairs.gold.push_back(item.gold);
        ++report.evaluated;
    }
    if (report.evaluated < 2)
        throw NumericalError("eval_similarity: fewer than 2 in-vocabulary pairs in " + data.name);
    report.score_x100 = 100.0 * spearman(pairs);
    return report;
}

// k-means over the in-vocabulary words with k = surviving distinct categories,
// purity x100. OOV words are dropped and counted in `skipped`.
inline EvalReport eval_categorization(const EmbeddingSet& set, const CategorizationDataset& data,
                                      std::uint64_t seed, bool normalize = false,
                                      int restarts = 10) {
    EvalReport report;
    report.task = "cat";
    report.dataset = data.name;

    std::vector<Index> rows;
    std::vector<std::string> categories;
    std::vector<int> gold;
    std::map<std::string, int> category_id;
    for (const auto& item : data.items) {
        auto r = detail::find_word(set, item.word);
        if (!r) {
            ++report.skipped;
            continue;
        }
        auto [it, fresh] = category_id.emplace(item.category, static_cast<int>(category_id.size()));
        rows.push_back(*r);
        gold.push_back(it->second);
        ++report.evaluated;
    }
    int k = static_cast<int>(category_id.size());
    if (report.evaluated == 0 || static_cast<int>(rows.size()) < k)
        throw NumericalError("eval_categorization: fewer in-vocabulary words than categories in " +
                             data.name);

    Matrix points(static_cast<Index>(rows.size()), set.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        points.row(static_cast<Index>(i)) = set.matrix.row(rows[i]);
        if (normalize) {
            double n = points.row(static_cast<Index>(i)).norm();
            if (n > 0.0) points.row(static_cast<Index>(i)) /= n;
        }
    }
    KMeansResult result = kmeans(points, k, seed, restarts);
    report.score_x100 = 100.0 * purity(result.clustering, gold);
    return report;
}

// 3CosAdd: w4 = argmax cosine(v(w), v(w2) - v(w1) + v(w3)) excluding the three
// query words; ties resolve to the lowest row index. With `normalize`, the
// three query vectors are unit-normalized before the arithmetic.
inline EvalReport eval_analogy(const EmbeddingSet& set, const AnalogyDataset& data,
                               bool normalize = false) {
    EvalReport report;
    report.task = "analogy";
    report.dataset = data.name;

    struct Query {
        Index w1, w2, w3, w4;
        AnalogySection section;
    };
    std::vector<Query> queries;
    for (const auto& item : data.items) {
        auto a = detail::find_word(set, item.w1);
        auto b = detail::find_word(set, item.w2);
        auto c = detail::find_word(set, item.w3);
        auto d = detail::find_word(set, item.w4);
        if (!a || !b || !c || !d) {
            ++report.skipped;
            continue;
        }
        queries.push_back({*a, *b, *c, *d, item.section});
    }
    if (queries.empty())
        throw NumericalError("eval_analogy: no fully in-vocabulary items in " + data.name);

    Vector row_norms = set.matrix.rowwise().norm();
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_section;  // correct, total

    const Index qchunk = 256;
    const Index vchunk = 65536;
    std::size_t correct_total = 0;
    for (Index qb = 0; qb < static_cast<Index>(queries.size()); qb += qchunk) {
        Index qe = std::min<Index>(qb + qchunk, static_cast<Index>(queries.size()));
        Matrix qmat(qe - qb, set.dim());
        std::vector<bool> degenerate(static_cast<std::size_t>(qe - qb), false);
        for (Index i = qb; i < qe; ++i) {
            const Query& q = queries[static_cast<std::size_t>(i)];
            Vector v1 = set.matrix.row(q.w1).transpose();
            Vector v2 = set.matrix.row(q.w2).transpose();
            Vector v3 = set.matrix.row(q.w3).transpose();
            if (normalize) {
                if (v1.norm() > 0) v1 /= v1.norm();
                if (v2.norm() > 0) v2 /= v2.norm();
                if (v3.norm() > 0) v3 /= v3.norm();
            }
            Vector q_vec = v2 - v1 + v3;
            if (q_vec.norm() == 0.0) degenerate[static_cast<std::size_t>(i - qb)] = true;
            qmat.row(i - qb) = q_vec.transpose();
        }

        std::vector<Index> best_row(static_cast<std::size_t>(qe - qb), -1);
        std::vector<double> best_cos(static_cast<std::size_t>(qe - qb),
                                     -std::numeric_limits<double>::infinity());
        for (Index vb = 0; vb < set.size(); vb += vchunk) {
            Index ve = std::min(vb + vchunk, set.size());
            Eigen::MatrixXd dots = qmat * set.matrix.middleRows(vb, ve - vb).transpose();
            for (Index qi = 0; qi < qe - qb; ++qi) {
                if (degenerate[static_cast<std::size_t>(qi)]) continue;
                const Query& q = queries[static_cast<std::size_t>(qb + qi)];
                for (Index w = vb; w < ve; ++w) {
                    if (w == q.w1 || w == q.w2 || w == q.w3) continue;
                    if (row_norms(w) == 0.0) continue;
                    double cos = dots(qi, w - vb) / row_norms(w);  // query norm constant per row
                    if (cos > best_cos[static_cast<std::size_t>(qi)]) {
                        best_cos[static_cast<std::size_t>(qi)] = cos;
                        best_row[static_cast<std::size_t>(qi)] = w;
                    }
                }
            }
        }

        for (Index qi = 0; qi < qe - qb; ++qi) {
            const Query& q = queries[static_cast<std::size_t>(qb + qi)];
            std::string section = q.section == AnalogySection::semantic ? "semantic" : "syntactic";
            auto& bucket = per_section[section];
            ++bucket.second;
            ++report.evaluated;
            if (degenerate[static_cast<std::size_t>(qi)]) {
                ++report.flagged;  // zero query vector counts as incorrect
                continue;
            }
            if (best_row[static_cast<std::size_t>(qi)] == q.w4) {
                ++bucket.first;
                ++correct_total;
            }
        }
    }

    report.score_x100 =
        100.0 * static_cast<double>(correct_total) / static_cast<double>(report.evaluated);
    for (const auto& [name, counts] : per_section)
        report.sections[name] =
            100.0 * static_cast<double>(counts.first) / static_cast<double>(counts.second);
    return report;
}

// Sentence vector = mean of in-vocabulary token vectors; pair score = cosine;
// Pearson x100 against gold. Pairs with a fully OOV side are skipped.
inline EvalReport eval_sts(const EmbeddingSet& set, const STSDataset& data) {
    EvalReport report;
    report.task = "sts";
    report.dataset = data.name;

    auto sentence_vector = [&](const std::vector<std::string>& tokens) -> std::optional<Vector> {
        Vector sum = Vector::Zero(set.dim());
        std::size_t hits = 0;
        for (const auto& t : tokens) {
            if (auto r = detail::find_word(set, t)) {
                sum += set.matrix.row(*r).transpose();
                ++hits;
            }
        }
        if (hits == 0) return std::nullopt;
        return Vector(sum / static_cast<double>(hits));
    };

    ScoredPairs pairs;
    for (const auto& item : data.items) {
        auto s1 = sentence_vector(item.sentence1);
        auto s2 = sentence_vector(item.sentence2);
        if (!s1 || !s2) {
            ++report.skipped;
            continue;
        }
        auto cos = try_cosine(*s1, *s2);
        if (!cos) {
            ++report.skipped;
            ++report.flagged;
            continue;
        }
        pairs.system.push_back(*cos);
        pairs.gold.push_back(item.gold);
        ++report.evaluated;
    }
    if (report.evaluated < 2)
        throw NumericalError("eval_sts: fewer than 2 scorable pairs in " + data.name);
    report.score_x100 = 100.0 * pearson(pairs);
    return report;
}

// --- before/after driver ---

using EvalDataset =
    std::variant<SimilarityDataset, CategorizationDataset, AnalogyDataset, STSDataset>;

struct EvalOptions {
    std::uint64_t seed = 0;
    bool normalize_analogy = false;
    bool normalize_vectors = false;  // categorization
};

inline EvalReport run_eval(const EmbeddingSet& set, const EvalDataset& dataset,
                           const EvalOptions& options) {
    return std::visit(
        [&](const auto& data) -> EvalReport {
            using T = std::decay_t<decltype(data)>;
            if constexpr (std::is_same_v<T, SimilarityDataset>) {
                return eval_similarity(set, data);
            } else if constexpr (std::is_same_v<T, CategorizationDataset>) {
                return eval_categorization(set, data, options.seed, options.normalize_vectors);
            } else if constexpr (std::is_same_v<T, AnalogyDataset>) {
                return eval_analogy(set, data, options.normalize_analogy);
            } else {
                return eval_sts(set, data);
            }
        },
        dataset);
}

struct PairedReport {
    std::string task;
    std::string dataset;
    std::string mode;  // transform mode used for the "proc" column
    Index null_dim = 0;
    EvalReport orig;
    EvalReport proc;
};

// Runs every requested task on the original set and on transform(model, set),
// with identical seeds and coverage policy.
inline std::vector<PairedReport> before_after(const EmbeddingSet& set,
                                              const PostprocessModel& model,
                                              const std::vector<EvalDataset>& tasks,
                                              const EvalOptions& options = {}) {
    EmbeddingSet processed = transform(model, set);
    std::vector<PairedReport> out;
    out.reserve(tasks.size());
    for (const auto& task : tasks) {
        PairedReport paired;
        paired.orig = run_eval(set, task, options);
        paired.proc = run_eval(processed, task, options);
        paired.orig.mode = "orig";
        paired.proc.mode = "proc";
        paired.task = paired.orig.task;
        paired.dataset = paired.orig.dataset;
        paired.mode = mode_name(model.mode);
        paired.null_dim = model.null_dim();
        out.push_back(std::move(paired));
    }
    return out;
}

}  // namespace abtt
