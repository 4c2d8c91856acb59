// Word-embedding container plus text-format parsing and serialization.
//
// Two on-disk formats are supported, both UTF-8, space-delimited, '.' decimal:
//   word2vec-text: header line "|V| d", then one "token x1 ... xd" line per word
//   glove-text:    the same lines without the header; d inferred from line one
#pragma once

#include "abtt/common.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace abtt {

enum class Format { word2vec_text, glove_text, auto_detect };

inline std::string format_name(Format f) {
    switch (f) {
        case Format::word2vec_text: return "word2vec-text";
        case Format::glove_text: return "glove-text";
        default: return "auto";
    }
}

inline Format parse_format(std::string_view name) {
    if (name == "word2vec-text") return Format::word2vec_text;
    if (name == "glove-text") return Format::glove_text;
    if (name == "auto") return Format::auto_detect;
    throw ParseError("unknown embedding format: " + std::string(name));
}

struct EmbeddingSet {
    std::vector<std::string> words;  // unique tokens, file order
    Matrix matrix;                   // |V| x d, row i is the vector of words[i]

    Index size() const { return matrix.rows(); }
    Index dim() const { return matrix.cols(); }

    std::optional<Index> find(std::string_view token) const {
        auto it = index_.find(std::string(token));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    static EmbeddingSet from_rows(std::vector<std::string> words, Matrix matrix) {
        EmbeddingSet set;
        set.words = std::move(words);
        set.matrix = std::move(matrix);
        set.rebuild_index();
        set.validate();
        return set;
    }

    void rebuild_index() {
        index_.clear();
        index_.reserve(words.size());
        for (std::size_t i = 0; i < words.size(); ++i) {
            auto [it, fresh] = index_.emplace(words[i], static_cast<Index>(i));
            if (!fresh) throw ParseError("duplicate token in embedding set: " + words[i]);
        }
    }

    void validate() const {
        if (matrix.rows() < 1 || matrix.cols() < 1)
            throw ParseError("embedding set must have at least one word and one dimension");
        if (static_cast<Index>(words.size()) != matrix.rows())
            throw ParseError("token count does not match matrix rows");
        if (!matrix.allFinite()) throw ParseError("embedding matrix contains non-finite values");
    }

private:
    std::unordered_map<std::string, Index> index_;
};

struct LoadStats {
    std::size_t duplicates_skipped = 0;
};

namespace detail {

inline void split_ws(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t b = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > b) out.push_back(line.substr(b, i - b));
    }
}

inline bool parse_double(std::string_view s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_u64(std::string_view s, std::uint64_t& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline void chomp(std::string& line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
}

// 9 significant digits; round-trips to within the 1e-7 contract for
// coefficients of typical magnitude.
inline void append_double(std::string& buf, double v) {
    char tmp[40];
    auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof(tmp), v, std::chars_format::general, 9);
    (void)ec;
    buf.append(tmp, ptr);
}

}  // namespace detail

// Parses an embedding file. Duplicate tokens keep the first occurrence; the
// number skipped is reported through `stats` and a one-line warning.
inline EmbeddingSet load_embeddings(const std::string& path, Format format = Format::auto_detect,
                                    LoadStats* stats = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open embedding file: " + path);

    std::string line;
    std::vector<std::string_view> fields;
    std::size_t line_no = 0;

    // First non-empty line decides the format in auto mode.
    std::string first;
    do {
        if (!std::getline(in, first)) throw ParseError("empty embedding file: " + path);
        ++line_no;
        detail::chomp(first);
    } while (first.empty());

    detail::split_ws(first, fields);
    std::uint64_t declared_rows = 0, declared_dim = 0;
    bool has_header = false;
    if (format == Format::auto_detect) {
        has_header = fields.size() == 2 && detail::parse_u64(fields[0], declared_rows) &&
                     detail::parse_u64(fields[1], declared_dim);
    } else if (format == Format::word2vec_text) {
        if (fields.size() != 2 || !detail::parse_u64(fields[0], declared_rows) ||
            !detail::parse_u64(fields[1], declared_dim))
            throw ParseError(path + ":1: expected word2vec-text header \"|V| d\"");
        has_header = true;
    }
    if (has_header && (declared_rows == 0 || declared_dim == 0))
        throw ParseError(path + ":1: header must declare positive |V| and d");

    Index dim = has_header ? static_cast<Index>(declared_dim) : -1;
    std::vector<std::string> words;
    std::vector<double> coeffs;
    std::unordered_map<std::string, Index> seen;
    std::size_t duplicates = 0, parsed_rows = 0;

    auto consume_row = [&](std::string_view text, std::size_t no) {
        detail::split_ws(text, fields);
        if (fields.empty()) return;  // blank line (e.g. trailing newline)
        if (fields.size() < 2)
            throw ParseError(path + ":" + std::to_string(no) + ": expected \"token x1 ... xd\"");
        Index row_dim = static_cast<Index>(fields.size()) - 1;
        if (dim < 0) dim = row_dim;
        if (row_dim != dim)
            throw ParseError(path + ":" + std::to_string(no) + ": expected " + std::to_string(dim) +
                             " coefficients, found " + std::to_string(row_dim));
        ++parsed_rows;
        std::string token(fields[0]);
        if (seen.count(token)) {
            ++duplicates;
            return;
        }
        seen.emplace(token, static_cast<Index>(words.size()));
        words.push_back(std::move(token));
        for (Index j = 1; j <= dim; ++j) {
            double v;
            if (!detail::parse_double(fields[j], v) || !std::isfinite(v))
                throw ParseError(path + ":" + std::to_string(no) + ": bad coefficient \"" +
                                 std::string(fields[j]) + "\"");
            coeffs.push_back(v);
        }
    };

    if (!has_header) consume_row(first, line_no);
    while (std::getline(in, line)) {
        ++line_no;
        detail::chomp(line);
        consume_row(line, line_no);
    }

    if (words.empty()) throw ParseError("no embedding rows in " + path);
    if (has_header && parsed_rows != declared_rows)
        throw ParseError(path + ": header declares " + std::to_string(declared_rows) +
                         " rows, file has " + std::to_string(parsed_rows));

    if (duplicates > 0) {
        std::fprintf(stderr, "warning: %s: skipped %zu duplicate token(s), kept first occurrence\n",
                     path.c_str(), duplicates);
    }
    if (stats) stats->duplicates_skipped = duplicates;

    Matrix m = Eigen::Map<Matrix>(coeffs.data(), static_cast<Index>(words.size()), dim);
    EmbeddingSet set;
    set.words = std::move(words);
    set.matrix = std::move(m);
    set.rebuild_index();
    set.validate();
    return set;
}

// Serializes with 9 significant digits. `auto` is treated as word2vec-text.
inline void save_embeddings(const EmbeddingSet& set, const std::string& path,
                            Format format = Format::word2vec_text) {
    set.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write embedding file: " + path);

    std::string buf;
    buf.reserve(1 << 20);
    if (format != Format::glove_text) {
        buf += std::to_string(set.size());
        buf += ' ';
        buf += std::to_string(set.dim());
        buf += '\n';
    }
    for (Index i = 0; i < set.size(); ++i) {
        buf += set.words[i];
        for (Index j = 0; j < set.dim(); ++j) {
            buf += ' ';
            detail::append_double(buf, set.matrix(i, j));
        }
        buf += '\n';
        if (buf.size() > (1 << 20)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw ParseError("write failed: " + path);
}

struct FrequencyTable {
    std::unordered_map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;

    std::optional<std::uint64_t> count(std::string_view token) const {
        auto it = counts.find(std::string(token));
        if (it == counts.end()) return std::nullopt;
        return it->second;
    }

    // Unigram probability count/total; 0 for unknown tokens.
    double probability(std::string_view token) const {
        auto c = count(token);
        if (!c || total == 0) return 0.0;
        return static_cast<double>(*c) / static_cast<double>(total);
    }
};

// Writes "token count" lines in sorted token order.
inline void save_frequencies(const FrequencyTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write frequency file: " + path);
    std::vector<const std::string*> tokens;
    tokens.reserve(table.counts.size());
    for (const auto& [token, count] : table.counts) tokens.push_back(&token);
    std::sort(tokens.begin(), tokens.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });
    for (const std::string* token : tokens)
        out << *token << ' ' << table.counts.at(*token) << '\n';
    if (!out) throw ParseError("write failed: " + path);
}

// Frequency list: one "token count" line per token. Repeated tokens accumulate.
inline FrequencyTable load_frequencies(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open frequency file: " + path);

    FrequencyTable table;
    std::string line;
    std::vector<std::string_view> fields;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::chomp(line);
        detail::split_ws(line, fields);
        if (fields.empty()) continue;
        if (fields.size() != 2)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected \"token count\"");
        std::uint64_t c;
        if (!detail::parse_u64(fields[1], c))
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad count \"" +
                             std::string(fields[1]) + "\" (must be a non-negative integer)");
        table.counts[std::string(fields[0])] += c;
        table.total += c;
    }
    if (table.counts.empty()) throw ParseError("no frequency rows in " + path);
    if (table.total == 0) throw ParseError(path + ": all counts are zero");
    return table;
}

}  // namespace abtt
