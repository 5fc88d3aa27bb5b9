#include "aigt/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "aigt/errors.hpp"
#include "aigt/io.hpp"

namespace aigt {

std::optional<size_t> EmbeddingSpace::row_of(const std::string& term) const {
    auto it = index.find(term);
    if (it == index.end()) it = index.find(to_lower_ascii(term));
    if (it == index.end()) return std::nullopt;
    return it->second;
}

double EmbeddingSpace::similarity(size_t row_a, size_t row_b) const {
    const auto& a = vectors[row_a];
    const auto& b = vectors[row_b];
    double dot = 0.0;
    for (size_t k = 0; k < dim; ++k) dot += a[k] * b[k];
    return dot;
}

std::vector<std::pair<std::string, double>> EmbeddingSpace::nearest(const std::string& term,
                                                                    size_t top_n) const {
    const auto row = row_of(term);
    if (!row) return {};

    const std::string lowered = to_lower_ascii(term);
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(vocabulary.size());
    for (size_t r = 0; r < vocabulary.size(); ++r) {
        if (r == *row) continue;
        if (to_lower_ascii(vocabulary[r]) == lowered) continue;  // case variant of the query
        scored.emplace_back(vocabulary[r], similarity(*row, r));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > top_n) scored.resize(top_n);
    return scored;
}

EmbeddingSpace train_embeddings(const std::vector<TokenSequence>& human_docs,
                                const EmbeddingOptions& options) {
    if (human_docs.empty()) throw EmptyCorpusError("embedding training needs documents");
    if (options.dim < 2) throw Error("embedding dim must be >= 2");

    std::map<std::string, uint64_t> frequency;
    for (const TokenSequence& doc : human_docs) {
        for (const std::string& t : doc.tokens) ++frequency[t];
    }

    std::vector<std::pair<std::string, uint64_t>> kept;
    for (const auto& [term, count] : frequency) {
        if (count >= options.min_count) kept.emplace_back(term, count);
    }
    // Densest terms first when the cap binds; ties keep term order.
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (kept.size() > options.max_vocab) kept.resize(options.max_vocab);

    EmbeddingSpace space;
    for (const auto& [term, count] : kept) space.vocabulary.push_back(term);
    std::sort(space.vocabulary.begin(), space.vocabulary.end());
    const size_t v = space.vocabulary.size();
    if (v < options.dim) {
        throw VocabularyTooSmallError("vocabulary after filtering has " + std::to_string(v) +
                                      " terms, need at least dim = " + std::to_string(options.dim));
    }
    for (size_t r = 0; r < v; ++r) space.index[space.vocabulary[r]] = r;
    space.dim = options.dim;
    space.human_frequency.insert(frequency.begin(), frequency.end());

    // Symmetric co-occurrence within +/- window.
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(v),
                                                   static_cast<Eigen::Index>(v));
    for (const TokenSequence& doc : human_docs) {
        const size_t n = doc.tokens.size();
        for (size_t i = 0; i < n; ++i) {
            const auto it = space.index.find(doc.tokens[i]);
            if (it == space.index.end()) continue;
            const size_t lo = i > options.window ? i - options.window : 0;
            const size_t hi = std::min(n, i + options.window + 1);
            for (size_t j = lo; j < hi; ++j) {
                if (j == i) continue;
                const auto jt = space.index.find(doc.tokens[j]);
                if (jt == space.index.end()) continue;
                counts(static_cast<Eigen::Index>(it->second),
                       static_cast<Eigen::Index>(jt->second)) += 1.0;
            }
        }
    }

    const double total = counts.sum();
    if (total <= 0.0) {
        throw VocabularyTooSmallError("no co-occurrence pairs within the window");
    }
    const Eigen::VectorXd row_sums = counts.rowwise().sum();

    Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(v),
                                                 static_cast<Eigen::Index>(v));
    for (Eigen::Index r = 0; r < ppmi.rows(); ++r) {
        for (Eigen::Index c = 0; c < ppmi.cols(); ++c) {
            const double joint = counts(r, c);
            if (joint <= 0.0) continue;
            const double pmi =
                std::log(joint * total / (row_sums(r) * row_sums(c)));
            if (pmi > 0.0) ppmi(r, c) = pmi;
        }
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(ppmi, Eigen::ComputeThinU);
    const Eigen::Index d = static_cast<Eigen::Index>(options.dim);
    const Eigen::MatrixXd u = svd.matrixU().leftCols(d);
    const Eigen::VectorXd s = svd.singularValues().head(d);

    space.vectors.assign(v, std::vector<double>(options.dim, 0.0));
    for (size_t r = 0; r < v; ++r) {
        double norm_sq = 0.0;
        for (size_t k = 0; k < options.dim; ++k) {
            const double val = u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) *
                               std::sqrt(std::max(0.0, s(static_cast<Eigen::Index>(k))));
            space.vectors[r][k] = val;
            norm_sq += val * val;
        }
        if (norm_sq > 0.0) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (double& val : space.vectors[r]) val *= inv;
        }
    }
    return space;
}

void save_embeddings(const EmbeddingSpace& space, const std::string& path) {
    std::string out = std::to_string(space.vocabulary.size()) + ' ' + std::to_string(space.dim) +
                      '\n';
    char buf[64];
    for (size_t r = 0; r < space.vocabulary.size(); ++r) {
        out += space.vocabulary[r];
        for (size_t k = 0; k < space.dim; ++k) {
            std::snprintf(buf, sizeof(buf), " %.8f", space.vectors[r][k]);
            out += buf;
        }
        out.push_back('\n');
    }
    atomic_write_file(path, out);
}

EmbeddingSpace load_embeddings(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw FormatError("line 1: missing header");
    size_t v = 0, d = 0;
    {
        std::istringstream header(line);
        if (!(header >> v >> d)) throw FormatError("line 1: header must be 'V d'");
        std::string extra;
        if (header >> extra) throw FormatError("line 1: header must be 'V d'");
    }
    if (d < 2) throw FormatError("line 1: dim must be >= 2");

    EmbeddingSpace space;
    space.dim = d;
    space.vocabulary.reserve(v);
    space.vectors.reserve(v);
    for (size_t r = 0; r < v; ++r) {
        const size_t line_no = r + 2;
        if (!std::getline(in, line)) {
            throw FormatError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(v) + " terms, file ends early");
        }
        std::istringstream fields(line);
        std::string term;
        if (!(fields >> term)) {
            throw FormatError("line " + std::to_string(line_no) + ": missing term");
        }
        std::vector<double> vec;
        vec.reserve(d);
        double value;
        while (fields >> value) vec.push_back(value);
        if (vec.size() != d) {
            throw FormatError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(d) + " values, got " + std::to_string(vec.size()));
        }
        if (space.index.count(term)) {
            throw FormatError("line " + std::to_string(line_no) + ": duplicate term '" + term +
                              "'");
        }
        space.index[term] = space.vocabulary.size();
        space.vocabulary.push_back(term);
        space.vectors.push_back(std::move(vec));
    }
    return space;
}

void attach_frequencies(EmbeddingSpace& space, const std::vector<TokenSequence>& human_docs) {
    space.human_frequency.clear();
    for (const TokenSequence& doc : human_docs) {
        for (const std::string& t : doc.tokens) ++space.human_frequency[t];
    }
}

}  // namespace aigt
