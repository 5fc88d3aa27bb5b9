#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "aigt/features.hpp"
#include "aigt/types.hpp"

namespace aigt {

// Dense word vectors over a human-written reference corpus, with per-term
// corpus frequencies attached so replacement policies can require that a
// candidate is actually in human use.
struct EmbeddingSpace {
    std::vector<std::string> vocabulary;       // index -> term
    std::vector<std::vector<double>> vectors;  // |V| rows, each L2-normalized, length dim
    size_t dim = 0;
    std::unordered_map<std::string, size_t> index;            // term -> row
    std::unordered_map<std::string, uint64_t> human_frequency;  // raw corpus counts

    std::optional<size_t> row_of(const std::string& term) const;
    double similarity(size_t row_a, size_t row_b) const;  // cosine (dot of unit rows)
    std::vector<std::pair<std::string, double>> nearest(const std::string& term, size_t top_n) const;
};

struct EmbeddingOptions {
    size_t dim = 64;
    size_t window = 5;        // symmetric co-occurrence window
    uint64_t min_count = 2;   // terms below this are dropped from the vocabulary
    size_t max_vocab = 2000;  // densest terms kept; bounds the SVD problem size
};

// Positive-PMI co-occurrence factorization: counts within the window,
// PPMI transform, truncated SVD, rows U * sqrt(S) re-normalized to unit
// length. Deterministic for a fixed corpus and options.
EmbeddingSpace train_embeddings(const std::vector<TokenSequence>& human_docs,
                                const EmbeddingOptions& options = {});

// Text format: header "V d", then one line per term: "term v1 ... vd".
void save_embeddings(const EmbeddingSpace& space, const std::string& path);
EmbeddingSpace load_embeddings(const std::string& path);

// Recomputes human_frequency from a corpus (used after load, which carries
// no frequency information of its own).
void attach_frequencies(EmbeddingSpace& space, const std::vector<TokenSequence>& human_docs);

}  // namespace aigt
