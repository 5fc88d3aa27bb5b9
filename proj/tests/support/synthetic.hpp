#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aigt/detectors.hpp"
#include "aigt/types.hpp"

namespace testsupport {

// Deterministic pronounceable pseudo-word, distinct per (prefix, i).
std::string pseudo_word(const std::string& prefix, uint64_t i);

// Balanced two-language corpus: 2 languages x 3 domains x 2 labels, per_cell
// documents in every cell, unique ids, filler text.
std::vector<aigt::Document> balanced_bilingual_corpus(size_t per_cell);

// Two overlapping word inventories plus the mixing rates that make one class
// lean on machine_words and the other on person_words. Every word occurs in
// both classes so downstream embedding vocabularies cover the full inventory.
struct StyleVocab {
    std::vector<std::string> machine_words;
    std::vector<std::string> person_words;
    std::vector<std::string> filler_words;
    double own_rate = 0.55;     // P(word from the class's own inventory)
    double other_rate = 0.20;   // P(word from the opposite inventory)
};

StyleVocab style_vocab(size_t n_machine, size_t n_person, size_t n_filler);

// n_ai + n_human labeled documents of doc_len tokens drawn from the vocab's
// class-conditional mixtures. Deterministic in the seed.
std::vector<aigt::Document> style_corpus(const StyleVocab& vocab, size_t n_ai, size_t n_human,
                                         size_t doc_len, uint64_t seed,
                                         const std::string& id_prefix);

// TF-IDF + one classifier trained on the given documents.
aigt::Detector train_style_detector(const std::vector<aigt::Document>& train,
                                    aigt::ClassifierKind kind, uint64_t seed,
                                    size_t max_features = 600);

}  // namespace testsupport
