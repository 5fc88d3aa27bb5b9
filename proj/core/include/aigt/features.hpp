#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace aigt {

struct PreprocessProfile {
    bool lowercase = true;
    bool strip_urls = true;
    bool strip_punct = true;
    bool lemmatize = true;
};

// Normalizes whitespace to single spaces and applies the enabled steps:
//   strip_urls  drops tokens matching scheme://rest (scheme = [A-Za-z][A-Za-z0-9+.-]*)
//   lowercase   ASCII case folding
//   strip_punct removes ASCII punctuation characters
//   lemmatize   suffix-rule stemmer; per pass, first matching rule of each
//               stage applies, and passes repeat until the token is stable:
//     stage 1: -ies>-y (len>=5), -sses>-ss, -s>() (len>=4, not -ss/-us/-is)
//     stage 2: -ing (len>=6), -ed (len>=5)  [then undouble a trailing double
//              consonant unless it is l, s, or z],
//              -lijk, -heid (NL, len>=7), -ness (len>=7), -ment (len>=8)
// Idempotent for every profile.
std::string preprocess(const std::string& text, const PreprocessProfile& profile);

struct TokenSequence {
    std::vector<std::string> tokens;
    std::vector<std::pair<size_t, size_t>> offsets;  // [start,end) byte ranges
};

// Splits on Unicode whitespace; every ASCII punctuation character becomes its
// own token except ' and - flanked by word characters on both sides, which
// stay inside the word. Offsets slice the input to each token's surface form.
TokenSequence tokenize(const std::string& text);

struct FeatureVector {
    std::vector<uint32_t> indices;  // strictly increasing
    std::vector<double> values;     // parallel, no stored zeros
};

struct TfidfOptions {
    size_t max_features = 5000;
    int ngram_max = 1;  // 1 = unigrams, 2 = unigrams + bigrams
};

// Vocabulary keeps the top max_features terms by total corpus count (ties
// lexicographic); idf(t) = ln((1+N)/(1+df(t))) + 1. transform multiplies
// term counts by idf and L2-normalizes; OOV tokens are ignored.
class TfidfModel {
public:
    static TfidfModel fit(const std::vector<TokenSequence>& corpus, const TfidfOptions& options);

    FeatureVector transform(const TokenSequence& doc) const;
    FeatureVector transform_tokens(const std::vector<std::string>& tokens) const;

    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    const std::vector<double>& idf() const { return idf_; }
    size_t max_features() const { return options_.max_features; }
    int ngram_max() const { return options_.ngram_max; }
    size_t size() const { return vocabulary_.size(); }

    std::string to_json() const;
    static TfidfModel from_json(const std::string& json_text);

private:
    TfidfOptions options_;
    std::vector<std::string> vocabulary_;  // index order
    std::vector<double> idf_;
    std::vector<std::pair<std::string, uint32_t>> index_;  // sorted term -> index
    uint32_t lookup(const std::string& term) const;
    friend bool operator==(const TfidfModel&, const TfidfModel&);
};

bool operator==(const TfidfModel& a, const TfidfModel& b);

}  // namespace aigt
