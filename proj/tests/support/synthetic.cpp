#include "synthetic.hpp"

#include "aigt/rng.hpp"

namespace testsupport {

std::string pseudo_word(const std::string& prefix, uint64_t i) {
    static const char* syllables[] = {"ba", "ce", "di", "fo", "gu", "ka", "le",
                                      "mi", "no", "pu", "ra", "se", "ti", "vo"};
    std::string word = prefix;
    uint64_t v = i + 1;
    while (v > 0) {
        word += syllables[v % 14];
        v /= 14;
    }
    return word;
}

std::vector<aigt::Document> balanced_bilingual_corpus(size_t per_cell) {
    using namespace aigt;
    const Language languages[] = {Language::En, Language::Nl};
    const Domain domains[] = {Domain::News, Domain::Reviews, Domain::Twitter};
    const Label labels[] = {Label::Human, Label::Ai};
    std::vector<Document> docs;
    size_t serial = 0;
    for (const Language lang : languages) {
        for (const Domain dom : domains) {
            for (const Label label : labels) {
                for (size_t i = 0; i < per_cell; ++i) {
                    Document d;
                    d.id = "doc-" + std::to_string(serial++);
                    d.text = "sample text " + pseudo_word("t", serial) + " " +
                             pseudo_word("u", serial * 7 + i);
                    d.label = label;
                    d.language = lang;
                    d.domain = dom;
                    docs.push_back(std::move(d));
                }
            }
        }
    }
    return docs;
}

StyleVocab style_vocab(size_t n_machine, size_t n_person, size_t n_filler) {
    StyleVocab v;
    for (size_t i = 0; i < n_machine; ++i) v.machine_words.push_back(pseudo_word("ma", i));
    for (size_t i = 0; i < n_person; ++i) v.person_words.push_back(pseudo_word("pe", i));
    for (size_t i = 0; i < n_filler; ++i) v.filler_words.push_back(pseudo_word("fi", i));
    return v;
}

std::vector<aigt::Document> style_corpus(const StyleVocab& vocab, size_t n_ai, size_t n_human,
                                         size_t doc_len, uint64_t seed,
                                         const std::string& id_prefix) {
    using namespace aigt;
    Rng rng(seed);
    std::vector<Document> docs;
    docs.reserve(n_ai + n_human);
    const size_t total = n_ai + n_human;
    for (size_t i = 0; i < total; ++i) {
        const bool ai = i < n_ai;
        const std::vector<std::string>& own = ai ? vocab.machine_words : vocab.person_words;
        const std::vector<std::string>& other = ai ? vocab.person_words : vocab.machine_words;
        std::string text;
        for (size_t t = 0; t < doc_len; ++t) {
            const double u = rng.uniform();
            const std::vector<std::string>* pool;
            if (u < vocab.own_rate) {
                pool = &own;
            } else if (u < vocab.own_rate + vocab.other_rate) {
                pool = &other;
            } else {
                pool = &vocab.filler_words;
            }
            if (!text.empty()) text += ' ';
            text += (*pool)[rng.below(pool->size())];
        }
        Document d;
        d.id = id_prefix + "-" + std::to_string(i);
        d.text = std::move(text);
        d.label = ai ? Label::Ai : Label::Human;
        d.language = Language::En;
        d.domain = Domain::News;
        docs.push_back(std::move(d));
    }
    return docs;
}

aigt::Detector train_style_detector(const std::vector<aigt::Document>& train,
                                    aigt::ClassifierKind kind, uint64_t seed,
                                    size_t max_features) {
    using namespace aigt;
    PreprocessProfile profile;
    profile.lemmatize = false;  // pseudo-words carry no inflection
    std::vector<TokenSequence> sequences;
    std::vector<Label> labels;
    sequences.reserve(train.size());
    for (const Document& d : train) {
        sequences.push_back(tokenize(preprocess(d.text, profile)));
        labels.push_back(d.label);
    }
    TfidfOptions tfidf_options;
    tfidf_options.max_features = max_features;
    auto tfidf = std::make_shared<TfidfModel>(TfidfModel::fit(sequences, tfidf_options));
    std::vector<FeatureVector> x;
    x.reserve(sequences.size());
    for (const TokenSequence& seq : sequences) x.push_back(tfidf->transform(seq));
    TrainConfig config;
    config.n_features = tfidf->size();
    ClassifierModel classifier = ClassifierModel::train(kind, x, labels, config, seed);
    return Detector(to_string(kind), profile, tfidf, std::move(classifier));
}

}  // namespace testsupport
