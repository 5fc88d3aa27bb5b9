#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "aigt/detectors.hpp"
#include "aigt/embeddings.hpp"
#include "aigt/explain.hpp"
#include "aigt/features.hpp"
#include "aigt/metrics.hpp"
#include "aigt/rng.hpp"
#include "aigt/types.hpp"

using namespace aigt;

namespace {

// Two-style corpus, deterministic. Machine-leaning docs use the ma* words
// more often; everything shares the fi* filler inventory.
std::vector<Document> make_corpus(size_t n_ai, size_t n_human, size_t doc_len, uint64_t seed) {
    Rng rng(seed);
    std::vector<Document> docs;
    docs.reserve(n_ai + n_human);
    for (size_t i = 0; i < n_ai + n_human; ++i) {
        const bool ai = i < n_ai;
        std::string text;
        for (size_t j = 0; j < doc_len; ++j) {
            const uint64_t r = rng.below(100);
            std::string word;
            if (r < 55) {
                word = (ai ? "ma" : "pe") + std::to_string(rng.below(20));
            } else if (r < 75) {
                word = (ai ? "pe" : "ma") + std::to_string(rng.below(20));
            } else {
                word = "fi" + std::to_string(rng.below(30));
            }
            if (j > 0) text += ' ';
            text += word;
        }
        docs.push_back({(ai ? "a" : "h") + std::to_string(i), text,
                        ai ? Label::Ai : Label::Human, Language::En, Domain::News, {}});
    }
    return docs;
}

std::vector<TokenSequence> tokenized(const std::vector<Document>& docs) {
    std::vector<TokenSequence> out;
    out.reserve(docs.size());
    for (const Document& doc : docs) out.push_back(tokenize(doc.text));
    return out;
}

const std::vector<Document>& corpus500() {
    static const std::vector<Document> docs = make_corpus(250, 250, 40, 1);
    return docs;
}

Detector train_detector(ClassifierKind kind) {
    const auto& docs = corpus500();
    PreprocessProfile profile;
    profile.lemmatize = false;
    std::vector<TokenSequence> seqs;
    std::vector<Label> labels;
    for (const Document& doc : docs) {
        seqs.push_back(tokenize(preprocess(doc.text, profile)));
        labels.push_back(doc.label);
    }
    TfidfOptions options;
    options.max_features = 800;
    auto tfidf = std::make_shared<TfidfModel>(TfidfModel::fit(seqs, options));
    std::vector<FeatureVector> x;
    for (const TokenSequence& seq : seqs) x.push_back(tfidf->transform(seq));
    TrainConfig config;
    auto classifier = ClassifierModel::train(kind, x, labels, config, 7);
    return Detector(to_string(kind), profile, std::move(tfidf), std::move(classifier));
}

void BM_TfidfFit(benchmark::State& state) {
    const auto seqs = tokenized(corpus500());
    TfidfOptions options;
    options.max_features = 800;
    for (auto _ : state) {
        benchmark::DoNotOptimize(TfidfModel::fit(seqs, options));
    }
}
BENCHMARK(BM_TfidfFit)->Unit(benchmark::kMillisecond);

void BM_TfidfTransform(benchmark::State& state) {
    const auto seqs = tokenized(corpus500());
    TfidfOptions options;
    options.max_features = 800;
    const TfidfModel model = TfidfModel::fit(seqs, options);
    size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.transform(seqs[i++ % seqs.size()]));
    }
}
BENCHMARK(BM_TfidfTransform);

void BM_GbdtTrain(benchmark::State& state) {
    const auto& docs = corpus500();
    const auto seqs = tokenized(docs);
    TfidfOptions options;
    options.max_features = 800;
    const TfidfModel tfidf = TfidfModel::fit(seqs, options);
    std::vector<FeatureVector> x;
    std::vector<Label> y;
    for (size_t i = 0; i < docs.size(); ++i) {
        x.push_back(tfidf.transform(seqs[i]));
        y.push_back(docs[i].label);
    }
    TrainConfig config;
    config.gbdt.n_rounds = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ClassifierModel::train(ClassifierKind::Gbdt, x, y, config, 7));
    }
}
BENCHMARK(BM_GbdtTrain)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_GbdtPredict(benchmark::State& state) {
    static const Detector detector = train_detector(ClassifierKind::Gbdt);
    const auto& docs = corpus500();
    size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(detector.predict_proba_text(docs[i++ % docs.size()].text));
    }
}
BENCHMARK(BM_GbdtPredict);

void BM_ExactShapley(benchmark::State& state) {
    static const Detector detector = train_detector(ClassifierKind::Logistic);
    const DetectorTokenScorer scorer(detector);
    const TokenSequence seq = tokenize(corpus500()[0].text);
    const std::vector<std::string> tokens(seq.tokens.begin(),
                                          seq.tokens.begin() + state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(exact_shapley(scorer, "doc", tokens));
    }
}
BENCHMARK(BM_ExactShapley)->Arg(8)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_SampledShapley(benchmark::State& state) {
    static const Detector detector = train_detector(ClassifierKind::Logistic);
    const DetectorTokenScorer scorer(detector);
    const TokenSequence seq = tokenize(corpus500()[0].text);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            sampled_shapley(scorer, "doc", seq.tokens, static_cast<size_t>(state.range(0)), 3));
    }
}
BENCHMARK(BM_SampledShapley)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Lime(benchmark::State& state) {
    static const Detector detector = train_detector(ClassifierKind::Logistic);
    const DetectorTokenScorer scorer(detector);
    const TokenSequence seq = tokenize(corpus500()[0].text);
    LimeOptions options;
    options.n_samples = static_cast<size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(lime_attribution(scorer, "doc", seq.tokens, options, 3));
    }
}
BENCHMARK(BM_Lime)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Bleu(benchmark::State& state) {
    Rng rng(5);
    std::vector<std::string> ref, hyp;
    for (int i = 0; i < 50; ++i) {
        ref.push_back("w" + std::to_string(rng.below(30)));
        hyp.push_back("w" + std::to_string(rng.below(30)));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(bleu(ref, hyp));
    }
}
BENCHMARK(BM_Bleu);

void BM_RougeL(benchmark::State& state) {
    Rng rng(6);
    std::vector<std::string> ref, hyp;
    for (int i = 0; i < 50; ++i) {
        ref.push_back("w" + std::to_string(rng.below(30)));
        hyp.push_back("w" + std::to_string(rng.below(30)));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(rougeL(ref, hyp));
    }
}
BENCHMARK(BM_RougeL);

void BM_TrainEmbeddings(benchmark::State& state) {
    std::vector<TokenSequence> human;
    for (const Document& doc : corpus500()) {
        if (doc.label == Label::Human) human.push_back(tokenize(doc.text));
    }
    EmbeddingOptions options;
    options.dim = 32;
    options.window = 4;
    options.min_count = 2;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train_embeddings(human, options));
    }
}
BENCHMARK(BM_TrainEmbeddings)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
