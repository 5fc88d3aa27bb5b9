#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "aigt/detectors.hpp"
#include "aigt/errors.hpp"
#include "aigt/rng.hpp"
#include "doctest.h"
#include "harness.hpp"
#include "synthetic.hpp"

using namespace aigt;
using testsupport::TempDir;

namespace {

FeatureVector fv(std::initializer_list<std::pair<uint32_t, double>> entries) {
    FeatureVector v;
    for (const auto& [i, x] : entries) {
        v.indices.push_back(i);
        v.values.push_back(x);
    }
    return v;
}

// Two clusters split on feature 0 vs feature 1.
void separable_set(std::vector<FeatureVector>& x, std::vector<Label>& y) {
    for (int i = 0; i < 20; ++i) {
        x.push_back(fv({{0, 1.0}, {2, 0.1 * (i % 3)}}));
        y.push_back(Label::Ai);
        x.push_back(fv({{1, 1.0}, {2, 0.1 * (i % 3)}}));
        y.push_back(Label::Human);
    }
}

}  // namespace

TEST_CASE("logistic training reaches full accuracy on separable data") {
    std::vector<FeatureVector> x;
    std::vector<Label> y;
    separable_set(x, y);
    const ClassifierModel model = ClassifierModel::train(ClassifierKind::Logistic, x, y, {}, 1);
    const DetectionMetrics m = evaluate_features(model, x, y);
    CHECK(m.accuracy == 1.0);
    CHECK(model.kind() == ClassifierKind::Logistic);
    CHECK(model.trained());
}

TEST_CASE("gbdt training separates the same toy set") {
    std::vector<FeatureVector> x;
    std::vector<Label> y;
    separable_set(x, y);
    const ClassifierModel model = ClassifierModel::train(ClassifierKind::Gbdt, x, y, {}, 1);
    CHECK(evaluate_features(model, x, y).accuracy == 1.0);
}

TEST_CASE("gbdt with zero rounds predicts the prior log odds everywhere") {
    std::vector<FeatureVector> x;
    std::vector<Label> y;
    for (int i = 0; i < 3; ++i) {
        x.push_back(fv({{0, 1.0}}));
        y.push_back(Label::Ai);
    }
    x.push_back(fv({{1, 1.0}}));
    y.push_back(Label::Human);

    TrainConfig config;
    config.gbdt.n_rounds = 0;
    const ClassifierModel model = ClassifierModel::train(ClassifierKind::Gbdt, x, y, config, 1);
    const double prior = 0.75;
    CHECK(model.predict_proba(fv({{0, 1.0}})) == doctest::Approx(prior).epsilon(1e-9));
    CHECK(model.predict_proba(fv({{1, 5.0}})) == doctest::Approx(prior).epsilon(1e-9));
    CHECK(model.predict_proba(fv({})) == doctest::Approx(prior).epsilon(1e-9));
}

TEST_CASE("naive bayes likelihoods follow laplace smoothing arithmetic") {
    // Class Ai sees "x x", class Human sees "y": vocab {x=0, y=1}, alpha=1.
    std::vector<FeatureVector> x{fv({{0, 2.0}}), fv({{1, 1.0}})};
    std::vector<Label> y{Label::Ai, Label::Human};
    TrainConfig config;
    config.n_features = 2;
    const ClassifierModel model = ClassifierModel::train(ClassifierKind::NaiveBayes, x, y, config, 1);

    // P(x|Ai) = (2+1)/(2+2) = 0.75, P(x|Human) = (0+1)/(1+2) = 1/3,
    // priors 1/2 each. For the one-token document "x":
    // P(Ai|x) = 0.75 / (0.75 + 1/3).
    const double expected = 0.75 / (0.75 + 1.0 / 3.0);
    CHECK(model.predict_proba(fv({{0, 1.0}})) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("single class training is rejected") {
    std::vector<FeatureVector> x{fv({{0, 1.0}}), fv({{1, 1.0}})};
    std::vector<Label> y{Label::Ai, Label::Ai};
    for (const ClassifierKind kind :
         {ClassifierKind::Logistic, ClassifierKind::Gbdt, ClassifierKind::NaiveBayes}) {
        CHECK_THROWS_AS(ClassifierModel::train(kind, x, y, {}, 1), SingleClassTrainingError);
    }
}

TEST_CASE("training is deterministic in the seed") {
    std::vector<FeatureVector> x;
    std::vector<Label> y;
    separable_set(x, y);
    for (const ClassifierKind kind :
         {ClassifierKind::Logistic, ClassifierKind::Gbdt, ClassifierKind::NaiveBayes}) {
        const ClassifierModel a = ClassifierModel::train(kind, x, y, {}, 9);
        const ClassifierModel b = ClassifierModel::train(kind, x, y, {}, 9);
        CHECK(a.serialize() == b.serialize());
    }
}

TEST_CASE("untrained models refuse to predict") {
    const ClassifierModel model;
    CHECK_FALSE(model.trained());
    CHECK_THROWS_AS(model.predict_proba(fv({{0, 1.0}})), UntrainedModelError);
}

TEST_CASE("classifier kind names round trip") {
    for (const ClassifierKind kind :
         {ClassifierKind::Logistic, ClassifierKind::Gbdt, ClassifierKind::NaiveBayes}) {
        CHECK(parse_classifier_kind(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_classifier_kind("svm"), ParseError);
}

TEST_CASE("serialization round trips prediction behavior exactly") {
    std::vector<FeatureVector> x;
    std::vector<Label> y;
    separable_set(x, y);
    Rng rng(101);
    for (const ClassifierKind kind :
         {ClassifierKind::Logistic, ClassifierKind::Gbdt, ClassifierKind::NaiveBayes}) {
        const ClassifierModel model = ClassifierModel::train(kind, x, y, {}, 5);
        const ClassifierModel back = ClassifierModel::deserialize(model.serialize());
        CHECK(back.kind() == kind);
        for (int trial = 0; trial < 100; ++trial) {
            FeatureVector v;
            for (uint32_t i = 0; i < 3; ++i) {
                if (rng.coin()) {
                    v.indices.push_back(i);
                    v.values.push_back(rng.uniform());
                }
            }
            CHECK(model.predict_proba(v) == back.predict_proba(v));
        }
    }
}

TEST_CASE("corrupt model files raise typed errors instead of loading silently") {
    CHECK_THROWS_AS(ClassifierModel::deserialize("not json at all"), ParseError);
    CHECK_THROWS_AS(ClassifierModel::deserialize(R"({"schema":99,"kind":"logistic"})"),
                    VersionMismatchError);
    TempDir dir;
    testsupport::write_file(dir.path() / "model.json", "{\"schema\":1}");
    CHECK_THROWS_AS(load_detector(dir.str("model.json")), ParseError);
    CHECK_THROWS_AS(load_detector(dir.str("missing.json")), IoError);
}

TEST_CASE("metrics follow the confusion identities") {
    const DetectionMetrics m = DetectionMetrics::from_confusion(3, 1, 5, 1);
    CHECK(m.precision == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.accuracy == doctest::Approx(0.8).epsilon(1e-12));

    const DetectionMetrics perfect = DetectionMetrics::from_confusion(4, 0, 6, 0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.accuracy == 1.0);
}

TEST_CASE("f1 is the harmonic mean of precision and recall for random confusions") {
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        const long tp = static_cast<long>(rng.below(20));
        const long fp = static_cast<long>(rng.below(20));
        const long tn = static_cast<long>(rng.below(20));
        const long fn = static_cast<long>(rng.below(20));
        if (tp + fp + tn + fn == 0) continue;
        const DetectionMetrics m = DetectionMetrics::from_confusion(tp, fp, tn, fn);
        const double p = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
        const double r = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
        const double f1 = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
        CHECK(m.precision == doctest::Approx(p).epsilon(1e-12));
        CHECK(m.recall == doctest::Approx(r).epsilon(1e-12));
        CHECK(m.f1 == doctest::Approx(f1).epsilon(1e-12));
        CHECK(m.accuracy ==
              doctest::Approx(double(tp + tn) / double(tp + fp + tn + fn)).epsilon(1e-12));
    }
}

TEST_CASE("evaluate requires a non-empty test set") {
    const EnsembleModel empty;
    CHECK_THROWS_AS(evaluate(empty, {}), EmptyTestSetError);
}

TEST_CASE("detector pipelines map raw text to probabilities") {
    const testsupport::StyleVocab vocab = testsupport::style_vocab(20, 20, 10);
    const std::vector<Document> train =
        testsupport::style_corpus(vocab, 60, 60, 30, 11, "train");
    const Detector detector =
        testsupport::train_style_detector(train, ClassifierKind::Logistic, 3);
    const DetectionMetrics m = evaluate(detector, train);
    CHECK(m.f1 > 0.9);
    const double p = detector.predict_proba_text(train[0].text);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(detector.classify(train[0].text) == (p >= 0.5 ? Label::Ai : Label::Human));
}

TEST_CASE("the decision boundary is inclusive on the ai side") {
    // A meta layer of all-zero weights makes every prediction exactly 0.5.
    const EnsembleModel flat({}, {}, {0.0}, 0.0);
    CHECK(flat.predict_proba_text("anything") == 0.5);
    CHECK(flat.classify("anything") == Label::Ai);
}

TEST_CASE("ensemble with zero meta weights scores one half everywhere") {
    const std::vector<Document> train =
        testsupport::style_corpus(testsupport::style_vocab(10, 10, 5), 20, 20, 15, 2, "t");
    const Detector d = testsupport::train_style_detector(train, ClassifierKind::Logistic, 1);
    const EnsembleModel ensemble({d}, {}, {0.0, 0.0}, 0.0);
    CHECK(ensemble.predict_proba_text(train[0].text) == 0.5);
}

TEST_CASE("single branch ensemble with unit weight composes through the sigmoid") {
    const std::vector<Document> train =
        testsupport::style_corpus(testsupport::style_vocab(10, 10, 5), 20, 20, 15, 2, "t");
    const Detector d = testsupport::train_style_detector(train, ClassifierKind::Logistic, 1);
    const double p = d.predict_proba_text(train[0].text);
    const EnsembleModel ensemble({d}, {}, {1.0, 0.0}, 0.0);
    CHECK(ensemble.predict_proba_text(train[0].text) == doctest::Approx(sigmoid(p)).epsilon(1e-12));
}

TEST_CASE("predict_from_branch_probs is monotone in a positively weighted branch") {
    const EnsembleModel ensemble({}, {}, {2.0, -1.0, 0.1}, 0.0);
    double last = -1.0;
    for (double p = 0.0; p <= 1.0; p += 0.1) {
        const double y = ensemble.predict_from_branch_probs({p, 0.5});
        CHECK(y > last);
        last = y;
    }
}

TEST_CASE("stacked training freezes the first branch") {
    const testsupport::StyleVocab vocab = testsupport::style_vocab(20, 20, 10);
    const std::vector<Document> pretrain =
        testsupport::style_corpus(vocab, 40, 40, 25, 21, "pre");
    const std::vector<Document> finetune =
        testsupport::style_corpus(vocab, 40, 40, 25, 22, "fin");

    EnsembleConfig config;
    config.branch_kinds = {ClassifierKind::Logistic, ClassifierKind::NaiveBayes};
    config.tfidf.max_features = 300;
    config.profile.lemmatize = false;
    config.seed = 5;
    const EnsembleModel ensemble = EnsembleModel::train(pretrain, finetune, config);

    REQUIRE(ensemble.frozen_branch().size() == 2);
    REQUIRE(ensemble.fresh_branch().size() == 2);
    REQUIRE(ensemble.meta_weights().size() == 5);  // four branches plus bias
    REQUIRE(ensemble.stage1_snapshots().size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(ensemble.frozen_branch()[i].serialize() == ensemble.stage1_snapshots()[i]);
    }

    const std::vector<double> probs = ensemble.branch_probs(pretrain[0].text);
    REQUIRE(probs.size() == 4);
    CHECK(ensemble.predict_proba_text(pretrain[0].text) ==
          doctest::Approx(ensemble.predict_from_branch_probs(probs)).epsilon(1e-12));
}

TEST_CASE("a huge meta penalty pushes predictions to one half") {
    const testsupport::StyleVocab vocab = testsupport::style_vocab(10, 10, 5);
    const std::vector<Document> pretrain = testsupport::style_corpus(vocab, 30, 30, 20, 31, "pre");
    const std::vector<Document> finetune = testsupport::style_corpus(vocab, 30, 30, 20, 32, "fin");

    EnsembleConfig config;
    config.branch_kinds = {ClassifierKind::Logistic};
    config.tfidf.max_features = 200;
    config.profile.lemmatize = false;
    config.l2_lambda = 1e9;
    config.seed = 5;
    const EnsembleModel ensemble = EnsembleModel::train(pretrain, finetune, config);
    for (const double w : ensemble.meta_weights()) CHECK(std::abs(w) < 1e-3);
    CHECK(ensemble.predict_proba_text(pretrain[0].text) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("the stacked ensemble is no worse than its best branch on mixed strata") {
    // Branch specialization: one corpus separates on machine words, the
    // other on an unrelated vocabulary; the meta layer must not collapse
    // below the better branch by more than two points.
    const testsupport::StyleVocab vocab = testsupport::style_vocab(25, 25, 10);
    const std::vector<Document> pretrain = testsupport::style_corpus(vocab, 80, 80, 30, 41, "pre");
    const std::vector<Document> finetune = testsupport::style_corpus(vocab, 80, 80, 30, 42, "fin");
    const std::vector<Document> test = testsupport::style_corpus(vocab, 50, 50, 30, 43, "test");

    EnsembleConfig config;
    config.branch_kinds = {ClassifierKind::Logistic, ClassifierKind::Gbdt};
    config.tfidf.max_features = 300;
    config.profile.lemmatize = false;
    config.seed = 7;
    const EnsembleModel ensemble = EnsembleModel::train(pretrain, finetune, config);

    double best_branch = 0.0;
    for (const auto* branch : {&ensemble.frozen_branch(), &ensemble.fresh_branch()}) {
        for (const Detector& d : *branch) {
            best_branch = std::max(best_branch, evaluate(d, test).accuracy);
        }
    }
    const double ensemble_acc = evaluate(ensemble, test).accuracy;
    CHECK(ensemble_acc >= best_branch - 0.02);
}

TEST_CASE("ensemble files round trip with snapshots intact") {
    const testsupport::StyleVocab vocab = testsupport::style_vocab(10, 10, 5);
    const std::vector<Document> pretrain = testsupport::style_corpus(vocab, 30, 30, 20, 51, "pre");
    const std::vector<Document> finetune = testsupport::style_corpus(vocab, 30, 30, 20, 52, "fin");

    EnsembleConfig config;
    config.branch_kinds = {ClassifierKind::Logistic};
    config.tfidf.max_features = 200;
    config.profile.lemmatize = false;
    config.seed = 3;
    const EnsembleModel ensemble = EnsembleModel::train(pretrain, finetune, config);

    TempDir dir;
    save_model(ensemble, dir.str("ensemble.json"));
    CHECK(model_file_kind(dir.str("ensemble.json")) == "ensemble");
    const EnsembleModel back = load_ensemble(dir.str("ensemble.json"));
    CHECK(back.stage1_snapshots() == ensemble.stage1_snapshots());
    CHECK(back.meta_weights() == ensemble.meta_weights());
    CHECK(back.predict_proba_text(pretrain[0].text) ==
          ensemble.predict_proba_text(pretrain[0].text));

    const Detector d = testsupport::train_style_detector(pretrain, ClassifierKind::Gbdt, 1);
    save_model(d, dir.str("detector.json"));
    CHECK(model_file_kind(dir.str("detector.json")) == "detector");
    const Detector d2 = load_detector(dir.str("detector.json"));
    CHECK(d2.name() == d.name());
    CHECK(d2.predict_proba_text(finetune[0].text) == d.predict_proba_text(finetune[0].text));
}

TEST_CASE("sigmoid is centered and bounded") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(50.0) > 0.999);
    CHECK(sigmoid(-50.0) < 0.001);
    CHECK(sigmoid(800.0) <= 1.0);
    CHECK(sigmoid(-800.0) >= 0.0);
}
