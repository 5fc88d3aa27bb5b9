#include "aigt/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "aigt/errors.hpp"
#include "aigt/io.hpp"
#include "aigt/rng.hpp"
#include "detail.hpp"

namespace aigt {

using nlohmann::json;

std::string to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::Logistic: return "logistic";
        case ClassifierKind::Gbdt: return "gbdt";
        case ClassifierKind::NaiveBayes: return "naive_bayes";
    }
    return "logistic";
}

ClassifierKind parse_classifier_kind(const std::string& s) {
    if (s == "logistic") return ClassifierKind::Logistic;
    if (s == "gbdt") return ClassifierKind::Gbdt;
    if (s == "naive_bayes") return ClassifierKind::NaiveBayes;
    throw ParseError("unknown classifier kind: '" + s + "'");
}

double sigmoid(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

size_t infer_features(const std::vector<FeatureVector>& x, size_t configured) {
    size_t n = configured;
    for (const FeatureVector& fv : x) {
        if (!fv.indices.empty()) n = std::max<size_t>(n, fv.indices.back() + 1);
    }
    return n;
}

double dot_sparse(const std::vector<double>& weights, const FeatureVector& fv) {
    double z = 0.0;
    for (size_t k = 0; k < fv.indices.size(); ++k) {
        if (fv.indices[k] < weights.size()) z += weights[fv.indices[k]] * fv.values[k];
    }
    return z;
}

LogisticPayload train_logistic(const std::vector<FeatureVector>& x, const std::vector<Label>& y,
                               const LogisticConfig& config, size_t n_features) {
    LogisticPayload payload;
    payload.weights.assign(n_features, 0.0);

    const double n = static_cast<double>(x.size());
    std::vector<double> grad(n_features);
    double prev_loss = std::numeric_limits<double>::infinity();

    for (size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        double loss = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            const double p = sigmoid(dot_sparse(payload.weights, x[i]) + payload.bias);
            const double target = y[i] == Label::Ai ? 1.0 : 0.0;
            const double err = p - target;
            for (size_t k = 0; k < x[i].indices.size(); ++k) {
                grad[x[i].indices[k]] += err * x[i].values[k];
            }
            grad_bias += err;
            loss -= target > 0.5 ? std::log(std::max(p, 1e-300))
                                 : std::log(std::max(1.0 - p, 1e-300));
        }
        loss /= n;
        for (const double w : payload.weights) loss += 0.5 * config.l2_lambda * w * w;
        if (config.penalize_bias) loss += 0.5 * config.l2_lambda * payload.bias * payload.bias;
        if (!std::isfinite(loss)) throw NonFiniteLossError("logistic loss diverged");

        for (size_t j = 0; j < n_features; ++j) {
            payload.weights[j] -=
                config.learning_rate * (grad[j] / n + config.l2_lambda * payload.weights[j]);
        }
        payload.bias -= config.learning_rate *
                        (grad_bias / n +
                         (config.penalize_bias ? config.l2_lambda * payload.bias : 0.0));

        if (std::abs(prev_loss - loss) < config.tol) break;
        prev_loss = loss;
    }
    return payload;
}

NaiveBayesPayload train_naive_bayes(const std::vector<FeatureVector>& x,
                                    const std::vector<Label>& y,
                                    const NaiveBayesConfig& config, size_t n_features) {
    std::vector<double> count_ai(n_features, 0.0), count_human(n_features, 0.0);
    double total_ai = 0.0, total_human = 0.0;
    size_t n_ai = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        auto& counts = y[i] == Label::Ai ? count_ai : count_human;
        auto& total = y[i] == Label::Ai ? total_ai : total_human;
        n_ai += y[i] == Label::Ai ? 1 : 0;
        for (size_t k = 0; k < x[i].indices.size(); ++k) {
            counts[x[i].indices[k]] += x[i].values[k];
            total += x[i].values[k];
        }
    }

    NaiveBayesPayload payload;
    const double n = static_cast<double>(x.size());
    payload.log_prior_ai = std::log(static_cast<double>(n_ai) / n);
    payload.log_prior_human = std::log(static_cast<double>(x.size() - n_ai) / n);
    const double v = static_cast<double>(n_features);
    payload.log_cond_ai.resize(n_features);
    payload.log_cond_human.resize(n_features);
    for (size_t j = 0; j < n_features; ++j) {
        payload.log_cond_ai[j] =
            std::log((count_ai[j] + config.alpha) / (total_ai + config.alpha * v));
        payload.log_cond_human[j] =
            std::log((count_human[j] + config.alpha) / (total_human + config.alpha * v));
    }
    return payload;
}

double predict_naive_bayes(const NaiveBayesPayload& payload, const FeatureVector& fv) {
    double score_ai = payload.log_prior_ai;
    double score_human = payload.log_prior_human;
    for (size_t k = 0; k < fv.indices.size(); ++k) {
        const uint32_t j = fv.indices[k];
        if (j >= payload.log_cond_ai.size()) continue;
        score_ai += fv.values[k] * payload.log_cond_ai[j];
        score_human += fv.values[k] * payload.log_cond_human[j];
    }
    return sigmoid(score_ai - score_human);
}

json envelope(const std::string& kind, json payload) {
    return json{{"schema", 1}, {"kind", kind}, {"payload", std::move(payload)}};
}

json parse_envelope(const std::string& text, const std::vector<std::string>& accepted_kinds,
                    std::string* found_kind) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad model json: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("schema")) {
        throw ParseError("model json needs schema, kind, payload");
    }
    if (!obj.at("schema").is_number_integer() || obj.at("schema").get<int>() != 1) {
        throw VersionMismatchError("unsupported model schema");
    }
    if (!obj.contains("kind") || !obj.contains("payload")) {
        throw ParseError("model json needs schema, kind, payload");
    }
    const std::string kind = obj.at("kind").get<std::string>();
    if (std::find(accepted_kinds.begin(), accepted_kinds.end(), kind) == accepted_kinds.end()) {
        throw VersionMismatchError("unexpected model kind '" + kind + "'");
    }
    if (found_kind) *found_kind = kind;
    return obj.at("payload");
}

json logistic_to_json(const LogisticPayload& p) {
    return json{{"weights", p.weights}, {"bias", p.bias}};
}

LogisticPayload logistic_from_json(const json& obj) {
    LogisticPayload p;
    p.weights = obj.at("weights").get<std::vector<double>>();
    p.bias = obj.at("bias").get<double>();
    return p;
}

json gbdt_to_json(const GbdtPayload& p) {
    json trees = json::array();
    for (const GbdtTree& tree : p.trees) {
        json nodes = json::array();
        for (const GbdtNode& n : tree.nodes) {
            nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
        }
        trees.push_back(std::move(nodes));
    }
    return json{{"base_score", p.base_score},
                {"learning_rate", p.learning_rate},
                {"n_features", p.n_features},
                {"trees", std::move(trees)}};
}

GbdtPayload gbdt_from_json(const json& obj) {
    GbdtPayload p;
    p.base_score = obj.at("base_score").get<double>();
    p.learning_rate = obj.at("learning_rate").get<double>();
    p.n_features = obj.at("n_features").get<size_t>();
    for (const json& tree_json : obj.at("trees")) {
        GbdtTree tree;
        for (const json& n : tree_json) {
            if (!n.is_array() || n.size() != 5) throw ParseError("bad tree node");
            tree.nodes.push_back(GbdtNode{n[0].get<int32_t>(), n[1].get<double>(),
                                          n[2].get<int32_t>(), n[3].get<int32_t>(),
                                          n[4].get<double>()});
        }
        p.trees.push_back(std::move(tree));
    }
    return p;
}

json naive_bayes_to_json(const NaiveBayesPayload& p) {
    return json{{"log_prior_ai", p.log_prior_ai},
                {"log_prior_human", p.log_prior_human},
                {"log_cond_ai", p.log_cond_ai},
                {"log_cond_human", p.log_cond_human}};
}

NaiveBayesPayload naive_bayes_from_json(const json& obj) {
    NaiveBayesPayload p;
    p.log_prior_ai = obj.at("log_prior_ai").get<double>();
    p.log_prior_human = obj.at("log_prior_human").get<double>();
    p.log_cond_ai = obj.at("log_cond_ai").get<std::vector<double>>();
    p.log_cond_human = obj.at("log_cond_human").get<std::vector<double>>();
    if (p.log_cond_ai.size() != p.log_cond_human.size()) {
        throw ParseError("class-conditional tables differ in length");
    }
    return p;
}

json profile_to_json(const PreprocessProfile& p) {
    return json{{"lowercase", p.lowercase},
                {"strip_urls", p.strip_urls},
                {"strip_punct", p.strip_punct},
                {"lemmatize", p.lemmatize}};
}

PreprocessProfile profile_from_json(const json& obj) {
    PreprocessProfile p;
    p.lowercase = obj.at("lowercase").get<bool>();
    p.strip_urls = obj.at("strip_urls").get<bool>();
    p.strip_punct = obj.at("strip_punct").get<bool>();
    p.lemmatize = obj.at("lemmatize").get<bool>();
    return p;
}

}  // namespace

ClassifierModel ClassifierModel::train(ClassifierKind kind, const std::vector<FeatureVector>& x,
                                       const std::vector<Label>& y, const TrainConfig& config,
                                       uint64_t seed) {
    if (x.size() != y.size()) throw Error("feature/label count mismatch");
    const bool has_ai = std::find(y.begin(), y.end(), Label::Ai) != y.end();
    const bool has_human = std::find(y.begin(), y.end(), Label::Human) != y.end();
    if (!has_ai || !has_human) {
        throw SingleClassTrainingError("training set needs both classes");
    }
    const size_t n_features = infer_features(x, config.n_features);

    switch (kind) {
        case ClassifierKind::Logistic:
            return ClassifierModel(kind, train_logistic(x, y, config.logistic, n_features));
        case ClassifierKind::Gbdt:
            return ClassifierModel(kind, detail::train_gbdt(x, y, config.gbdt, seed));
        case ClassifierKind::NaiveBayes:
            return ClassifierModel(kind, train_naive_bayes(x, y, config.naive_bayes, n_features));
    }
    throw Error("unreachable classifier kind");
}

double ClassifierModel::predict_proba(const FeatureVector& features) const {
    if (const auto* p = std::get_if<LogisticPayload>(&payload_)) {
        return sigmoid(dot_sparse(p->weights, features) + p->bias);
    }
    if (const auto* p = std::get_if<GbdtPayload>(&payload_)) {
        return sigmoid(detail::gbdt_raw_score(*p, features));
    }
    if (const auto* p = std::get_if<NaiveBayesPayload>(&payload_)) {
        return predict_naive_bayes(*p, features);
    }
    throw UntrainedModelError("predict_proba on an untrained classifier");
}

std::string ClassifierModel::serialize() const {
    json payload;
    if (const auto* p = std::get_if<LogisticPayload>(&payload_)) {
        payload = logistic_to_json(*p);
    } else if (const auto* p = std::get_if<GbdtPayload>(&payload_)) {
        payload = gbdt_to_json(*p);
    } else if (const auto* p = std::get_if<NaiveBayesPayload>(&payload_)) {
        payload = naive_bayes_to_json(*p);
    } else {
        throw UntrainedModelError("cannot serialize an untrained classifier");
    }
    return envelope(to_string(kind_), std::move(payload)).dump();
}

ClassifierModel ClassifierModel::deserialize(const std::string& json_text) {
    std::string kind;
    const json payload =
        parse_envelope(json_text, {"logistic", "gbdt", "naive_bayes"}, &kind);
    try {
        if (kind == "logistic") {
            return ClassifierModel(ClassifierKind::Logistic, logistic_from_json(payload));
        }
        if (kind == "gbdt") {
            return ClassifierModel(ClassifierKind::Gbdt, gbdt_from_json(payload));
        }
        return ClassifierModel(ClassifierKind::NaiveBayes, naive_bayes_from_json(payload));
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad classifier payload: ") + e.what());
    }
}

Detector::Detector(std::string name, PreprocessProfile profile,
                   std::shared_ptr<const TfidfModel> features, ClassifierModel classifier)
    : name_(std::move(name)),
      profile_(profile),
      features_(std::move(features)),
      classifier_(std::move(classifier)) {}

const TfidfModel& Detector::feature_space() const {
    if (!features_) throw UntrainedModelError("detector has no feature space");
    return *features_;
}

FeatureVector Detector::featurize(const std::string& text) const {
    return feature_space().transform(tokenize(preprocess(text, profile_)));
}

double Detector::predict_proba(const FeatureVector& features) const {
    return classifier_.predict_proba(features);
}

double Detector::predict_proba_text(const std::string& text) const {
    return classifier_.predict_proba(featurize(text));
}

std::string Detector::serialize() const {
    json payload{{"name", name_},
                 {"profile", profile_to_json(profile_)},
                 {"tfidf", json::parse(feature_space().to_json())},
                 {"classifier", json::parse(classifier_.serialize())}};
    return envelope("detector", std::move(payload)).dump();
}

Detector Detector::deserialize(const std::string& json_text) {
    const json payload = parse_envelope(json_text, {"detector"}, nullptr);
    try {
        auto tfidf = std::make_shared<TfidfModel>(TfidfModel::from_json(payload.at("tfidf").dump()));
        return Detector(payload.at("name").get<std::string>(),
                        profile_from_json(payload.at("profile")), std::move(tfidf),
                        ClassifierModel::deserialize(payload.at("classifier").dump()));
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad detector payload: ") + e.what());
    }
}

EnsembleModel::EnsembleModel(std::vector<Detector> frozen, std::vector<Detector> fresh,
                             std::vector<double> meta_weights, double l2_lambda)
    : frozen_(std::move(frozen)),
      fresh_(std::move(fresh)),
      meta_weights_(std::move(meta_weights)),
      l2_lambda_(l2_lambda) {}

namespace {

// Dense ridge-penalized logistic fit for the meta layer. The penalty covers
// the bias too, so lambda -> infinity drives every output to sigmoid(0).
std::vector<double> train_meta(const std::vector<std::vector<double>>& inputs,
                               const std::vector<Label>& y, double l2_lambda) {
    const size_t d = inputs.empty() ? 0 : inputs.front().size();
    std::vector<double> w(d + 1, 0.0);  // bias last
    const double n = static_cast<double>(inputs.size());
    // Logloss curvature is at most ||x||^2/4 per sample; inputs are
    // probabilities so ||x||^2 <= d + 1 including the bias column.
    const double step = 1.0 / (0.25 * static_cast<double>(d + 1) + l2_lambda + 1e-12);

    std::vector<double> grad(d + 1);
    double prev_loss = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < 20000; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (size_t i = 0; i < inputs.size(); ++i) {
            double z = w[d];
            for (size_t j = 0; j < d; ++j) z += w[j] * inputs[i][j];
            const double p = sigmoid(z);
            const double target = y[i] == Label::Ai ? 1.0 : 0.0;
            const double err = p - target;
            for (size_t j = 0; j < d; ++j) grad[j] += err * inputs[i][j];
            grad[d] += err;
            loss -= target > 0.5 ? std::log(std::max(p, 1e-300))
                                 : std::log(std::max(1.0 - p, 1e-300));
        }
        loss /= n;
        for (const double wj : w) loss += 0.5 * l2_lambda * wj * wj;
        if (!std::isfinite(loss)) throw NonFiniteLossError("meta-layer loss diverged");
        for (size_t j = 0; j <= d; ++j) {
            w[j] -= step * (grad[j] / n + l2_lambda * w[j]);
        }
        if (std::abs(prev_loss - loss) < 1e-12) break;
        prev_loss = loss;
    }
    return w;
}

std::vector<Label> labels_of(const std::vector<Document>& docs) {
    std::vector<Label> y;
    y.reserve(docs.size());
    for (const Document& d : docs) y.push_back(d.label);
    return y;
}

struct Branch {
    std::vector<Detector> detectors;
};

Branch train_branch(const std::vector<Document>& docs, const EnsembleConfig& config,
                    const char* suffix, uint64_t seed_stream) {
    std::vector<TokenSequence> seqs;
    seqs.reserve(docs.size());
    for (const Document& d : docs) seqs.push_back(tokenize(preprocess(d.text, config.profile)));
    auto tfidf = std::make_shared<const TfidfModel>(TfidfModel::fit(seqs, config.tfidf));

    std::vector<FeatureVector> x;
    x.reserve(seqs.size());
    for (const TokenSequence& s : seqs) x.push_back(tfidf->transform(s));
    const std::vector<Label> y = labels_of(docs);

    Branch branch;
    for (size_t i = 0; i < config.branch_kinds.size(); ++i) {
        const ClassifierKind kind = config.branch_kinds[i];
        ClassifierModel classifier = ClassifierModel::train(
            kind, x, y, config.train, derive_seed(config.seed, seed_stream + i));
        branch.detectors.emplace_back(to_string(kind) + suffix, config.profile, tfidf,
                                      std::move(classifier));
    }
    return branch;
}

}  // namespace

EnsembleModel EnsembleModel::train(const std::vector<Document>& pretrain,
                                   const std::vector<Document>& finetune,
                                   const EnsembleConfig& config) {
    if (config.branch_kinds.empty()) throw Error("ensemble needs at least one branch kind");

    EnsembleModel model;
    model.l2_lambda_ = config.l2_lambda;
    model.frozen_ = train_branch(pretrain, config, "-frozen", 0).detectors;
    for (const Detector& d : model.frozen_) model.stage1_snapshots_.push_back(d.serialize());

    model.fresh_ = train_branch(finetune, config, "-fresh", 100).detectors;

    std::vector<std::vector<double>> inputs;
    inputs.reserve(finetune.size());
    for (const Document& d : finetune) inputs.push_back(model.branch_probs(d.text));
    model.meta_weights_ = train_meta(inputs, labels_of(finetune), config.l2_lambda);
    return model;
}

std::vector<double> EnsembleModel::branch_probs(const std::string& text) const {
    std::vector<double> probs;
    probs.reserve(frozen_.size() + fresh_.size());
    for (const Detector& d : frozen_) probs.push_back(d.predict_proba_text(text));
    for (const Detector& d : fresh_) probs.push_back(d.predict_proba_text(text));
    return probs;
}

double EnsembleModel::predict_from_branch_probs(const std::vector<double>& probs) const {
    if (meta_weights_.size() != probs.size() + 1) {
        throw UntrainedModelError("meta weights do not match branch count");
    }
    double z = meta_weights_.back();
    for (size_t i = 0; i < probs.size(); ++i) z += meta_weights_[i] * probs[i];
    return sigmoid(z);
}

double EnsembleModel::predict_proba_text(const std::string& text) const {
    // A branchless ensemble with a lone bias weight is still well defined;
    // the weight/branch size check below rejects genuinely untrained models.
    return predict_from_branch_probs(branch_probs(text));
}

std::string EnsembleModel::serialize() const {
    json frozen = json::array();
    for (const Detector& d : frozen_) frozen.push_back(json::parse(d.serialize()));
    json fresh = json::array();
    for (const Detector& d : fresh_) fresh.push_back(json::parse(d.serialize()));
    json payload{{"frozen", std::move(frozen)},
                 {"fresh", std::move(fresh)},
                 {"meta_weights", meta_weights_},
                 {"l2_lambda", l2_lambda_}};
    return envelope("ensemble", std::move(payload)).dump();
}

EnsembleModel EnsembleModel::deserialize(const std::string& json_text) {
    const json payload = parse_envelope(json_text, {"ensemble"}, nullptr);
    try {
        std::vector<Detector> frozen, fresh;
        for (const json& d : payload.at("frozen")) frozen.push_back(Detector::deserialize(d.dump()));
        for (const json& d : payload.at("fresh")) fresh.push_back(Detector::deserialize(d.dump()));
        EnsembleModel model(std::move(frozen), std::move(fresh),
                            payload.at("meta_weights").get<std::vector<double>>(),
                            payload.at("l2_lambda").get<double>());
        if (model.meta_weights_.size() !=
            model.frozen_.size() + model.fresh_.size() + 1) {
            throw ParseError("meta weight count does not match branches");
        }
        // The loaded frozen bytes are by construction the frozen snapshot.
        for (const Detector& d : model.frozen_) {
            model.stage1_snapshots_.push_back(d.serialize());
        }
        return model;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad ensemble payload: ") + e.what());
    }
}

DetectionMetrics DetectionMetrics::from_confusion(long tp, long fp, long tn, long fn) {
    DetectionMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    const double total = static_cast<double>(tp + fp + tn + fn);
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.accuracy = total > 0.0 ? static_cast<double>(tp + tn) / total : 0.0;
    return m;
}

DetectionMetrics evaluate(const TextModel& model, const std::vector<Document>& test) {
    if (test.empty()) throw EmptyTestSetError("evaluation needs at least one document");
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (const Document& doc : test) {
        const Label predicted = model.classify(doc.text);
        if (doc.label == Label::Ai) {
            predicted == Label::Ai ? ++tp : ++fn;
        } else {
            predicted == Label::Ai ? ++fp : ++tn;
        }
    }
    return DetectionMetrics::from_confusion(tp, fp, tn, fn);
}

DetectionMetrics evaluate_features(const ClassifierModel& model,
                                   const std::vector<FeatureVector>& x,
                                   const std::vector<Label>& y) {
    if (x.empty() || x.size() != y.size()) {
        throw EmptyTestSetError("evaluation needs matching features and labels");
    }
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const bool ai = model.predict_proba(x[i]) >= 0.5;
        if (y[i] == Label::Ai) {
            ai ? ++tp : ++fn;
        } else {
            ai ? ++fp : ++tn;
        }
    }
    return DetectionMetrics::from_confusion(tp, fp, tn, fn);
}

void save_model(const Detector& model, const std::string& path) {
    atomic_write_file(path, model.serialize());
}

void save_model(const EnsembleModel& model, const std::string& path) {
    atomic_write_file(path, model.serialize());
}

std::string model_file_kind(const std::string& path) {
    std::string kind;
    parse_envelope(read_text_file(path),
                   {"detector", "ensemble", "logistic", "gbdt", "naive_bayes"}, &kind);
    return kind;
}

Detector load_detector(const std::string& path) {
    return Detector::deserialize(read_text_file(path));
}

EnsembleModel load_ensemble(const std::string& path) {
    return EnsembleModel::deserialize(read_text_file(path));
}

}  // namespace aigt
