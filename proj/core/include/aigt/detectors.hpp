#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "aigt/features.hpp"
#include "aigt/types.hpp"

namespace aigt {

enum class ClassifierKind : uint8_t { Logistic, Gbdt, NaiveBayes };

std::string to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(const std::string& s);

struct LogisticConfig {
    double learning_rate = 0.5;
    size_t max_epochs = 500;
    double l2_lambda = 1e-4;
    double tol = 1e-8;         // stop when the loss delta falls below this
    bool penalize_bias = false;
};

struct GbdtConfig {
    int max_depth = 3;
    int n_rounds = 100;
    double learning_rate = 0.1;
    double reg_lambda = 1.0;      // leaf weight shrinkage
    double min_child_weight = 1e-3;
};

struct NaiveBayesConfig {
    double alpha = 1.0;  // Laplace smoothing
};

struct TrainConfig {
    size_t n_features = 0;  // 0 = infer from the data (max index + 1)
    LogisticConfig logistic;
    GbdtConfig gbdt;
    NaiveBayesConfig naive_bayes;
};

struct LogisticPayload {
    std::vector<double> weights;
    double bias = 0.0;
};

struct GbdtNode {
    int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int32_t left = -1;
    int32_t right = -1;
    double value = 0.0;  // leaf weight
};

struct GbdtTree {
    std::vector<GbdtNode> nodes;  // node 0 is the root
};

struct GbdtPayload {
    double base_score = 0.0;  // prior log-odds
    double learning_rate = 0.1;
    size_t n_features = 0;
    std::vector<GbdtTree> trees;
};

struct NaiveBayesPayload {
    double log_prior_ai = 0.0;
    double log_prior_human = 0.0;
    std::vector<double> log_cond_ai;  // per feature index
    std::vector<double> log_cond_human;
};

// A binary human/AI probability model over feature vectors. Ai is the
// positive class everywhere.
class ClassifierModel {
public:
    ClassifierModel() = default;

    static ClassifierModel train(ClassifierKind kind, const std::vector<FeatureVector>& x,
                                 const std::vector<Label>& y, const TrainConfig& config,
                                 uint64_t seed);

    double predict_proba(const FeatureVector& features) const;

    bool trained() const { return !std::holds_alternative<std::monostate>(payload_); }
    ClassifierKind kind() const { return kind_; }

    std::string serialize() const;
    static ClassifierModel deserialize(const std::string& json_text);

    ClassifierModel(ClassifierKind kind,
                    std::variant<std::monostate, LogisticPayload, GbdtPayload, NaiveBayesPayload> payload)
        : kind_(kind), payload_(std::move(payload)) {}

private:
    ClassifierKind kind_ = ClassifierKind::Logistic;
    std::variant<std::monostate, LogisticPayload, GbdtPayload, NaiveBayesPayload> payload_;
};

// Anything that maps raw text to P(Ai).
class TextModel {
public:
    virtual ~TextModel() = default;
    virtual double predict_proba_text(const std::string& text) const = 0;

    // The 0.5 boundary is inclusive on the Ai side.
    Label classify(const std::string& text) const {
        return predict_proba_text(text) >= 0.5 ? Label::Ai : Label::Human;
    }
};

// Deployable unit: preprocessing profile + feature space + classifier.
class Detector : public TextModel {
public:
    Detector() = default;
    Detector(std::string name, PreprocessProfile profile,
             std::shared_ptr<const TfidfModel> features, ClassifierModel classifier);

    double predict_proba_text(const std::string& text) const override;
    double predict_proba(const FeatureVector& features) const;
    FeatureVector featurize(const std::string& text) const;

    const std::string& name() const { return name_; }
    const PreprocessProfile& profile() const { return profile_; }
    const TfidfModel& feature_space() const;
    const ClassifierModel& classifier() const { return classifier_; }

    std::string serialize() const;
    static Detector deserialize(const std::string& json_text);

private:
    std::string name_;
    PreprocessProfile profile_;
    std::shared_ptr<const TfidfModel> features_;
    ClassifierModel classifier_;
};

struct EnsembleConfig {
    std::vector<ClassifierKind> branch_kinds;  // used for both branches
    TfidfOptions tfidf;
    PreprocessProfile profile;
    TrainConfig train;
    double l2_lambda = 1e-2;
    uint64_t seed = 0;
};

// Two-branch stacked ensemble: branch models pretrained then frozen on one
// corpus, fresh models trained on another, and a dense meta layer (logistic,
// L2 on every weight including the bias) fit on concatenated branch
// probabilities. Threshold fixed at 0.5.
class EnsembleModel : public TextModel {
public:
    EnsembleModel() = default;
    EnsembleModel(std::vector<Detector> frozen, std::vector<Detector> fresh,
                  std::vector<double> meta_weights, double l2_lambda);

    static EnsembleModel train(const std::vector<Document>& pretrain,
                               const std::vector<Document>& finetune,
                               const EnsembleConfig& config);

    double predict_proba_text(const std::string& text) const override;
    std::vector<double> branch_probs(const std::string& text) const;  // frozen then fresh
    double predict_from_branch_probs(const std::vector<double>& probs) const;

    const std::vector<Detector>& frozen_branch() const { return frozen_; }
    const std::vector<Detector>& fresh_branch() const { return fresh_; }
    const std::vector<double>& meta_weights() const { return meta_weights_; }
    double l2_lambda() const { return l2_lambda_; }
    static constexpr double kThreshold = 0.5;

    // Serialized frozen detectors captured when stage 1 finished; later
    // stages must leave the branch byte-identical to these.
    const std::vector<std::string>& stage1_snapshots() const { return stage1_snapshots_; }

    std::string serialize() const;
    static EnsembleModel deserialize(const std::string& json_text);

private:
    std::vector<Detector> frozen_;
    std::vector<Detector> fresh_;
    std::vector<double> meta_weights_;  // one per branch output, bias last
    double l2_lambda_ = 0.0;
    std::vector<std::string> stage1_snapshots_;
};

struct DetectionMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;

    static DetectionMetrics from_confusion(long tp, long fp, long tn, long fn);
};

DetectionMetrics evaluate(const TextModel& model, const std::vector<Document>& test);
DetectionMetrics evaluate_features(const ClassifierModel& model,
                                   const std::vector<FeatureVector>& x,
                                   const std::vector<Label>& y);

// Versioned JSON files ({"schema":1,"kind":...,"payload":...}); the ensemble
// file embeds its branch detectors inline.
void save_model(const Detector& model, const std::string& path);
void save_model(const EnsembleModel& model, const std::string& path);
std::string model_file_kind(const std::string& path);
Detector load_detector(const std::string& path);
EnsembleModel load_ensemble(const std::string& path);

double sigmoid(double z);

}  // namespace aigt
