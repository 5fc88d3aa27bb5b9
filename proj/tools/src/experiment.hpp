#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "aigt/corpus.hpp"
#include "aigt/detectors.hpp"
#include "aigt/embeddings.hpp"
#include "aigt/explain.hpp"
#include "aigt/llmclient.hpp"
#include "aigt/metrics.hpp"
#include "aigt/rewrite.hpp"

namespace aigt::cli {

// Command-line or config-file mistakes; mapped to exit code 2. Everything
// else thrown by a command maps to exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExplainerSpec {
    AttributionMethod method = AttributionMethod::Lime;
    size_t k = 5;               // token budget (count mode)
    double threshold = 0.0;     // used instead of k when use_threshold
    bool use_threshold = false;
    size_t samples = 1000;      // permutations or perturbations
    size_t max_exact_tokens = 12;
};

struct MockSpec {
    std::vector<MockRule> rules;
    MockDefault fallback = MockDefault::EchoToken;
    std::string fixed_reply;
};

struct ExperimentConfig {
    std::string pretrain_path;
    std::string finetune_path;
    std::string test_path;

    SplitSpec split;

    std::vector<AugmentOp> augment_ops;
    size_t augment_variants = 0;  // 0 disables augmentation
    std::string lexicon_path;

    PreprocessProfile profile;
    TfidfOptions tfidf;

    std::vector<ClassifierKind> branches = {ClassifierKind::Logistic, ClassifierKind::Gbdt,
                                            ClassifierKind::NaiveBayes};
    TrainConfig train;
    double meta_l2 = 1e-2;

    std::vector<ExplainerSpec> explainers;
    std::vector<Strategy> strategies;
    std::string target_model = "ensemble";

    EmbeddingOptions embedding;
    uint64_t min_human_freq = 3;
    size_t top_n = 10;

    ClientConfig client;
    MockSpec mock;

    std::vector<uint64_t> seeds = {1};
    std::string out_dir = "run";
    bool fail_fast = false;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
// Stable under key reordering: objects re-serialize with sorted keys.
uint64_t config_hash(const std::string& json_text);

// Options shared by every subcommand.
struct GlobalOptions {
    std::string config_path;
    std::vector<uint64_t> seeds;  // overrides config seeds when non-empty
    std::string out_dir;          // overrides config out_dir when non-empty
    bool force = false;
    size_t workers = 0;  // 0 = one per scenario, capped by hardware
    bool mock_llm = false;
};

// Tracks every file a run emits and guards reruns: an existing manifest with
// the same config hash refuses to be overwritten unless forced.
class RunManifest {
public:
    RunManifest(std::string out_dir, uint64_t config_hash, std::vector<uint64_t> seeds,
                bool force);

    // Records the path (relative to the run dir) and writes atomically.
    void write_file(const std::string& relative_path, const std::string& content);
    // For files written by other components; records without writing.
    void record(const std::string& relative_path);
    void finish();

    std::string absolute(const std::string& relative_path) const;

private:
    void save(bool finished);

    std::string out_dir_;
    uint64_t config_hash_ = 0;
    std::vector<uint64_t> seeds_;
    std::string started_at_;
    std::vector<std::string> outputs_;  // kept sorted
    mutable std::mutex mutex_;
};

struct NamedModel {
    std::string name;
    std::shared_ptr<TextModel> model;
};

// Detectors sorted by name, ensemble last.
std::vector<NamedModel> load_models(const std::string& models_dir);

struct BreakdownRow {
    std::string model;
    std::string language;  // "all" aggregates
    std::string domain;    // "all" aggregates
    DetectionMetrics metrics;
};

// One row per model x (language, domain) group present in docs, plus an
// all/all aggregate per model.
std::vector<BreakdownRow> evaluation_breakdown(const std::vector<NamedModel>& models,
                                               const std::vector<Document>& docs);
std::string breakdown_csv(const std::vector<BreakdownRow>& rows);

std::string attribution_to_jsonl_line(const AttributionVector& attribution);
AttributionVector attribution_from_jsonl_line(const std::string& line);
std::string plan_to_jsonl_line(const ReplacementPlan& plan);
ReplacementPlan plan_from_jsonl_line(const std::string& line);

AttributionVector attribute(const ExplainerSpec& spec, const TokenScorer& scorer,
                            const std::string& doc_id, const std::vector<std::string>& tokens,
                            uint64_t seed);
TokenSelection select(const ExplainerSpec& spec, const AttributionVector& attribution);

std::string overlap_to_json(const OverlapReport& report);

// One consolidated line of the scenario grid; deltas are vs the none/none
// baseline of the same model.
struct ReportRow {
    std::string explainer;
    std::string strategy;
    std::string model;
    double f1 = 0.0;
    double acc = 0.0;
    double delta_f1_pp = 0.0;
    double delta_acc_pp = 0.0;
    double bleu = 0.0;
    double rouge1 = 0.0;
    double rougeL = 0.0;
    double flip_rate = 0.0;
};

// Rebuilds per-seed and consolidated reports from the files under
// run_dir/attack; returns the relative paths written.
std::vector<std::string> rebuild_reports(const std::string& run_dir);

std::string report_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(const std::string& text);
std::string report_json(const std::vector<uint64_t>& seeds,
                        const std::map<uint64_t, std::vector<ReportRow>>& per_seed,
                        const std::vector<ReportRow>& mean);
// Rows averaged per (explainer, strategy, model) key, in first-seed order.
std::vector<ReportRow> mean_rows(const std::map<uint64_t, std::vector<ReportRow>>& per_seed);

int cmd_ingest(const std::string& input, const std::string& format, const std::string& output);
int cmd_split(const ExperimentConfig& config, const GlobalOptions& options,
              const std::string& input);
int cmd_augment(const ExperimentConfig& config, const GlobalOptions& options,
                const std::string& input, const std::string& output);
int cmd_train(const ExperimentConfig& config, const GlobalOptions& options);
int cmd_evaluate(const std::string& models_dir, const std::string& data_path,
                 const std::string& output);
int cmd_explain(const ExperimentConfig& config, const GlobalOptions& options,
                const std::string& model_path, const std::string& data_path,
                const ExplainerSpec& spec, uint64_t seed, const std::string& output);
int cmd_rewrite(const ExperimentConfig& config, const GlobalOptions& options,
                const std::string& data_path, const std::string& attributions_path,
                Strategy strategy, size_t k, const std::string& embeddings_path,
                const std::string& out_dir);
int cmd_attack(const ExperimentConfig& config, const GlobalOptions& options);
int cmd_report(const std::string& run_dir);

}  // namespace aigt::cli
