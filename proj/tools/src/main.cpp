#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "aigt/errors.hpp"
#include "experiment.hpp"

#include "CLI11.hpp"

namespace {

using aigt::cli::ExperimentConfig;
using aigt::cli::GlobalOptions;
using aigt::cli::UsageError;

ExperimentConfig config_or_default(const GlobalOptions& options) {
    if (options.config_path.empty()) return ExperimentConfig{};
    return aigt::cli::load_experiment_config(options.config_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detection-and-evasion toolkit for AI-generated text"};
    app.require_subcommand(1);
    app.fallthrough(true);

    GlobalOptions options;
    app.add_option("--config", options.config_path, "Experiment config (JSON)");
    app.add_option("--seed", options.seeds, "Seed list; overrides the config");
    app.add_option("--out", options.out_dir, "Output directory; overrides the config");
    app.add_flag("--force", options.force, "Overwrite an existing run directory");
    app.add_option("--workers", options.workers, "Max parallel scenarios (0 = auto)");
    app.add_flag("--mock-llm", options.mock_llm, "Use the offline mock client");

    std::string ingest_input, ingest_format = "auto";
    CLI::App* ingest = app.add_subcommand("ingest", "Validate and normalize a dataset");
    ingest->add_option("input", ingest_input, "Dataset path (.jsonl or .csv)");
    ingest->add_option("--format", ingest_format, "auto|jsonl|csv");

    std::string split_input;
    CLI::App* split = app.add_subcommand("split", "Stratified train/validation/test split");
    split->add_option("input", split_input, "Dataset path");

    std::string augment_input, augment_output;
    CLI::App* augment = app.add_subcommand("augment", "Emit augmented variants of a dataset");
    augment->add_option("input", augment_input, "Dataset path");
    augment->add_option("--output", augment_output, "Augmented dataset path");

    CLI::App* train = app.add_subcommand("train", "Train branch detectors and the ensemble");

    std::string eval_models, eval_data, eval_output;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate saved models on a dataset");
    evaluate->add_option("--models", eval_models, "Directory of model files");
    evaluate->add_option("--data", eval_data, "Dataset path");
    evaluate->add_option("--output", eval_output, "Metrics CSV path (stdout when omitted)");

    std::string explain_model, explain_data, explain_method = "lime", explain_output;
    size_t explain_k = 5, explain_samples = 1000, explain_max_exact = 12;
    uint64_t explain_seed = 1;
    CLI::App* explain = app.add_subcommand("explain", "Attribute model decisions to tokens");
    explain->add_option("--model", explain_model, "Model file");
    explain->add_option("--data", explain_data, "Dataset path");
    explain->add_option("--method", explain_method, "shap_exact|shap_sampled|lime|random");
    explain->add_option("--k", explain_k, "Token budget recorded with the output");
    explain->add_option("--samples", explain_samples, "Permutations or perturbations");
    explain->add_option("--max-exact-tokens", explain_max_exact, "Exact-method token cap");
    explain->add_option("--attribution-seed", explain_seed, "Seed for sampled methods");
    explain->add_option("--output", explain_output, "Attribution JSONL path");

    std::string rewrite_data, rewrite_attr, rewrite_strategy = "hsr", rewrite_embeddings,
                rewrite_out;
    size_t rewrite_k = 5;
    CLI::App* rewrite = app.add_subcommand("rewrite", "Rewrite influential tokens");
    rewrite->add_option("--data", rewrite_data, "Dataset path");
    rewrite->add_option("--attributions", rewrite_attr, "Attribution JSONL path");
    rewrite->add_option("--strategy", rewrite_strategy, "hsr|psr|gpt|gpt_genre");
    rewrite->add_option("--k", rewrite_k, "Token budget");
    rewrite->add_option("--embeddings", rewrite_embeddings, "Embedding file (hsr/psr)");
    rewrite->add_option("--output", rewrite_out, "Output directory for plans + rewrites");

    CLI::App* attack = app.add_subcommand("attack", "Run the explainer x strategy grid");

    std::string report_run;
    CLI::App* report = app.add_subcommand("report", "Rebuild consolidated reports from a run");
    report->add_option("--run", report_run, "Run directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& error) {
        app.exit(error);
        return 2;
    }

    try {
        if (*ingest) {
            std::string out = options.out_dir;
            return aigt::cli::cmd_ingest(ingest_input, ingest_format, out);
        }
        if (*split) {
            return aigt::cli::cmd_split(config_or_default(options), options, split_input);
        }
        if (*augment) {
            std::string out = augment_output.empty()
                                  ? (options.out_dir.empty() ? "" : options.out_dir +
                                                                        "/augmented.jsonl")
                                  : augment_output;
            return aigt::cli::cmd_augment(config_or_default(options), options, augment_input, out);
        }
        if (*train) {
            return aigt::cli::cmd_train(aigt::cli::load_experiment_config(options.config_path),
                                        options);
        }
        if (*evaluate) {
            return aigt::cli::cmd_evaluate(eval_models, eval_data, eval_output);
        }
        if (*explain) {
            aigt::cli::ExplainerSpec spec;
            try {
                spec.method = aigt::parse_attribution_method(explain_method);
            } catch (const aigt::ParseError& error) {
                throw UsageError(error.what());
            }
            spec.k = explain_k;
            spec.samples = explain_samples;
            spec.max_exact_tokens = explain_max_exact;
            return aigt::cli::cmd_explain(config_or_default(options), options, explain_model,
                                          explain_data, spec, explain_seed, explain_output);
        }
        if (*rewrite) {
            aigt::Strategy strategy;
            try {
                strategy = aigt::parse_strategy(rewrite_strategy);
            } catch (const aigt::ParseError& error) {
                throw UsageError(error.what());
            }
            return aigt::cli::cmd_rewrite(config_or_default(options), options, rewrite_data,
                                          rewrite_attr, strategy, rewrite_k, rewrite_embeddings,
                                          rewrite_out);
        }
        if (*attack) {
            return aigt::cli::cmd_attack(aigt::cli::load_experiment_config(options.config_path),
                                         options);
        }
        if (*report) {
            const std::string run =
                report_run.empty() ? (options.out_dir.empty() ? "" : options.out_dir) : report_run;
            return aigt::cli::cmd_report(run);
        }
    } catch (const UsageError& error) {
        std::fprintf(stderr, "error: %s\n", error.what());
        return 2;
    } catch (const std::exception& error) {
        std::fprintf(stderr, "error: %s\n", error.what());
        return 1;
    }
    return 2;
}
