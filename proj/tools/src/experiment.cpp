#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <future>
#include <semaphore>
#include <set>
#include <sstream>
#include <thread>

#include "aigt/errors.hpp"
#include "aigt/features.hpp"
#include "aigt/io.hpp"
#include "aigt/rng.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aigt::cli {

namespace {

const json& require(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw UsageError(std::string("config is missing key '") + key + "'");
    return *it;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw UsageError(std::string("config key '") + key + "' has the wrong type");
    }
}

void check_keys(const json& j, const char* where, const std::vector<std::string>& allowed) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw UsageError(std::string("unknown config key '") + key + "' in " + where);
        }
    }
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm parts{};
    gmtime_r(&t, &parts);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buffer;
}

DatasetFormat format_for_path(const std::string& path) {
    const auto dot = path.rfind('.');
    if (dot != std::string::npos && to_lower_ascii(path.substr(dot)) == ".csv") {
        return DatasetFormat::Csv;
    }
    return DatasetFormat::Jsonl;
}

void require_path(const std::string& path, const char* role) {
    if (path.empty()) throw UsageError(std::string("no ") + role + " dataset configured");
    if (!fs::exists(path)) {
        throw UsageError(std::string(role) + " dataset path does not exist: " + path);
    }
}

// Stage names make failures attributable from the exit message alone.
template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& error) {
        throw Error(std::string("stage ") + stage + ": " + error.what());
    }
}

std::unique_ptr<LlmClient> make_client(const ExperimentConfig& config, bool mock_llm) {
    if (mock_llm) {
        return std::make_unique<MockLlmClient>(config.mock.rules, config.mock.fallback,
                                               config.mock.fixed_reply);
    }
    if (config.client.base_url.empty()) return nullptr;
    return std::make_unique<HttpLlmClient>(config.client);
}

bool needs_client(const std::vector<Strategy>& strategies) {
    return std::any_of(strategies.begin(), strategies.end(), [](Strategy s) {
        return s == Strategy::Gpt || s == Strategy::GptGenre;
    });
}

bool needs_embeddings(const std::vector<Strategy>& strategies) {
    return std::any_of(strategies.begin(), strategies.end(), [](Strategy s) {
        return s == Strategy::Hsr || s == Strategy::Psr;
    });
}

// Duplicate methods get an ordinal suffix so scenario names stay unique.
std::vector<std::string> explainer_labels(const std::vector<ExplainerSpec>& specs) {
    std::vector<std::string> labels;
    labels.reserve(specs.size());
    std::map<std::string, int> seen;
    for (const ExplainerSpec& spec : specs) {
        std::string label = to_string(spec.method);
        const int n = seen[label]++;
        if (n > 0) label += "-" + std::to_string(n + 1);
        labels.push_back(label);
    }
    return labels;
}

std::vector<Document> augmented_corpus(const std::vector<Document>& docs,
                                       const ExperimentConfig& config, uint64_t seed,
                                       LlmClient* client) {
    std::unique_ptr<LexiconSynonyms> lexicon;
    if (!config.lexicon_path.empty()) {
        lexicon = std::make_unique<LexiconSynonyms>(LexiconSynonyms::from_file(config.lexicon_path));
    }
    std::vector<Document> out = docs;
    for (const Document& doc : docs) {
        const auto variants = augment(doc, config.augment_ops, config.augment_variants,
                                      derive_seed(seed, fnv1a64(doc.id)), lexicon.get(), client);
        for (const auto& [variant, record] : variants) out.push_back(variant);
    }
    return out;
}

// Sidecar of models/embeddings.txt: "term count" lines over the human corpus.
void load_frequencies(EmbeddingSpace& space, const std::string& path) {
    std::istringstream lines(read_text_file(path));
    std::string line;
    size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::istringstream fields(line);
        std::string term;
        uint64_t count = 0;
        if (!(fields >> term >> count)) {
            throw FormatError("bad frequency line " + std::to_string(line_no) + " in " + path);
        }
        space.human_frequency[term] = count;
    }
}

std::string dataset_to_jsonl(const std::vector<Document>& docs) {
    std::string out;
    for (const Document& doc : docs) {
        json row = {
            {"id", doc.id},         {"text", doc.text},
            {"label", to_string(doc.label)},
            {"language", to_string(doc.language)},
            {"domain", to_string(doc.domain)},
        };
        if (doc.source) row["source"] = *doc.source;
        out += row.dump();
        out += '\n';
    }
    return out;
}

struct ScenarioOutcome {
    std::string explainer;
    std::string strategy;
    std::vector<ReportRow> rows;  // empty on failure
    std::string error;
};

struct ScenarioJob {
    size_t index = 0;
    ExplainerSpec spec;
    std::string explainer_label;
    Strategy strategy = Strategy::Hsr;
    uint64_t run_seed = 0;
    std::string seed_dir;  // relative to the run dir
};

std::string scenario_metrics_csv(const std::vector<ReportRow>& rows) {
    std::string out = "explainer,strategy,model,f1,acc,bleu,rouge1,rougeL,flip_rate\n";
    for (const ReportRow& row : rows) {
        out += csv_escape(row.explainer) + ',' + csv_escape(row.strategy) + ',' +
               csv_escape(row.model) + ',' + format_double(row.f1, 6) + ',' +
               format_double(row.acc, 6) + ',' + format_double(row.bleu, 6) + ',' +
               format_double(row.rouge1, 6) + ',' + format_double(row.rougeL, 6) + ',' +
               format_double(row.flip_rate, 2) + '\n';
    }
    return out;
}

std::string baseline_csv(const std::vector<NamedModel>& models,
                         const std::map<std::string, DetectionMetrics>& metrics) {
    std::string out = "model,f1,acc,precision,recall\n";
    for (const NamedModel& named : models) {
        const DetectionMetrics& m = metrics.at(named.name);
        out += csv_escape(named.name) + ',' + format_double(m.f1, 6) + ',' +
               format_double(m.accuracy, 6) + ',' + format_double(m.precision, 6) + ',' +
               format_double(m.recall, 6) + '\n';
    }
    return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& error) {
        throw UsageError(std::string("config is not valid JSON: ") + error.what());
    }
    if (!j.is_object()) throw UsageError("config root must be a JSON object");
    check_keys(j, "the config root",
               {"datasets", "split", "augment", "features", "detectors", "explainers",
                "strategies", "target_model", "rewrite", "client", "mock", "seeds", "out",
                "fail_fast"});

    ExperimentConfig config;

    if (j.contains("datasets")) {
        const json& d = j["datasets"];
        check_keys(d, "datasets", {"pretrain", "finetune", "test"});
        config.pretrain_path = get_or<std::string>(d, "pretrain", "");
        config.finetune_path = get_or<std::string>(d, "finetune", "");
        config.test_path = get_or<std::string>(d, "test", "");
    }

    if (j.contains("split")) {
        const json& s = j["split"];
        check_keys(s, "split", {"test_fraction", "validation_fraction", "strata"});
        config.split.test_fraction = get_or<double>(s, "test_fraction", 0.1);
        config.split.validation_fraction = get_or<double>(s, "validation_fraction", 0.0);
        config.split.strata = get_or<std::vector<std::string>>(s, "strata", {});
    }

    if (j.contains("augment")) {
        const json& a = j["augment"];
        check_keys(a, "augment", {"variants", "ops", "lexicon"});
        config.augment_variants = get_or<size_t>(a, "variants", 1);
        config.lexicon_path = get_or<std::string>(a, "lexicon", "");
        for (const std::string& name :
             get_or<std::vector<std::string>>(a, "ops", {"swap", "delete", "spelling"})) {
            try {
                config.augment_ops.push_back(parse_augment_op(name));
            } catch (const ParseError& error) {
                throw UsageError(error.what());
            }
        }
    }

    if (j.contains("features")) {
        const json& f = j["features"];
        check_keys(f, "features",
                   {"max_features", "ngram_max", "lowercase", "strip_urls", "strip_punct",
                    "lemmatize"});
        config.tfidf.max_features = get_or<size_t>(f, "max_features", 5000);
        config.tfidf.ngram_max = get_or<int>(f, "ngram_max", 1);
        if (config.tfidf.ngram_max < 1 || config.tfidf.ngram_max > 2) {
            throw UsageError("features.ngram_max must be 1 or 2");
        }
        config.profile.lowercase = get_or<bool>(f, "lowercase", true);
        config.profile.strip_urls = get_or<bool>(f, "strip_urls", true);
        config.profile.strip_punct = get_or<bool>(f, "strip_punct", true);
        config.profile.lemmatize = get_or<bool>(f, "lemmatize", true);
    }

    if (j.contains("detectors")) {
        const json& d = j["detectors"];
        check_keys(d, "detectors", {"branches", "meta_l2", "logistic", "gbdt", "naive_bayes"});
        if (d.contains("branches")) {
            config.branches.clear();
            for (const std::string& name : d["branches"].get<std::vector<std::string>>()) {
                try {
                    config.branches.push_back(parse_classifier_kind(name));
                } catch (const ParseError& error) {
                    throw UsageError(error.what());
                }
            }
            if (config.branches.empty()) throw UsageError("detectors.branches must be non-empty");
        }
        config.meta_l2 = get_or<double>(d, "meta_l2", 1e-2);
        if (d.contains("logistic")) {
            const json& l = d["logistic"];
            check_keys(l, "detectors.logistic", {"learning_rate", "max_epochs", "l2_lambda", "tol"});
            config.train.logistic.learning_rate =
                get_or<double>(l, "learning_rate", config.train.logistic.learning_rate);
            config.train.logistic.max_epochs =
                get_or<size_t>(l, "max_epochs", config.train.logistic.max_epochs);
            config.train.logistic.l2_lambda =
                get_or<double>(l, "l2_lambda", config.train.logistic.l2_lambda);
            config.train.logistic.tol = get_or<double>(l, "tol", config.train.logistic.tol);
        }
        if (d.contains("gbdt")) {
            const json& g = d["gbdt"];
            check_keys(g, "detectors.gbdt",
                       {"max_depth", "n_rounds", "learning_rate", "reg_lambda",
                        "min_child_weight"});
            config.train.gbdt.max_depth = get_or<int>(g, "max_depth", config.train.gbdt.max_depth);
            config.train.gbdt.n_rounds = get_or<int>(g, "n_rounds", config.train.gbdt.n_rounds);
            config.train.gbdt.learning_rate =
                get_or<double>(g, "learning_rate", config.train.gbdt.learning_rate);
            config.train.gbdt.reg_lambda =
                get_or<double>(g, "reg_lambda", config.train.gbdt.reg_lambda);
            config.train.gbdt.min_child_weight =
                get_or<double>(g, "min_child_weight", config.train.gbdt.min_child_weight);
        }
        if (d.contains("naive_bayes")) {
            const json& n = d["naive_bayes"];
            check_keys(n, "detectors.naive_bayes", {"alpha"});
            config.train.naive_bayes.alpha =
                get_or<double>(n, "alpha", config.train.naive_bayes.alpha);
        }
    }

    if (j.contains("explainers")) {
        if (!j["explainers"].is_array()) throw UsageError("explainers must be an array");
        for (const json& e : j["explainers"]) {
            check_keys(e, "an explainer entry",
                       {"method", "k", "threshold", "samples", "max_exact_tokens"});
            ExplainerSpec spec;
            try {
                spec.method = parse_attribution_method(require(e, "method").get<std::string>());
            } catch (const ParseError& error) {
                throw UsageError(error.what());
            }
            spec.k = get_or<size_t>(e, "k", 5);
            spec.samples = get_or<size_t>(e, "samples", 1000);
            spec.max_exact_tokens = get_or<size_t>(e, "max_exact_tokens", 12);
            if (e.contains("threshold")) {
                spec.use_threshold = true;
                spec.threshold = e["threshold"].get<double>();
            }
            config.explainers.push_back(spec);
        }
    }
    if (config.explainers.empty()) {
        ExplainerSpec lime;
        lime.method = AttributionMethod::Lime;
        ExplainerSpec random;
        random.method = AttributionMethod::Random;
        config.explainers = {lime, random};
    }

    if (j.contains("strategies")) {
        for (const std::string& name : j["strategies"].get<std::vector<std::string>>()) {
            try {
                config.strategies.push_back(parse_strategy(name));
            } catch (const ParseError& error) {
                throw UsageError(error.what());
            }
        }
    }
    if (config.strategies.empty()) config.strategies = {Strategy::Hsr};

    config.target_model = get_or<std::string>(j, "target_model", "ensemble");

    if (j.contains("rewrite")) {
        const json& r = j["rewrite"];
        check_keys(r, "rewrite",
                   {"min_human_freq", "top_n", "dim", "window", "min_count", "max_vocab"});
        config.min_human_freq = get_or<uint64_t>(r, "min_human_freq", 3);
        config.top_n = get_or<size_t>(r, "top_n", 10);
        config.embedding.dim = get_or<size_t>(r, "dim", config.embedding.dim);
        config.embedding.window = get_or<size_t>(r, "window", config.embedding.window);
        config.embedding.min_count = get_or<uint64_t>(r, "min_count", config.embedding.min_count);
        config.embedding.max_vocab = get_or<size_t>(r, "max_vocab", config.embedding.max_vocab);
    }

    if (j.contains("client")) {
        const json& c = j["client"];
        check_keys(c, "client",
                   {"base_url", "api_key_env", "model_name", "temperature", "timeout_ms",
                    "max_retries", "max_in_flight"});
        config.client.base_url = get_or<std::string>(c, "base_url", "");
        config.client.api_key_env = get_or<std::string>(c, "api_key_env", "AIGT_API_KEY");
        config.client.model_name = get_or<std::string>(c, "model_name", "gpt-4o-mini");
        config.client.temperature = get_or<double>(c, "temperature", 0.0);
        config.client.timeout = std::chrono::milliseconds(get_or<int64_t>(c, "timeout_ms", 30000));
        config.client.max_retries = get_or<int>(c, "max_retries", 3);
        config.client.max_in_flight = get_or<int>(c, "max_in_flight", 4);
    }

    if (j.contains("mock")) {
        const json& m = j["mock"];
        check_keys(m, "mock", {"rules", "default", "fixed_reply"});
        if (m.contains("rules")) {
            for (const json& rule : m["rules"]) {
                check_keys(rule, "a mock rule", {"pattern", "replacement"});
                config.mock.rules.push_back(MockRule{require(rule, "pattern").get<std::string>(),
                                                     require(rule, "replacement").get<std::string>()});
            }
        }
        const std::string fallback = get_or<std::string>(m, "default", "echo");
        if (fallback == "echo") {
            config.mock.fallback = MockDefault::EchoToken;
        } else if (fallback == "fixed") {
            config.mock.fallback = MockDefault::Fixed;
        } else {
            throw UsageError("mock.default must be 'echo' or 'fixed'");
        }
        config.mock.fixed_reply = get_or<std::string>(m, "fixed_reply", "");
    }

    config.seeds = get_or<std::vector<uint64_t>>(j, "seeds", {1});
    if (config.seeds.empty()) throw UsageError("seeds must be non-empty");
    config.out_dir = get_or<std::string>(j, "out", "run");
    config.fail_fast = get_or<bool>(j, "fail_fast", false);
    return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    if (path.empty()) throw UsageError("--config is required for this command");
    if (!fs::exists(path)) throw UsageError("config path does not exist: " + path);
    return parse_experiment_config(read_text_file(path));
}

uint64_t config_hash(const std::string& json_text) {
    try {
        return fnv1a64(json::parse(json_text).dump());
    } catch (const json::exception&) {
        return fnv1a64(json_text);
    }
}

RunManifest::RunManifest(std::string out_dir, uint64_t hash, std::vector<uint64_t> seeds,
                         bool force)
    : out_dir_(std::move(out_dir)), config_hash_(hash), seeds_(std::move(seeds)),
      started_at_(utc_now()) {
    const fs::path manifest_path = fs::path(out_dir_) / "manifest.json";
    if (fs::exists(manifest_path) && !force) {
        json previous;
        try {
            previous = json::parse(read_text_file(manifest_path.string()));
        } catch (const std::exception&) {
            previous = json::object();
        }
        const std::string previous_hash = previous.value("config_hash", std::string());
        char current[32];
        std::snprintf(current, sizeof current, "%016llx",
                      static_cast<unsigned long long>(config_hash_));
        if (previous_hash == current && !previous.value("outputs", json::array()).empty()) {
            throw UsageError("run directory already holds outputs for this config; "
                             "pass --force to overwrite: " + out_dir_);
        }
    }
    save(false);
}

void RunManifest::write_file(const std::string& relative_path, const std::string& content) {
    atomic_write_file((fs::path(out_dir_) / relative_path).string(), content);
    record(relative_path);
}

void RunManifest::record(const std::string& relative_path) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = std::lower_bound(outputs_.begin(), outputs_.end(), relative_path);
    if (it == outputs_.end() || *it != relative_path) outputs_.insert(it, relative_path);
}

std::string RunManifest::absolute(const std::string& relative_path) const {
    return (fs::path(out_dir_) / relative_path).string();
}

void RunManifest::finish() { save(true); }

void RunManifest::save(bool finished) {
    json manifest;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash_));
    manifest["config_hash"] = hash;
    manifest["tool_version"] = "0.1.0";
    manifest["seeds"] = seeds_;
    manifest["started_at"] = started_at_;
    if (finished) manifest["finished_at"] = utc_now();
    {
        std::lock_guard<std::mutex> lock(mutex_);
        manifest["outputs"] = outputs_;
    }
    atomic_write_file((fs::path(out_dir_) / "manifest.json").string(), manifest.dump(2) + "\n");
}

std::vector<NamedModel> load_models(const std::string& models_dir) {
    if (!fs::is_directory(models_dir)) {
        throw UsageError("models directory does not exist: " + models_dir);
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(models_dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());

    std::vector<NamedModel> detectors;
    std::vector<NamedModel> ensembles;
    for (const std::string& file : files) {
        const std::string kind = model_file_kind(file);
        if (kind == "ensemble") {
            ensembles.push_back(
                {fs::path(file).stem().string(),
                 std::make_shared<EnsembleModel>(load_ensemble(file))});
        } else {
            auto detector = std::make_shared<Detector>(load_detector(file));
            std::string name = detector->name().empty() ? fs::path(file).stem().string()
                                                        : detector->name();
            detectors.push_back({std::move(name), std::move(detector)});
        }
    }
    std::sort(detectors.begin(), detectors.end(),
              [](const NamedModel& a, const NamedModel& b) { return a.name < b.name; });
    for (NamedModel& e : ensembles) detectors.push_back(std::move(e));
    if (detectors.empty()) throw UsageError("no model files found in " + models_dir);
    return detectors;
}

std::vector<BreakdownRow> evaluation_breakdown(const std::vector<NamedModel>& models,
                                               const std::vector<Document>& docs) {
    std::map<std::pair<std::string, std::string>, std::vector<Document>> groups;
    for (const Document& doc : docs) {
        groups[{to_string(doc.language), to_string(doc.domain)}].push_back(doc);
    }
    std::vector<BreakdownRow> rows;
    for (const NamedModel& named : models) {
        rows.push_back({named.name, "all", "all", evaluate(*named.model, docs)});
        for (const auto& [key, group] : groups) {
            rows.push_back({named.name, key.first, key.second, evaluate(*named.model, group)});
        }
    }
    return rows;
}

std::string breakdown_csv(const std::vector<BreakdownRow>& rows) {
    std::string out = "model,language,domain,acc,prec,rec,f1\n";
    for (const BreakdownRow& row : rows) {
        out += csv_escape(row.model) + ',' + row.language + ',' + row.domain + ',' +
               format_double(row.metrics.accuracy, 6) + ',' +
               format_double(row.metrics.precision, 6) + ',' +
               format_double(row.metrics.recall, 6) + ',' + format_double(row.metrics.f1, 6) +
               '\n';
    }
    return out;
}

std::string attribution_to_jsonl_line(const AttributionVector& attribution) {
    json meta = {{"samples", attribution.samples}, {"seed", attribution.seed}};
    if (attribution.method == AttributionMethod::Lime) {
        meta["kernel_width"] = attribution.kernel_width;
    }
    const json row = {
        {"doc_id", attribution.doc_id},
        {"method", to_string(attribution.method)},
        {"scores", attribution.scores},
        {"meta", meta},
    };
    return row.dump();
}

AttributionVector attribution_from_jsonl_line(const std::string& line) {
    json row;
    try {
        row = json::parse(line);
    } catch (const json::exception& error) {
        throw ParseError(std::string("bad attribution line: ") + error.what());
    }
    AttributionVector attribution;
    attribution.doc_id = require(row, "doc_id").get<std::string>();
    attribution.method = parse_attribution_method(require(row, "method").get<std::string>());
    attribution.scores = require(row, "scores").get<std::vector<double>>();
    if (row.contains("meta")) {
        const json& meta = row["meta"];
        attribution.samples = get_or<size_t>(meta, "samples", 0);
        attribution.seed = get_or<uint64_t>(meta, "seed", 0);
        attribution.kernel_width = get_or<double>(meta, "kernel_width", 0.0);
    }
    return attribution;
}

std::string plan_to_jsonl_line(const ReplacementPlan& plan) {
    json substitutions = json::array();
    for (const Substitution& sub : plan.substitutions) {
        substitutions.push_back(json::array({sub.position, sub.original, sub.replacement}));
    }
    json skipped = json::array();
    for (const Skip& skip : plan.skipped) {
        skipped.push_back(json::array({skip.position, to_string(skip.reason)}));
    }
    const json row = {
        {"doc_id", plan.doc_id},
        {"strategy", to_string(plan.strategy)},
        {"substitutions", substitutions},
        {"skipped", skipped},
    };
    return row.dump();
}

ReplacementPlan plan_from_jsonl_line(const std::string& line) {
    json row;
    try {
        row = json::parse(line);
    } catch (const json::exception& error) {
        throw ParseError(std::string("bad plan line: ") + error.what());
    }
    ReplacementPlan plan;
    plan.doc_id = require(row, "doc_id").get<std::string>();
    plan.strategy = parse_strategy(require(row, "strategy").get<std::string>());
    for (const json& sub : require(row, "substitutions")) {
        plan.substitutions.push_back(Substitution{sub.at(0).get<size_t>(),
                                                  sub.at(1).get<std::string>(),
                                                  sub.at(2).get<std::string>()});
    }
    for (const json& skip : require(row, "skipped")) {
        plan.skipped.push_back(
            Skip{skip.at(0).get<size_t>(), parse_skip_reason(skip.at(1).get<std::string>())});
    }
    return plan;
}

AttributionVector attribute(const ExplainerSpec& spec, const TokenScorer& scorer,
                            const std::string& doc_id, const std::vector<std::string>& tokens,
                            uint64_t seed) {
    switch (spec.method) {
        case AttributionMethod::ShapExact: {
            ShapleyOptions options;
            options.max_exact_tokens = spec.max_exact_tokens;
            return exact_shapley(scorer, doc_id, tokens, options);
        }
        case AttributionMethod::ShapSampled:
            return sampled_shapley(scorer, doc_id, tokens, spec.samples, seed);
        case AttributionMethod::Lime: {
            LimeOptions options;
            options.n_samples = spec.samples;
            return lime_attribution(scorer, doc_id, tokens, options, seed);
        }
        case AttributionMethod::Random:
            return random_attribution(doc_id, tokens.size(), seed);
    }
    throw Error("unreachable attribution method");
}

TokenSelection select(const ExplainerSpec& spec, const AttributionVector& attribution) {
    // The random baseline carries no scores; it draws positions directly.
    if (attribution.method == AttributionMethod::Random) {
        return random_selection(attribution.doc_id, attribution.scores.size(), spec.k,
                                attribution.seed);
    }
    if (spec.use_threshold) return select_by_threshold(attribution, spec.threshold);
    return select_top_tokens(attribution, spec.k);
}

std::string overlap_to_json(const OverlapReport& report) {
    json intersections = json::array();
    for (const auto& [subset, count] : report.intersections) {
        intersections.push_back({{"subset", subset}, {"count", count}});
    }
    const json out = {{"models", report.model_names}, {"intersections", intersections}};
    return out.dump(2) + "\n";
}

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::string out =
        "explainer,strategy,model,f1,acc,delta_f1_pp,delta_acc_pp,bleu,rouge1,rougeL,flip_rate\n";
    for (const ReportRow& row : rows) {
        out += csv_escape(row.explainer) + ',' + csv_escape(row.strategy) + ',' +
               csv_escape(row.model) + ',' + format_double(row.f1, 6) + ',' +
               format_double(row.acc, 6) + ',' + format_double(row.delta_f1_pp, 2) + ',' +
               format_double(row.delta_acc_pp, 2) + ',' + format_double(row.bleu, 6) + ',' +
               format_double(row.rouge1, 6) + ',' + format_double(row.rougeL, 6) + ',' +
               format_double(row.flip_rate, 2) + '\n';
    }
    return out;
}

std::vector<ReportRow> parse_report_csv(const std::string& text) {
    const auto records = parse_csv(text);
    std::vector<ReportRow> rows;
    for (size_t i = 1; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.size() == 1 && r[0].empty()) continue;
        if (r.size() != 11) throw ParseError("report row must have 11 fields");
        ReportRow row;
        row.explainer = r[0];
        row.strategy = r[1];
        row.model = r[2];
        row.f1 = std::stod(r[3]);
        row.acc = std::stod(r[4]);
        row.delta_f1_pp = std::stod(r[5]);
        row.delta_acc_pp = std::stod(r[6]);
        row.bleu = std::stod(r[7]);
        row.rouge1 = std::stod(r[8]);
        row.rougeL = std::stod(r[9]);
        row.flip_rate = std::stod(r[10]);
        rows.push_back(row);
    }
    return rows;
}

namespace {

json row_to_json(const ReportRow& row) {
    return {{"explainer", row.explainer},
            {"strategy", row.strategy},
            {"model", row.model},
            {"f1", row.f1},
            {"acc", row.acc},
            {"delta_f1_pp", row.delta_f1_pp},
            {"delta_acc_pp", row.delta_acc_pp},
            {"bleu", row.bleu},
            {"rouge1", row.rouge1},
            {"rougeL", row.rougeL},
            {"flip_rate", row.flip_rate}};
}

}  // namespace

std::string report_json(const std::vector<uint64_t>& seeds,
                        const std::map<uint64_t, std::vector<ReportRow>>& per_seed,
                        const std::vector<ReportRow>& mean) {
    json out;
    out["seeds"] = seeds;
    json seeds_obj = json::object();
    for (const auto& [seed, rows] : per_seed) {
        json list = json::array();
        for (const ReportRow& row : rows) list.push_back(row_to_json(row));
        seeds_obj[std::to_string(seed)] = list;
    }
    out["per_seed"] = seeds_obj;
    json mean_rows_json = json::array();
    for (const ReportRow& row : mean) mean_rows_json.push_back(row_to_json(row));
    out["mean"] = mean_rows_json;
    return out.dump(2) + "\n";
}

std::vector<ReportRow> mean_rows(const std::map<uint64_t, std::vector<ReportRow>>& per_seed) {
    if (per_seed.empty()) return {};
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    std::map<std::tuple<std::string, std::string, std::string>, std::pair<ReportRow, size_t>> sums;
    for (const auto& [seed, rows] : per_seed) {
        for (const ReportRow& row : rows) {
            const auto key = std::make_tuple(row.explainer, row.strategy, row.model);
            auto it = sums.find(key);
            if (it == sums.end()) {
                order.push_back(key);
                sums.emplace(key, std::make_pair(row, size_t{1}));
            } else {
                ReportRow& acc = it->second.first;
                acc.f1 += row.f1;
                acc.acc += row.acc;
                acc.delta_f1_pp += row.delta_f1_pp;
                acc.delta_acc_pp += row.delta_acc_pp;
                acc.bleu += row.bleu;
                acc.rouge1 += row.rouge1;
                acc.rougeL += row.rougeL;
                acc.flip_rate += row.flip_rate;
                it->second.second += 1;
            }
        }
    }
    std::vector<ReportRow> out;
    out.reserve(order.size());
    for (const auto& key : order) {
        auto [row, n] = sums.at(key);
        row.f1 /= static_cast<double>(n);
        row.acc /= static_cast<double>(n);
        row.delta_f1_pp /= static_cast<double>(n);
        row.delta_acc_pp /= static_cast<double>(n);
        row.bleu /= static_cast<double>(n);
        row.rouge1 /= static_cast<double>(n);
        row.rougeL /= static_cast<double>(n);
        row.flip_rate /= static_cast<double>(n);
        out.push_back(row);
    }
    return out;
}

int cmd_ingest(const std::string& input, const std::string& format, const std::string& output) {
    if (input.empty() || output.empty()) throw UsageError("ingest needs an input and --out");
    if (!fs::exists(input)) throw UsageError("input path does not exist: " + input);
    DatasetFormat in_format;
    if (format == "auto") {
        in_format = format_for_path(input);
    } else if (format == "jsonl") {
        in_format = DatasetFormat::Jsonl;
    } else if (format == "csv") {
        in_format = DatasetFormat::Csv;
    } else {
        throw UsageError("--format must be auto, jsonl, or csv");
    }
    const auto docs = load_dataset(input, in_format);
    fs::create_directories(fs::path(output).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(output).parent_path());
    save_dataset(docs, output, format_for_path(output));
    std::printf("ingested %zu documents -> %s\n", docs.size(), output.c_str());
    return 0;
}

int cmd_split(const ExperimentConfig& config, const GlobalOptions& options,
              const std::string& input) {
    if (input.empty()) throw UsageError("split needs an input dataset");
    if (!fs::exists(input)) throw UsageError("input path does not exist: " + input);
    const std::string out_dir = options.out_dir.empty() ? config.out_dir : options.out_dir;

    SplitSpec spec = config.split;
    spec.seed = options.seeds.empty() ? config.seeds.front() : options.seeds.front();

    const auto docs = load_dataset(input, format_for_path(input));
    const DatasetSplit split = stratified_split(docs, spec);

    fs::create_directories(out_dir);
    atomic_write_file((fs::path(out_dir) / "train.jsonl").string(),
                      dataset_to_jsonl(split.train));
    atomic_write_file((fs::path(out_dir) / "validation.jsonl").string(),
                      dataset_to_jsonl(split.validation));
    atomic_write_file((fs::path(out_dir) / "test.jsonl").string(), dataset_to_jsonl(split.test));
    std::printf("split %zu documents -> %zu train / %zu validation / %zu test\n", docs.size(),
                split.train.size(), split.validation.size(), split.test.size());
    return 0;
}

int cmd_augment(const ExperimentConfig& config, const GlobalOptions& options,
                const std::string& input, const std::string& output) {
    if (input.empty() || output.empty()) throw UsageError("augment needs an input and --out");
    if (!fs::exists(input)) throw UsageError("input path does not exist: " + input);
    const uint64_t seed = options.seeds.empty() ? config.seeds.front() : options.seeds.front();

    const auto docs = load_dataset(input, format_for_path(input));
    auto client = make_client(config, options.mock_llm);

    std::unique_ptr<LexiconSynonyms> lexicon;
    if (!config.lexicon_path.empty()) {
        lexicon = std::make_unique<LexiconSynonyms>(LexiconSynonyms::from_file(config.lexicon_path));
    }

    std::vector<Document> out_docs = docs;
    std::string records_jsonl;
    for (const Document& doc : docs) {
        const auto variants = augment(doc, config.augment_ops,
                                      std::max<size_t>(config.augment_variants, 1),
                                      derive_seed(seed, fnv1a64(doc.id)), lexicon.get(),
                                      client.get());
        for (const auto& [variant, record] : variants) {
            out_docs.push_back(variant);
            json ops = json::array();
            for (const AugmentOp op : record.ops_applied) ops.push_back(to_string(op));
            const json row = {{"parent", record.parent_id},
                              {"variant", record.variant_id},
                              {"ops", ops},
                              {"seed", record.seed}};
            records_jsonl += row.dump();
            records_jsonl += '\n';
        }
    }

    const fs::path out_path(output);
    if (!out_path.parent_path().empty()) fs::create_directories(out_path.parent_path());
    atomic_write_file(output, dataset_to_jsonl(out_docs));
    atomic_write_file(out_path.parent_path().empty()
                          ? "augment_records.jsonl"
                          : (out_path.parent_path() / "augment_records.jsonl").string(),
                      records_jsonl);
    std::printf("augmented %zu documents -> %zu total\n", docs.size(), out_docs.size());
    return 0;
}

int cmd_train(const ExperimentConfig& config, const GlobalOptions& options) {
    const std::string out_dir = options.out_dir.empty() ? config.out_dir : options.out_dir;
    const std::vector<uint64_t> seeds = options.seeds.empty() ? config.seeds : options.seeds;
    require_path(config.pretrain_path, "pretrain");
    require_path(config.finetune_path, "finetune");
    require_path(config.test_path, "test");

    fs::create_directories(out_dir);
    const std::string config_text =
        options.config_path.empty() ? "{}" : read_text_file(options.config_path);
    RunManifest manifest(out_dir, config_hash(config_text), seeds, options.force);

    const auto pretrain = run_stage("load-pretrain", [&] {
        return load_dataset(config.pretrain_path, format_for_path(config.pretrain_path));
    });
    auto finetune = run_stage("load-finetune", [&] {
        return load_dataset(config.finetune_path, format_for_path(config.finetune_path));
    });
    const auto test = run_stage("load-test", [&] {
        return load_dataset(config.test_path, format_for_path(config.test_path));
    });

    if (config.augment_variants > 0 && !config.augment_ops.empty()) {
        auto client = make_client(config, options.mock_llm);
        finetune = run_stage("augment", [&] {
            return augmented_corpus(finetune, config, derive_seed(seeds.front(), 7), client.get());
        });
        manifest.write_file("finetune_augmented.jsonl", dataset_to_jsonl(finetune));
    }

    EnsembleConfig ensemble_config;
    ensemble_config.branch_kinds = config.branches;
    ensemble_config.tfidf = config.tfidf;
    ensemble_config.profile = config.profile;
    ensemble_config.train = config.train;
    ensemble_config.l2_lambda = config.meta_l2;
    ensemble_config.seed = seeds.front();

    const EnsembleModel ensemble = run_stage("train-ensemble", [&] {
        return EnsembleModel::train(pretrain, finetune, ensemble_config);
    });

    run_stage("save-models", [&] {
        manifest.write_file("models/ensemble.json", ensemble.serialize());
        for (const Detector& detector : ensemble.frozen_branch()) {
            manifest.write_file("models/" + detector.name() + ".json", detector.serialize());
        }
        for (const Detector& detector : ensemble.fresh_branch()) {
            manifest.write_file("models/" + detector.name() + ".json", detector.serialize());
        }
        return 0;
    });

    run_stage("train-embeddings", [&] {
        std::vector<TokenSequence> human_tokens;
        const auto collect = [&human_tokens](const std::vector<Document>& corpus) {
            for (const Document& doc : corpus) {
                if (doc.label == Label::Human) human_tokens.push_back(tokenize(doc.text));
            }
        };
        collect(pretrain);
        collect(finetune);
        EmbeddingSpace space = train_embeddings(human_tokens, config.embedding);
        attach_frequencies(space, human_tokens);
        save_embeddings(space, manifest.absolute("models/embeddings.txt"));
        manifest.record("models/embeddings.txt");
        std::string frequencies;
        for (const auto& [term, count] : space.human_frequency) {
            frequencies += term + ' ' + std::to_string(count) + '\n';
        }
        manifest.write_file("models/human_frequencies.txt", frequencies);
        return 0;
    });

    run_stage("evaluate", [&] {
        const auto models = load_models(manifest.absolute("models"));
        manifest.write_file("metrics.csv", breakdown_csv(evaluation_breakdown(models, test)));
        return 0;
    });

    manifest.finish();
    std::printf("trained %zu branch detectors + ensemble -> %s\n",
                ensemble.frozen_branch().size() + ensemble.fresh_branch().size(),
                out_dir.c_str());
    return 0;
}

int cmd_evaluate(const std::string& models_dir, const std::string& data_path,
                 const std::string& output) {
    if (models_dir.empty() || data_path.empty()) {
        throw UsageError("evaluate needs --models and --data");
    }
    if (!fs::exists(data_path)) throw UsageError("data path does not exist: " + data_path);
    const auto models = load_models(models_dir);
    const auto docs = load_dataset(data_path, format_for_path(data_path));
    const std::string csv = breakdown_csv(evaluation_breakdown(models, docs));
    if (output.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        const fs::path out_path(output);
        if (!out_path.parent_path().empty()) fs::create_directories(out_path.parent_path());
        atomic_write_file(output, csv);
    }
    return 0;
}

namespace {

std::shared_ptr<TextModel> load_any_model(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("model path does not exist: " + path);
    if (model_file_kind(path) == "ensemble") {
        return std::make_shared<EnsembleModel>(load_ensemble(path));
    }
    return std::make_shared<Detector>(load_detector(path));
}

}  // namespace

int cmd_explain(const ExperimentConfig& config, const GlobalOptions& options,
                const std::string& model_path, const std::string& data_path,
                const ExplainerSpec& spec, uint64_t seed, const std::string& output) {
    (void)config;
    (void)options;
    if (model_path.empty() || data_path.empty() || output.empty()) {
        throw UsageError("explain needs --model, --data, and --out");
    }
    if (!fs::exists(data_path)) throw UsageError("data path does not exist: " + data_path);
    const auto model = load_any_model(model_path);
    const auto docs = load_dataset(data_path, format_for_path(data_path));

    const DetectorTokenScorer scorer(*model);
    std::string lines;
    for (const Document& doc : docs) {
        const TokenSequence tokens = tokenize(doc.text);
        if (tokens.tokens.empty()) continue;
        const AttributionVector attribution = attribute(
            spec, scorer, doc.id, tokens.tokens, derive_seed(seed, fnv1a64(doc.id)));
        lines += attribution_to_jsonl_line(attribution);
        lines += '\n';
    }
    const fs::path out_path(output);
    if (!out_path.parent_path().empty()) fs::create_directories(out_path.parent_path());
    atomic_write_file(output, lines);
    std::printf("explained %zu documents -> %s\n", docs.size(), output.c_str());
    return 0;
}

int cmd_rewrite(const ExperimentConfig& config, const GlobalOptions& options,
                const std::string& data_path, const std::string& attributions_path,
                Strategy strategy, size_t k, const std::string& embeddings_path,
                const std::string& out_dir) {
    if (data_path.empty() || attributions_path.empty() || out_dir.empty()) {
        throw UsageError("rewrite needs --data, --attributions, and --out");
    }
    if (!fs::exists(data_path)) throw UsageError("data path does not exist: " + data_path);
    if (!fs::exists(attributions_path)) {
        throw UsageError("attributions path does not exist: " + attributions_path);
    }

    const auto docs = load_dataset(data_path, format_for_path(data_path));
    std::map<std::string, const Document*> by_id;
    for (const Document& doc : docs) by_id[doc.id] = &doc;

    EmbeddingSpace space;
    std::unique_ptr<LlmClient> client;
    RewriteDeps deps;
    deps.min_human_freq = config.min_human_freq;
    deps.top_n = config.top_n;
    deps.fail_fast = config.fail_fast;
    if (needs_embeddings({strategy})) {
        if (embeddings_path.empty()) throw UsageError("this strategy needs --embeddings");
        if (!fs::exists(embeddings_path)) {
            throw UsageError("embeddings path does not exist: " + embeddings_path);
        }
        space = load_embeddings(embeddings_path);
        const fs::path frequencies_path =
            fs::path(embeddings_path).parent_path() / "human_frequencies.txt";
        if (!fs::exists(frequencies_path)) {
            throw UsageError("frequency file missing next to embeddings: " +
                             frequencies_path.string());
        }
        load_frequencies(space, frequencies_path.string());
        deps.space = &space;
    } else {
        client = make_client(config, options.mock_llm);
        if (!client) {
            throw UsageError("this strategy needs a configured client (or --mock-llm)");
        }
        deps.client = client.get();
    }

    std::string plans_jsonl;
    std::vector<Document> rewritten_docs;
    std::istringstream lines(read_text_file(attributions_path));
    std::string line;
    while (std::getline(lines, line)) {
        if (trim(line).empty()) continue;
        const AttributionVector attribution = attribution_from_jsonl_line(line);
        const auto it = by_id.find(attribution.doc_id);
        if (it == by_id.end()) {
            throw IdMismatchError("attribution for unknown document: " + attribution.doc_id);
        }
        const Document& doc = *it->second;
        const TokenSequence tokens = tokenize(doc.text);
        const TokenSelection selection = select_top_tokens(attribution, k);
        const ReplacementPlan plan =
            build_plan(doc, tokens, selection, strategy, deps, doc.language);
        const RewrittenDocument result = apply_plan(doc, tokens, plan);
        plans_jsonl += plan_to_jsonl_line(plan);
        plans_jsonl += '\n';
        Document out_doc = doc;
        out_doc.text = result.text;
        rewritten_docs.push_back(std::move(out_doc));
    }

    fs::create_directories(out_dir);
    atomic_write_file((fs::path(out_dir) / "plans.jsonl").string(), plans_jsonl);
    atomic_write_file((fs::path(out_dir) / "rewritten.jsonl").string(),
                      dataset_to_jsonl(rewritten_docs));
    std::printf("rewrote %zu documents -> %s\n", rewritten_docs.size(), out_dir.c_str());
    return 0;
}

namespace {

ScenarioOutcome run_scenario(const ExperimentConfig& config, const ScenarioJob& job,
                             const std::vector<NamedModel>& models, const TextModel& target,
                             const std::vector<Document>& test, const EmbeddingSpace* space,
                             LlmClient* client, RunManifest& manifest) {
    ScenarioOutcome outcome;
    outcome.explainer = job.explainer_label;
    outcome.strategy = to_string(job.strategy);

    const std::string scenario_dir =
        job.seed_dir + "/" + job.explainer_label + "_" + to_string(job.strategy);
    const uint64_t scenario_seed = derive_seed(job.run_seed, 1000 + job.index);

    RewriteDeps deps;
    deps.space = space;
    deps.min_human_freq = config.min_human_freq;
    deps.top_n = config.top_n;
    deps.client = client;
    deps.fail_fast = config.fail_fast;

    const DetectorTokenScorer scorer(target);

    std::string attributions_jsonl;
    std::string plans_jsonl;
    std::string skipped_csv = "doc_id,reason\n";
    std::vector<Document> rewritten_docs;
    std::map<std::string, std::string> rewritten_text;

    for (const Document& doc : test) {
        if (doc.label != Label::Ai) continue;
        if (target.classify(doc.text) != Label::Ai) continue;  // not caught, nothing to evade

        const TokenSequence tokens = tokenize(doc.text);
        if (tokens.tokens.empty()) {
            skipped_csv += csv_escape(doc.id) + ",EMPTY\n";
            continue;
        }
        AttributionVector attribution;
        try {
            attribution = attribute(job.spec, scorer, doc.id, tokens.tokens,
                                    derive_seed(scenario_seed, fnv1a64(doc.id)));
        } catch (const TooManyTokensError&) {
            skipped_csv += csv_escape(doc.id) + ",TOO_MANY_TOKENS\n";
            continue;
        } catch (const DegenerateDesignError&) {
            skipped_csv += csv_escape(doc.id) + ",DEGENERATE_DESIGN\n";
            continue;
        }
        const TokenSelection selection = select(job.spec, attribution);
        const ReplacementPlan plan =
            build_plan(doc, tokens, selection, job.strategy, deps, doc.language);
        const RewrittenDocument result = apply_plan(doc, tokens, plan);

        attributions_jsonl += attribution_to_jsonl_line(attribution);
        attributions_jsonl += '\n';
        plans_jsonl += plan_to_jsonl_line(plan);
        plans_jsonl += '\n';
        rewritten_text[doc.id] = result.text;
        Document out_doc = doc;
        out_doc.text = result.text;
        rewritten_docs.push_back(std::move(out_doc));
    }

    std::vector<Document> modified = test;
    for (Document& doc : modified) {
        const auto it = rewritten_text.find(doc.id);
        if (it != rewritten_text.end()) doc.text = it->second;
    }

    SimilarityScores mean_similarity{1.0, 1.0, 1.0};  // nothing rewritten = unchanged
    if (!rewritten_docs.empty()) {
        mean_similarity = {0.0, 0.0, 0.0};
        std::map<std::string, const Document*> originals;
        for (const Document& doc : test) originals[doc.id] = &doc;
        for (const Document& doc : rewritten_docs) {
            const SimilarityScores scores = similarity(tokenize(originals.at(doc.id)->text).tokens,
                                                       tokenize(doc.text).tokens);
            mean_similarity.bleu += scores.bleu;
            mean_similarity.rouge1 += scores.rouge1;
            mean_similarity.rougeL += scores.rougeL;
        }
        const double n = static_cast<double>(rewritten_docs.size());
        mean_similarity.bleu /= n;
        mean_similarity.rouge1 /= n;
        mean_similarity.rougeL /= n;
    }

    std::set<std::string> gold_ai_ids;
    for (const Document& doc : test) {
        if (doc.label == Label::Ai) gold_ai_ids.insert(doc.id);
    }

    std::string predictions_csv =
        "doc_id,gold,model,proba_before,label_before,proba_after,label_after\n";
    std::map<std::string, std::set<std::string>> flips_by_model;
    for (const NamedModel& named : models) {
        std::map<std::string, Label> before;
        std::map<std::string, Label> after;
        for (size_t i = 0; i < test.size(); ++i) {
            const double p_before = named.model->predict_proba_text(test[i].text);
            const double p_after = named.model->predict_proba_text(modified[i].text);
            before[test[i].id] = p_before >= EnsembleModel::kThreshold ? Label::Ai : Label::Human;
            after[test[i].id] = p_after >= EnsembleModel::kThreshold ? Label::Ai : Label::Human;
            predictions_csv += csv_escape(test[i].id) + ',' + to_string(test[i].label) + ',' +
                               csv_escape(named.name) + ',' + format_double(p_before, 6) + ',' +
                               to_string(before[test[i].id]) + ',' + format_double(p_after, 6) +
                               ',' + to_string(after[test[i].id]) + '\n';
        }
        FlipReport flips = flip_rate(before, after, gold_ai_ids);
        flips.explainer = job.explainer_label;
        flips.strategy = to_string(job.strategy);
        flips.model = named.name;
        std::set<std::string> flipped_ids;
        for (const std::string& id : gold_ai_ids) {
            if (before.at(id) == Label::Ai && after.at(id) == Label::Human) {
                flipped_ids.insert(id);
            }
        }
        flips_by_model[named.name] = std::move(flipped_ids);

        const DetectionMetrics metrics = evaluate(*named.model, modified);
        ReportRow row;
        row.explainer = job.explainer_label;
        row.strategy = to_string(job.strategy);
        row.model = named.name;
        row.f1 = metrics.f1;
        row.acc = metrics.accuracy;
        row.bleu = mean_similarity.bleu;
        row.rouge1 = mean_similarity.rouge1;
        row.rougeL = mean_similarity.rougeL;
        row.flip_rate = flips.flip_rate;
        outcome.rows.push_back(row);
    }

    manifest.write_file(scenario_dir + "/attributions.jsonl", attributions_jsonl);
    manifest.write_file(scenario_dir + "/plans.jsonl", plans_jsonl);
    manifest.write_file(scenario_dir + "/rewritten.jsonl", dataset_to_jsonl(rewritten_docs));
    manifest.write_file(scenario_dir + "/predictions.csv", predictions_csv);
    manifest.write_file(scenario_dir + "/metrics.csv", scenario_metrics_csv(outcome.rows));
    manifest.write_file(scenario_dir + "/overlap.json", overlap_to_json(overlap_sets(flips_by_model)));
    manifest.write_file(scenario_dir + "/skipped_docs.csv", skipped_csv);
    return outcome;
}

std::vector<ReportRow> join_with_baseline(const std::map<std::string, DetectionMetrics>& baseline,
                                          std::vector<ReportRow> rows) {
    for (ReportRow& row : rows) {
        const auto it = baseline.find(row.model);
        if (it == baseline.end()) {
            throw MissingBaselineError("no baseline metrics for model " + row.model);
        }
        row.delta_f1_pp = delta_pp(it->second.f1, row.f1);
        row.delta_acc_pp = delta_pp(it->second.accuracy, row.acc);
    }
    return rows;
}

std::vector<ReportRow> baseline_rows(const std::vector<NamedModel>& models,
                                     const std::map<std::string, DetectionMetrics>& baseline) {
    std::vector<ReportRow> rows;
    for (const NamedModel& named : models) {
        const DetectionMetrics& m = baseline.at(named.name);
        ReportRow row;
        row.explainer = "none";
        row.strategy = "none";
        row.model = named.name;
        row.f1 = m.f1;
        row.acc = m.accuracy;
        row.bleu = 1.0;
        row.rouge1 = 1.0;
        row.rougeL = 1.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

int cmd_attack(const ExperimentConfig& config, const GlobalOptions& options) {
    const std::string out_dir = options.out_dir.empty() ? config.out_dir : options.out_dir;
    const std::vector<uint64_t> seeds = options.seeds.empty() ? config.seeds : options.seeds;
    require_path(config.test_path, "test");

    const std::string models_dir = (fs::path(out_dir) / "models").string();
    const auto models = load_models(models_dir);
    const TextModel* target = nullptr;
    for (const NamedModel& named : models) {
        if (named.name == config.target_model) target = named.model.get();
    }
    if (target == nullptr) {
        throw UsageError("target model '" + config.target_model + "' not found in " + models_dir);
    }

    EmbeddingSpace space;
    const EmbeddingSpace* space_ptr = nullptr;
    if (needs_embeddings(config.strategies)) {
        const std::string embeddings_path = (fs::path(models_dir) / "embeddings.txt").string();
        if (!fs::exists(embeddings_path)) {
            throw UsageError("embedding file missing (run train first): " + embeddings_path);
        }
        space = load_embeddings(embeddings_path);
        const std::string frequencies_path =
            (fs::path(models_dir) / "human_frequencies.txt").string();
        if (!fs::exists(frequencies_path)) {
            throw UsageError("frequency file missing (run train first): " + frequencies_path);
        }
        load_frequencies(space, frequencies_path);
        space_ptr = &space;
    }
    std::unique_ptr<LlmClient> client;
    if (needs_client(config.strategies)) {
        client = make_client(config, options.mock_llm);
        if (!client) {
            throw UsageError("gpt strategies need client.base_url or --mock-llm");
        }
    }

    const auto test =
        run_stage("load-test", [&] { return load_dataset(config.test_path, format_for_path(config.test_path)); });

    const std::string config_text =
        options.config_path.empty() ? "{}" : read_text_file(options.config_path);
    RunManifest manifest(out_dir, config_hash(config_text), seeds, options.force);
    for (const auto& entry : fs::directory_iterator(models_dir)) {
        manifest.record((fs::path("models") / entry.path().filename()).string());
    }
    // Stale scenario directories from a previous grid would leak into the
    // rebuilt report.
    fs::remove_all(fs::path(out_dir) / "attack");

    std::map<std::string, DetectionMetrics> baseline;
    for (const NamedModel& named : models) baseline[named.name] = evaluate(*named.model, test);

    std::string baseline_predictions = "doc_id,gold,model,proba,label\n";
    for (const NamedModel& named : models) {
        for (const Document& doc : test) {
            const double p = named.model->predict_proba_text(doc.text);
            baseline_predictions += csv_escape(doc.id) + ',' + to_string(doc.label) + ',' +
                                    csv_escape(named.name) + ',' + format_double(p, 6) + ',' +
                                    to_string(p >= EnsembleModel::kThreshold ? Label::Ai
                                                                             : Label::Human) +
                                    '\n';
        }
    }

    const std::vector<std::string> labels = explainer_labels(config.explainers);
    const size_t scenario_count = config.explainers.size() * config.strategies.size();
    const size_t workers = std::min<size_t>(
        256, options.workers > 0
                 ? options.workers
                 : std::max<size_t>(1, std::min<size_t>(scenario_count,
                                                        std::thread::hardware_concurrency())));

    std::string failures_csv = "seed,explainer,strategy,error\n";
    size_t failure_count = 0;

    for (const uint64_t seed : seeds) {
        const std::string seed_dir = "attack/seed_" + std::to_string(seed);
        manifest.write_file(seed_dir + "/baseline.csv", baseline_csv(models, baseline));
        manifest.write_file(seed_dir + "/baseline_predictions.csv", baseline_predictions);

        std::vector<ScenarioJob> jobs;
        for (size_t e = 0; e < config.explainers.size(); ++e) {
            for (size_t s = 0; s < config.strategies.size(); ++s) {
                ScenarioJob job;
                job.index = jobs.size();
                job.spec = config.explainers[e];
                job.explainer_label = labels[e];
                job.strategy = config.strategies[s];
                job.run_seed = seed;
                job.seed_dir = seed_dir;
                jobs.push_back(job);
            }
        }

        std::counting_semaphore<256> slots(static_cast<std::ptrdiff_t>(workers));
        std::vector<std::future<ScenarioOutcome>> futures;
        futures.reserve(jobs.size());
        for (const ScenarioJob& job : jobs) {
            futures.push_back(std::async(std::launch::async, [&, job] {
                slots.acquire();
                struct Release {
                    std::counting_semaphore<256>& s;
                    ~Release() { s.release(); }
                } release{slots};
                ScenarioOutcome outcome;
                outcome.explainer = job.explainer_label;
                outcome.strategy = to_string(job.strategy);
                try {
                    outcome = run_scenario(config, job, models, *target, test, space_ptr,
                                           client.get(), manifest);
                } catch (const std::exception& error) {
                    outcome.rows.clear();
                    outcome.error = error.what();
                }
                return outcome;
            }));
        }

        for (std::future<ScenarioOutcome>& future : futures) {
            const ScenarioOutcome outcome = future.get();
            if (!outcome.error.empty()) {
                if (config.fail_fast) {
                    throw Error("scenario " + outcome.explainer + "_" + outcome.strategy +
                                " failed: " + outcome.error);
                }
                failures_csv += std::to_string(seed) + ',' + csv_escape(outcome.explainer) + ',' +
                                csv_escape(outcome.strategy) + ',' + csv_escape(outcome.error) +
                                '\n';
                ++failure_count;
            }
        }
    }

    // Reports derive from the emitted per-scenario files, the same path a
    // later `report` run takes, so both produce byte-identical output.
    for (const std::string& written : rebuild_reports(out_dir)) manifest.record(written);
    if (failure_count > 0) manifest.write_file("attack/failures.csv", failures_csv);

    manifest.finish();
    std::printf("attack grid: %zu scenarios x %zu seeds, %zu failed -> %s\n", scenario_count,
                seeds.size(), failure_count, out_dir.c_str());
    return failure_count > 0 ? 1 : 0;
}

std::vector<std::string> rebuild_reports(const std::string& run_dir) {
    const fs::path attack_dir = fs::path(run_dir) / "attack";
    if (!fs::is_directory(attack_dir)) {
        throw MissingBaselineError("no attack outputs under " + run_dir);
    }

    std::vector<std::pair<uint64_t, fs::path>> seed_dirs;
    for (const auto& entry : fs::directory_iterator(attack_dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_directory() && name.rfind("seed_", 0) == 0) {
            seed_dirs.emplace_back(std::stoull(name.substr(5)), entry.path());
        }
    }
    std::sort(seed_dirs.begin(), seed_dirs.end());
    if (seed_dirs.empty()) throw MissingBaselineError("no per-seed outputs under " + run_dir);

    std::vector<std::string> written;
    std::map<uint64_t, std::vector<ReportRow>> per_seed;
    std::vector<uint64_t> seeds;
    for (const auto& [seed, dir] : seed_dirs) {
        seeds.push_back(seed);
        const fs::path baseline_path = dir / "baseline.csv";
        if (!fs::exists(baseline_path)) {
            throw MissingBaselineError("baseline metrics missing: " + baseline_path.string());
        }
        std::map<std::string, DetectionMetrics> baseline;
        std::vector<NamedModel> model_order;  // names only; model pointers unused here
        const auto baseline_records = parse_csv(read_text_file(baseline_path.string()));
        for (size_t i = 1; i < baseline_records.size(); ++i) {
            const auto& r = baseline_records[i];
            if (r.size() < 3) continue;
            DetectionMetrics m;
            m.f1 = std::stod(r[1]);
            m.accuracy = std::stod(r[2]);
            baseline[r[0]] = m;
            model_order.push_back({r[0], nullptr});
        }

        std::vector<ReportRow> rows = baseline_rows(model_order, baseline);
        std::vector<fs::path> scenario_dirs;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_directory()) scenario_dirs.push_back(entry.path());
        }
        std::sort(scenario_dirs.begin(), scenario_dirs.end());
        for (const fs::path& scenario : scenario_dirs) {
            const fs::path metrics_path = scenario / "metrics.csv";
            if (!fs::exists(metrics_path)) continue;
            const auto records = parse_csv(read_text_file(metrics_path.string()));
            for (size_t i = 1; i < records.size(); ++i) {
                const auto& r = records[i];
                if (r.size() != 9) continue;
                ReportRow row;
                row.explainer = r[0];
                row.strategy = r[1];
                row.model = r[2];
                row.f1 = std::stod(r[3]);
                row.acc = std::stod(r[4]);
                row.bleu = std::stod(r[5]);
                row.rouge1 = std::stod(r[6]);
                row.rougeL = std::stod(r[7]);
                row.flip_rate = std::stod(r[8]);
                rows.push_back(row);
            }
        }
        rows = join_with_baseline(baseline, std::move(rows));
        atomic_write_file((dir / "report.csv").string(), report_csv(rows));
        written.push_back(fs::relative(dir / "report.csv", run_dir).string());
        per_seed[seed] = std::move(rows);
    }

    const std::vector<ReportRow> mean = mean_rows(per_seed);
    atomic_write_file((fs::path(run_dir) / "report.csv").string(), report_csv(mean));
    atomic_write_file((fs::path(run_dir) / "report.json").string(),
                      report_json(seeds, per_seed, mean));
    written.push_back("report.csv");
    written.push_back("report.json");
    return written;
}

int cmd_report(const std::string& run_dir) {
    if (run_dir.empty()) throw UsageError("report needs --run");
    const std::vector<std::string> written = rebuild_reports(run_dir);
    std::printf("report: %zu files rebuilt -> %s\n", written.size(), run_dir.c_str());
    return 0;
}

}  // namespace aigt::cli
