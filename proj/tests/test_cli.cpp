#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aigt/corpus.hpp"
#include "doctest.h"
#include "harness.hpp"
#include "json.hpp"
#include "synthetic.hpp"

using namespace aigt;
using testsupport::CliResult;
using testsupport::TempDir;
using testsupport::read_file;
using testsupport::run_cli;
using testsupport::write_file;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (const char c : text) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) lines.push_back(current);
    return lines;
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (const char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

// Rows of a headered CSV keyed by the first `key_fields` columns joined with '|'.
std::map<std::string, std::vector<std::string>> csv_by_key(const std::string& text,
                                                           size_t key_fields) {
    std::map<std::string, std::vector<std::string>> rows;
    const auto lines = split_lines(text);
    for (size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv_row(lines[i]);
        std::string key;
        for (size_t k = 0; k < key_fields && k < fields.size(); ++k) {
            if (k > 0) key += '|';
            key += fields[k];
        }
        rows[key] = fields;
    }
    return rows;
}

// One trained run shared by the read-only subcommand tests. Training happens
// once for the whole binary; the directory lives until process exit.
struct CliFixture {
    TempDir dir;
    std::string pretrain_path;
    std::string finetune_path;
    std::string test_path;
    std::string config_path;
    std::string run_dir;
    size_t test_docs = 0;
    int train_exit = -1;
    std::string train_output;

    CliFixture() {
        const auto vocab = testsupport::style_vocab(20, 20, 30);
        const auto pretrain = testsupport::style_corpus(vocab, 30, 30, 25, 101, "pr");
        const auto finetune = testsupport::style_corpus(vocab, 30, 30, 25, 202, "fn");
        const auto test = testsupport::style_corpus(vocab, 16, 16, 25, 303, "te");
        test_docs = test.size();

        pretrain_path = dir.str("pretrain.jsonl");
        finetune_path = dir.str("finetune.jsonl");
        test_path = dir.str("test.jsonl");
        save_dataset(pretrain, pretrain_path, DatasetFormat::Jsonl);
        save_dataset(finetune, finetune_path, DatasetFormat::Jsonl);
        save_dataset(test, test_path, DatasetFormat::Jsonl);

        run_dir = dir.str("run");
        json mock_rules = json::array();
        for (size_t i = 0; i < 10; ++i) {
            mock_rules.push_back({{"pattern", testsupport::pseudo_word("ma", i)},
                                  {"replacement", testsupport::pseudo_word("pe", i)}});
        }
        const json config = {
            {"datasets",
             {{"pretrain", pretrain_path}, {"finetune", finetune_path}, {"test", test_path}}},
            {"features", {{"max_features", 250}, {"lemmatize", false}}},
            {"detectors", {{"branches", json::array({"naive_bayes"})}, {"meta_l2", 0.01}}},
            {"explainers",
             json::array({{{"method", "lime"}, {"k", 3}, {"samples", 100}},
                          {{"method", "random"}, {"k", 3}}})},
            {"strategies", json::array({"hsr", "gpt"})},
            {"rewrite",
             {{"min_human_freq", 2}, {"top_n", 10}, {"dim", 12}, {"window", 4}, {"min_count", 2}}},
            {"mock", {{"rules", mock_rules}, {"default", "echo"}}},
            {"seeds", json::array({11})},
            {"out", run_dir},
        };
        config_path = dir.str("config.json");
        write_file(config_path, config.dump(2));

        const CliResult result = run_cli("--config " + config_path + " train");
        train_exit = result.exit_code;
        train_output = result.output;
    }
};

const CliFixture& fixture() {
    static CliFixture f;
    return f;
}

}  // namespace

TEST_CASE("usage mistakes exit with code 2") {
    CHECK(run_cli("").exit_code == 2);  // a subcommand is required
    CHECK(run_cli("train").exit_code == 2);  // --config is required

    const CliResult missing = run_cli("ingest /definitely/missing.jsonl --out /tmp/x.jsonl");
    CHECK(missing.exit_code == 2);
    CHECK(missing.output.find("/definitely/missing.jsonl") != std::string::npos);

    CHECK(run_cli("evaluate --models /no/such/dir --data /no/such/data.jsonl").exit_code == 2);
    CHECK(run_cli("explain --method bogus").exit_code == 2);
    CHECK(run_cli("report").exit_code == 2);

    TempDir dir;
    write_file(dir.str("cfg.json"), "{not json");
    const CliResult bad_config = run_cli("--config " + dir.str("cfg.json") + " train");
    CHECK(bad_config.exit_code == 2);
    CHECK(bad_config.output.find("JSON") != std::string::npos);

    write_file(dir.str("unknown_key.json"), R"({"surprise": 1})");
    CHECK(run_cli("--config " + dir.str("unknown_key.json") + " train").exit_code == 2);
}

TEST_CASE("ingest converts between formats and rejects bad labels") {
    TempDir dir;
    const auto docs = testsupport::style_corpus(testsupport::style_vocab(5, 5, 5), 3, 3, 8, 7, "in");
    save_dataset(docs, dir.str("data.csv"), DatasetFormat::Csv);

    const CliResult ok = run_cli("ingest " + dir.str("data.csv") + " --out " + dir.str("data.jsonl"));
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("6 documents") != std::string::npos);

    const auto round = load_dataset(dir.str("data.jsonl"), DatasetFormat::Jsonl);
    REQUIRE(round.size() == docs.size());
    for (size_t i = 0; i < docs.size(); ++i) {
        CHECK(round[i].id == docs[i].id);
        CHECK(round[i].text == docs[i].text);
        CHECK(round[i].label == docs[i].label);
    }

    write_file(dir.str("bad.jsonl"), R"({"id":"x","text":"t","label":"bot"})"
                                     "\n");
    const CliResult bad = run_cli("ingest " + dir.str("bad.jsonl") + " --out " + dir.str("out.jsonl"));
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("error") != std::string::npos);

    CHECK(run_cli("ingest " + dir.str("data.csv") + " --format yaml --out " + dir.str("y.jsonl"))
              .exit_code == 2);
}

TEST_CASE("split emits three stratified files deterministically") {
    TempDir dir;
    const auto docs = testsupport::balanced_bilingual_corpus(5);  // 60 docs, 12 strata of 5
    save_dataset(docs, dir.str("data.jsonl"), DatasetFormat::Jsonl);
    const json config = {
        {"split",
         {{"test_fraction", 0.2},
          {"validation_fraction", 0.1},
          {"strata", json::array({"label", "language", "domain"})}}},
        {"seeds", json::array({5})},
    };
    write_file(dir.str("cfg.json"), config.dump());

    const std::string command = "--config " + dir.str("cfg.json") + " split " +
                                dir.str("data.jsonl") + " --out " + dir.str("splits");
    CHECK(run_cli(command).exit_code == 0);

    const auto train = load_dataset(dir.str("splits/train.jsonl"), DatasetFormat::Jsonl);
    const auto validation = load_dataset(dir.str("splits/validation.jsonl"), DatasetFormat::Jsonl);
    const auto test = load_dataset(dir.str("splits/test.jsonl"), DatasetFormat::Jsonl);
    CHECK(train.size() == 36);
    CHECK(validation.size() == 12);
    CHECK(test.size() == 12);

    std::set<std::string> ids;
    for (const auto* part : {&train, &validation, &test}) {
        for (const Document& doc : *part) ids.insert(doc.id);
    }
    CHECK(ids.size() == docs.size());  // a partition: no loss, no duplication

    const std::string first = read_file(dir.str("splits/test.jsonl"));
    CHECK(run_cli(command).exit_code == 0);
    CHECK(read_file(dir.str("splits/test.jsonl")) == first);
}

TEST_CASE("augment appends variants and records what changed") {
    TempDir dir;
    const auto docs = testsupport::style_corpus(testsupport::style_vocab(5, 5, 5), 3, 3, 10, 9, "ag");
    save_dataset(docs, dir.str("data.jsonl"), DatasetFormat::Jsonl);
    const json config = {
        {"augment", {{"variants", 2}, {"ops", json::array({"swap", "delete"})}}},
        {"seeds", json::array({3})},
    };
    write_file(dir.str("cfg.json"), config.dump());

    CHECK(run_cli("--config " + dir.str("cfg.json") + " augment " + dir.str("data.jsonl") +
                  " --output " + dir.str("aug/augmented.jsonl"))
              .exit_code == 0);

    const auto out = load_dataset(dir.str("aug/augmented.jsonl"), DatasetFormat::Jsonl);
    CHECK(out.size() == 18);  // 6 originals + 2 variants each
    std::set<std::string> out_ids;
    for (const Document& doc : out) out_ids.insert(doc.id);
    CHECK(out_ids.count("ag-0") == 1);
    CHECK(out_ids.count("ag-0-aug0") == 1);
    CHECK(out_ids.count("ag-0-aug1") == 1);

    const auto records = split_lines(read_file(dir.str("aug/augment_records.jsonl")));
    REQUIRE(records.size() == 12);
    const json record = json::parse(records[0]);
    CHECK(record.contains("parent"));
    CHECK(record.contains("variant"));
    CHECK(record.at("ops").size() == 1);
    CHECK(record.contains("seed"));
}

TEST_CASE("train writes models, embeddings, metrics, and a manifest") {
    const CliFixture& f = fixture();
    REQUIRE_MESSAGE(f.train_exit == 0, f.train_output);

    for (const char* name :
         {"models/ensemble.json", "models/naive_bayes-frozen.json",
          "models/naive_bayes-fresh.json", "models/embeddings.txt",
          "models/human_frequencies.txt", "metrics.csv", "manifest.json"}) {
        CHECK_MESSAGE(fs::exists(fs::path(f.run_dir) / name), name);
    }

    const json manifest = json::parse(read_file(f.run_dir + "/manifest.json"));
    CHECK(manifest.at("config_hash").get<std::string>().size() == 16);
    CHECK(manifest.contains("finished_at"));
    CHECK(manifest.at("seeds") == json::array({11}));
    for (const json& output : manifest.at("outputs")) {
        CHECK_MESSAGE(fs::exists(fs::path(f.run_dir) / output.get<std::string>()),
                      output.get<std::string>());
    }

    const std::string metrics = read_file(f.run_dir + "/metrics.csv");
    CHECK(split_lines(metrics)[0] == "model,language,domain,acc,prec,rec,f1");
    const auto rows = csv_by_key(metrics, 3);
    REQUIRE(rows.count("ensemble|all|all") == 1);
    CHECK(std::stod(rows.at("ensemble|all|all")[3]) >= 0.7);  // separable styles
    CHECK(rows.count("ensemble|en|news") == 1);
    CHECK(rows.count("naive_bayes-frozen|all|all") == 1);
}

TEST_CASE("a second train run needs --force") {
    const CliFixture& f = fixture();
    REQUIRE(f.train_exit == 0);

    const CliResult refused = run_cli("--config " + f.config_path + " train");
    CHECK(refused.exit_code == 2);
    CHECK(refused.output.find("--force") != std::string::npos);

    CHECK(run_cli("--config " + f.config_path + " --force train").exit_code == 0);
}

TEST_CASE("the config hash ignores key order but not content") {
    TempDir dir;
    const auto docs = testsupport::style_corpus(testsupport::style_vocab(6, 6, 8), 8, 8, 12, 13, "hd");
    save_dataset(docs, dir.str("data.jsonl"), DatasetFormat::Jsonl);
    const std::string data = dir.str("data.jsonl");
    const std::string run = dir.str("run");

    // Identical content, opposite key order.
    const std::string ordered = "{\n"
        "  \"datasets\": {\"pretrain\": \"" + data + "\", \"finetune\": \"" + data +
        "\", \"test\": \"" + data + "\"},\n"
        "  \"detectors\": {\"branches\": [\"naive_bayes\"]},\n"
        "  \"features\": {\"max_features\": 50, \"lemmatize\": false},\n"
        "  \"rewrite\": {\"dim\": 4, \"min_count\": 1},\n"
        "  \"seeds\": [2],\n"
        "  \"out\": \"" + run + "\"\n"
        "}\n";
    const std::string reordered = "{\n"
        "  \"out\": \"" + run + "\",\n"
        "  \"seeds\": [2],\n"
        "  \"rewrite\": {\"min_count\": 1, \"dim\": 4},\n"
        "  \"features\": {\"lemmatize\": false, \"max_features\": 50},\n"
        "  \"detectors\": {\"branches\": [\"naive_bayes\"]},\n"
        "  \"datasets\": {\"test\": \"" + data + "\", \"finetune\": \"" + data +
        "\", \"pretrain\": \"" + data + "\"}\n"
        "}\n";

    write_file(dir.str("a.json"), ordered);
    write_file(dir.str("b.json"), reordered);
    const CliResult first = run_cli("--config " + dir.str("a.json") + " train");
    REQUIRE_MESSAGE(first.exit_code == 0, first.output);

    // Same content hash: refused without --force even though the file differs.
    CHECK(run_cli("--config " + dir.str("b.json") + " train").exit_code == 2);

    // Changed content hashes differently and runs clean.
    std::string changed = ordered;
    const size_t at = changed.find("\"seeds\": [2]");
    REQUIRE(at != std::string::npos);
    changed.replace(at, 12, "\"seeds\": [4]");
    write_file(dir.str("c.json"), changed);
    CHECK(run_cli("--config " + dir.str("c.json") + " train").exit_code == 0);
}

TEST_CASE("evaluate reports the per-group breakdown") {
    const CliFixture& f = fixture();
    REQUIRE(f.train_exit == 0);
    TempDir dir;

    const CliResult to_file = run_cli("evaluate --models " + f.run_dir + "/models --data " +
                                      f.test_path + " --output " + dir.str("eval.csv"));
    REQUIRE(to_file.exit_code == 0);
    const std::string csv = read_file(dir.str("eval.csv"));
    const auto lines = split_lines(csv);
    CHECK(lines[0] == "model,language,domain,acc,prec,rec,f1");
    CHECK(lines.size() == 1 + 3 * 2);  // 3 models x (all/all + en/news)

    const CliResult to_stdout =
        run_cli("evaluate --models " + f.run_dir + "/models --data " + f.test_path);
    CHECK(to_stdout.exit_code == 0);
    CHECK(to_stdout.output.find("model,language,domain,acc,prec,rec,f1") != std::string::npos);
    CHECK(to_stdout.output.find("ensemble,all,all,") != std::string::npos);
}

TEST_CASE("explain writes one attribution line per document") {
    const CliFixture& f = fixture();
    REQUIRE(f.train_exit == 0);
    TempDir dir;

    const CliResult ok = run_cli("explain --model " + f.run_dir + "/models/ensemble.json" +
                                 " --data " + f.test_path +
                                 " --method random --k 3 --output " + dir.str("attr.jsonl"));
    REQUIRE_MESSAGE(ok.exit_code == 0, ok.output);

    const auto lines = split_lines(read_file(dir.str("attr.jsonl")));
    REQUIRE(lines.size() == f.test_docs);
    std::set<std::string> seen_ids;
    for (const std::string& line : lines) {
        const json row = json::parse(line);
        CHECK(row.at("method") == "random");
        CHECK(row.at("scores").is_array());
        CHECK_FALSE(row.at("scores").empty());
        for (const json& score : row.at("scores")) CHECK(score.get<double>() == 0.0);
        CHECK(row.at("meta").contains("seed"));
        seen_ids.insert(row.at("doc_id").get<std::string>());
    }
    CHECK(seen_ids.size() == f.test_docs);

    // 25-token documents exceed the exact-enumeration cap.
    const CliResult too_big = run_cli("explain --model " + f.run_dir + "/models/ensemble.json" +
                                      " --data " + f.test_path +
                                      " --method shap_exact --output " + dir.str("x.jsonl"));
    CHECK(too_big.exit_code == 1);
}

TEST_CASE("rewrite applies plans derived from attributions") {
    const CliFixture& f = fixture();
    REQUIRE(f.train_exit == 0);
    TempDir dir;

    REQUIRE(run_cli("explain --model " + f.run_dir + "/models/ensemble.json" + " --data " +
                    f.test_path + " --method lime --samples 80 --k 3 --output " +
                    dir.str("attr.jsonl"))
                .exit_code == 0);

    const CliResult rewritten = run_cli(
        "--config " + f.config_path + " rewrite --data " + f.test_path + " --attributions " +
        dir.str("attr.jsonl") + " --strategy hsr --k 3 --embeddings " + f.run_dir +
        "/models/embeddings.txt --output " + dir.str("rw"));
    REQUIRE_MESSAGE(rewritten.exit_code == 0, rewritten.output);

    const auto plans = split_lines(read_file(dir.str("rw/plans.jsonl")));
    REQUIRE(plans.size() == f.test_docs);
    for (const std::string& line : plans) {
        const json plan = json::parse(line);
        CHECK(plan.at("strategy") == "hsr");
        CHECK(plan.at("substitutions").size() + plan.at("skipped").size() == 3);
    }

    const auto originals = load_dataset(f.test_path, DatasetFormat::Jsonl);
    const auto modified = load_dataset(dir.str("rw/rewritten.jsonl"), DatasetFormat::Jsonl);
    REQUIRE(modified.size() == originals.size());
    size_t changed = 0;
    for (size_t i = 0; i < originals.size(); ++i) {
        CHECK(modified[i].id == originals[i].id);
        if (modified[i].text != originals[i].text) ++changed;
    }
    CHECK(changed >= 1);

    // hsr without --embeddings is a usage error.
    CHECK(run_cli("--config " + f.config_path + " rewrite --data " + f.test_path +
                  " --attributions " + dir.str("attr.jsonl") + " --strategy hsr --output " +
                  dir.str("rw2"))
              .exit_code == 2);
}

TEST_CASE("attack runs the scenario grid and is byte-identical across reruns") {
    const CliFixture& f = fixture();
    REQUIRE(f.train_exit == 0);

    // Redaction property: even with the key set, no artifact may contain it.
    const std::string sentinel = "sk-test-sentinel-not-a-real-key";
    ::setenv("AIGT_API_KEY", sentinel.c_str(), 1);

    const std::string command = "--config " + f.config_path + " --force --mock-llm attack";
    const CliResult first = run_cli(command);
    REQUIRE_MESSAGE(first.exit_code == 0, first.output);

    const std::string seed_dir = f.run_dir + "/attack/seed_11";
    for (const char* scenario : {"lime_hsr", "lime_gpt", "random_hsr", "random_gpt"}) {
        for (const char* file : {"attributions.jsonl", "plans.jsonl", "rewritten.jsonl",
                                 "predictions.csv", "metrics.csv", "overlap.json",
                                 "skipped_docs.csv"}) {
            const std::string relative = std::string(scenario) + "/" + file;
            CHECK_MESSAGE(fs::exists(fs::path(seed_dir) / relative), relative);
        }
    }
    CHECK(fs::exists(seed_dir + "/baseline.csv"));
    CHECK(fs::exists(seed_dir + "/baseline_predictions.csv"));
    CHECK(fs::exists(seed_dir + "/report.csv"));

    const std::string report = read_file(f.run_dir + "/report.csv");
    const auto lines = split_lines(report);
    CHECK(lines[0] ==
          "explainer,strategy,model,f1,acc,delta_f1_pp,delta_acc_pp,bleu,rouge1,rougeL,flip_rate");
    CHECK(lines.size() == 1 + 3 + 4 * 3);  // 3 baseline rows + 4 scenarios x 3 models

    const auto rows = csv_by_key(report, 3);
    for (const char* model : {"ensemble", "naive_bayes-frozen", "naive_bayes-fresh"}) {
        const std::string key = std::string("none|none|") + model;
        REQUIRE_MESSAGE(rows.count(key) == 1, key);
        CHECK(rows.at(key)[5] == "0.00");  // its own baseline: zero delta
        CHECK(rows.at(key)[6] == "0.00");
        CHECK(rows.at(key)[7] == "1.000000");  // nothing rewritten
        CHECK(rows.at(key)[10] == "0.00");
    }
    for (const char* pair : {"lime|hsr", "lime|gpt", "random|hsr", "random|gpt"}) {
        for (const char* model : {"ensemble", "naive_bayes-frozen", "naive_bayes-fresh"}) {
            CHECK_MESSAGE(rows.count(std::string(pair) + "|" + model) == 1, pair);
        }
    }

    // Deltas recompute from the baseline rows of the same report.
    for (const auto& [key, fields] : rows) {
        if (fields[0] == "none") continue;
        const auto& baseline = rows.at("none|none|" + fields[2]);
        const double expect_f1 = (std::stod(fields[3]) - std::stod(baseline[3])) * 100.0;
        const double expect_acc = (std::stod(fields[4]) - std::stod(baseline[4])) * 100.0;
        // The printed deltas carry two decimals; the f1/acc columns six.
        CHECK(std::fabs(std::stod(fields[5]) - expect_f1) < 0.0051);
        CHECK(std::fabs(std::stod(fields[6]) - expect_acc) < 0.0051);
    }

    // Baseline metrics agree with the train-time evaluation of the same data.
    const auto trained = csv_by_key(read_file(f.run_dir + "/metrics.csv"), 3);
    const auto baseline = csv_by_key(read_file(seed_dir + "/baseline.csv"), 1);
    for (const char* model : {"ensemble", "naive_bayes-frozen", "naive_bayes-fresh"}) {
        CHECK(baseline.at(model)[1] == trained.at(std::string(model) + "|all|all")[6]);  // f1
        CHECK(baseline.at(model)[2] == trained.at(std::string(model) + "|all|all")[3]);  // acc
    }

    const json report_doc = json::parse(read_file(f.run_dir + "/report.json"));
    CHECK(report_doc.at("seeds") == json::array({11}));
    CHECK(report_doc.at("mean").size() == 15);
    CHECK(report_doc.at("per_seed").at("11").size() == 15);

    const json overlap = json::parse(read_file(seed_dir + "/lime_hsr/overlap.json"));
    CHECK(overlap.contains("models"));
    CHECK(overlap.contains("intersections"));

    const auto predictions = split_lines(read_file(seed_dir + "/lime_hsr/predictions.csv"));
    CHECK(predictions[0] ==
          "doc_id,gold,model,proba_before,label_before,proba_after,label_after");
    CHECK(predictions.size() == 1 + 3 * f.test_docs);

    // No artifact anywhere in the run may contain the API key.
    size_t walked = 0;
    for (const auto& entry : fs::recursive_directory_iterator(f.run_dir)) {
        if (!entry.is_regular_file()) continue;
        ++walked;
        CHECK_MESSAGE(read_file(entry.path()).find(sentinel) == std::string::npos,
                      entry.path().string());
    }
    CHECK(walked > 20);

    // Rerun: same bytes everywhere it counts.
    const std::string plans_before = read_file(seed_dir + "/lime_hsr/plans.jsonl");
    const std::string predictions_before = read_file(seed_dir + "/lime_hsr/predictions.csv");
    REQUIRE(run_cli(command).exit_code == 0);
    CHECK(read_file(f.run_dir + "/report.csv") == report);
    CHECK(read_file(seed_dir + "/lime_hsr/plans.jsonl") == plans_before);
    CHECK(read_file(seed_dir + "/lime_hsr/predictions.csv") == predictions_before);
}

TEST_CASE("report rebuilds identical bytes from the per-scenario files") {
    const CliFixture& f = fixture();
    REQUIRE(f.train_exit == 0);
    REQUIRE(fs::exists(f.run_dir + "/report.csv"));  // the attack case ran first

    const std::string report_before = read_file(f.run_dir + "/report.csv");
    const std::string json_before = read_file(f.run_dir + "/report.json");
    fs::remove(f.run_dir + "/report.csv");
    fs::remove(f.run_dir + "/report.json");

    const CliResult rebuilt = run_cli("report --run " + f.run_dir);
    REQUIRE_MESSAGE(rebuilt.exit_code == 0, rebuilt.output);
    CHECK(read_file(f.run_dir + "/report.csv") == report_before);
    CHECK(read_file(f.run_dir + "/report.json") == json_before);

    TempDir empty;
    CHECK(run_cli("report --run " + empty.str("nothing")).exit_code == 1);
}

TEST_CASE("client failures follow fail_fast") {
    const CliFixture& f = fixture();
    REQUIRE(f.train_exit == 0);
    TempDir dir;
    fs::create_directories(dir.str("run"));
    fs::copy(f.run_dir + "/models", dir.str("run/models"), fs::copy_options::recursive);

    json config = {
        {"datasets",
         {{"pretrain", f.pretrain_path}, {"finetune", f.finetune_path}, {"test", f.test_path}}},
        {"explainers", json::array({{{"method", "random"}, {"k", 3}}})},
        {"strategies", json::array({"gpt"})},
        {"client", {{"base_url", "http://127.0.0.1:9/v1"}, {"max_retries", 0},
                    {"timeout_ms", 300}}},
        {"seeds", json::array({11})},
        {"out", dir.str("run")},
    };

    SUBCASE("skips carry CLIENT_ERROR when fail_fast is off") {
        write_file(dir.str("cfg.json"), config.dump());
        const CliResult result = run_cli("--config " + dir.str("cfg.json") + " attack");
        REQUIRE_MESSAGE(result.exit_code == 0, result.output);

        const std::string plans =
            read_file(dir.str("run/attack/seed_11/random_gpt/plans.jsonl"));
        CHECK(plans.find("CLIENT_ERROR") != std::string::npos);
        CHECK(plans.find("\"substitutions\":[]") != std::string::npos);

        const auto rows = csv_by_key(read_file(dir.str("run/report.csv")), 3);
        const auto& row = rows.at("random|gpt|ensemble");
        CHECK(row[7] == "1.000000");  // nothing was rewritten
        CHECK(row[10] == "0.00");
    }

    SUBCASE("fail_fast aborts the grid") {
        config["fail_fast"] = true;
        write_file(dir.str("cfg.json"), config.dump());
        const CliResult result = run_cli("--config " + dir.str("cfg.json") + " attack");
        CHECK(result.exit_code == 1);
        CHECK(result.output.find("failed") != std::string::npos);
    }
}
