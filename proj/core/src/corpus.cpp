#include "aigt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "aigt/errors.hpp"
#include "aigt/io.hpp"
#include "aigt/rewrite.hpp"
#include "aigt/rng.hpp"

namespace aigt {

using nlohmann::json;

std::string to_string(Label l) { return l == Label::Ai ? "ai" : "human"; }

std::string to_string(Language l) {
    switch (l) {
        case Language::En: return "en";
        case Language::Nl: return "nl";
        default: return "other";
    }
}

std::string to_string(Domain d) {
    switch (d) {
        case Domain::News: return "news";
        case Domain::Reviews: return "reviews";
        case Domain::Twitter: return "twitter";
        default: return "other";
    }
}

std::string to_string(AugmentOp op) {
    switch (op) {
        case AugmentOp::Synonym: return "synonym";
        case AugmentOp::Swap: return "swap";
        case AugmentOp::Insert: return "insert";
        case AugmentOp::Delete: return "delete";
        case AugmentOp::Spelling: return "spelling";
        case AugmentOp::BackTranslate: return "back_translate";
    }
    return "synonym";
}

Label parse_label(const std::string& s) {
    const std::string v = to_lower_ascii(trim(s));
    if (v == "human") return Label::Human;
    if (v == "ai") return Label::Ai;
    throw ParseError("unknown label: '" + s + "'");
}

Language parse_language(const std::string& s) {
    const std::string v = to_lower_ascii(trim(s));
    if (v == "en") return Language::En;
    if (v == "nl") return Language::Nl;
    return Language::Other;
}

Domain parse_domain(const std::string& s) {
    const std::string v = to_lower_ascii(trim(s));
    if (v == "news") return Domain::News;
    if (v == "reviews") return Domain::Reviews;
    if (v == "twitter") return Domain::Twitter;
    return Domain::Other;
}

AugmentOp parse_augment_op(const std::string& s) {
    const std::string v = to_lower_ascii(trim(s));
    if (v == "synonym") return AugmentOp::Synonym;
    if (v == "swap") return AugmentOp::Swap;
    if (v == "insert") return AugmentOp::Insert;
    if (v == "delete") return AugmentOp::Delete;
    if (v == "spelling") return AugmentOp::Spelling;
    if (v == "back_translate") return AugmentOp::BackTranslate;
    throw ParseError("unknown augmentation op: '" + s + "'");
}

namespace {

Document document_from_fields(const std::string& id, const std::string& text,
                              const std::string& label, const std::string& language,
                              const std::string& domain, std::optional<std::string> source,
                              size_t line) {
    Document doc;
    doc.id = trim(id);
    doc.text = text;
    if (doc.id.empty()) throw ParseError("line " + std::to_string(line) + ": empty id");
    if (trim(text).empty()) throw ParseError("line " + std::to_string(line) + ": empty text");
    try {
        doc.label = parse_label(label);
    } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
    doc.language = parse_language(language);
    doc.domain = parse_domain(domain);
    doc.source = std::move(source);
    return doc;
}

std::string require_string(const json& obj, const char* key, size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        throw MissingFieldError("line " + std::to_string(line) + ": missing field '" + key + "'");
    }
    if (!it->is_string()) {
        throw ParseError("line " + std::to_string(line) + ": field '" + key + "' is not a string");
    }
    return it->get<std::string>();
}

std::vector<Document> parse_jsonl(const std::string& content) {
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    size_t line = 0;
    std::istringstream in(content);
    std::string raw;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty()) continue;
        json obj;
        try {
            obj = json::parse(raw);
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line) + ": " + e.what());
        }
        if (!obj.is_object()) {
            throw ParseError("line " + std::to_string(line) + ": not a JSON object");
        }
        std::optional<std::string> source;
        if (const auto it = obj.find("source"); it != obj.end() && it->is_string()) {
            source = it->get<std::string>();
        }
        Document doc = document_from_fields(
            require_string(obj, "id", line), require_string(obj, "text", line),
            require_string(obj, "label", line), require_string(obj, "language", line),
            require_string(obj, "domain", line), std::move(source), line);
        if (!seen.insert(doc.id).second) {
            throw DuplicateIdError("line " + std::to_string(line) + ": duplicate id '" + doc.id + "'");
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<Document> parse_csv_dataset(const std::string& content) {
    std::vector<size_t> record_lines;
    const auto records = parse_csv(content, &record_lines);
    if (records.empty()) return {};
    const auto& header = records.front();
    std::unordered_map<std::string, size_t> columns;
    for (size_t i = 0; i < header.size(); ++i) columns[to_lower_ascii(trim(header[i]))] = i;
    for (const char* required : {"id", "text", "label", "language", "domain"}) {
        if (!columns.count(required)) {
            throw MissingFieldError(std::string("missing column '") + required + "'");
        }
    }
    const bool has_source = columns.count("source") > 0;

    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    for (size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        const size_t line = record_lines[r];
        if (row.size() != header.size()) {
            throw ParseError("line " + std::to_string(line) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(row.size()));
        }
        std::optional<std::string> source;
        if (has_source && !row[columns.at("source")].empty()) source = row[columns.at("source")];
        Document doc = document_from_fields(row[columns.at("id")], row[columns.at("text")],
                                            row[columns.at("label")], row[columns.at("language")],
                                            row[columns.at("domain")], std::move(source), line);
        if (!seen.insert(doc.id).second) {
            throw DuplicateIdError("line " + std::to_string(line) + ": duplicate id '" + doc.id + "'");
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

}  // namespace

std::vector<Document> parse_dataset(const std::string& content, DatasetFormat format) {
    return format == DatasetFormat::Jsonl ? parse_jsonl(content) : parse_csv_dataset(content);
}

std::vector<Document> load_dataset(const std::string& path, DatasetFormat format) {
    return parse_dataset(read_text_file(path), format);
}

void save_dataset(const std::vector<Document>& docs, const std::string& path,
                  DatasetFormat format) {
    std::string out;
    if (format == DatasetFormat::Jsonl) {
        for (const Document& d : docs) {
            json obj{{"id", d.id},
                     {"text", d.text},
                     {"label", to_string(d.label)},
                     {"language", to_string(d.language)},
                     {"domain", to_string(d.domain)}};
            if (d.source) obj["source"] = *d.source;
            out += obj.dump();
            out.push_back('\n');
        }
    } else {
        out = "id,text,label,language,domain,source\n";
        for (const Document& d : docs) {
            out += csv_escape(d.id) + ',' + csv_escape(d.text) + ',' + to_string(d.label) + ',' +
                   to_string(d.language) + ',' + to_string(d.domain) + ',' +
                   csv_escape(d.source.value_or("")) + '\n';
        }
    }
    atomic_write_file(path, out);
}

namespace {

std::string stratum_key(const Document& doc, const std::vector<std::string>& strata) {
    std::string key;
    for (const std::string& field : strata) {
        if (field == "label") key += to_string(doc.label);
        else if (field == "language") key += to_string(doc.language);
        else if (field == "domain") key += to_string(doc.domain);
        else throw ParseError("unknown stratum field: '" + field + "'");
        key.push_back('|');
    }
    return key;
}

size_t round_half_up(double x) { return static_cast<size_t>(std::floor(x + 0.5)); }

}  // namespace

DatasetSplit stratified_split(const std::vector<Document>& docs, const SplitSpec& spec) {
    if (docs.empty()) throw EmptyStratumError("cannot split an empty dataset");

    // Stratum membership in input order; input position doubles as the
    // stable sort key for the emitted lists.
    std::map<std::string, std::vector<size_t>> strata;
    for (size_t i = 0; i < docs.size(); ++i) strata[stratum_key(docs[i], spec.strata)].push_back(i);

    enum class Bucket : uint8_t { Train, Validation, Test };
    std::vector<Bucket> assignment(docs.size(), Bucket::Train);

    for (const auto& [key, members] : strata) {
        std::vector<size_t> order = members;
        Rng rng(derive_seed(spec.seed, fnv1a64(key)));
        rng.shuffle(order);

        const size_t n = order.size();
        size_t n_test = round_half_up(spec.test_fraction * static_cast<double>(n));
        if (n_test > n) n_test = n;
        size_t n_val = round_half_up(spec.validation_fraction * static_cast<double>(n));
        if (n_test + n_val > n) n_val = n - n_test;

        for (size_t i = 0; i < n; ++i) {
            assignment[order[i]] =
                i < n_test ? Bucket::Test : (i < n_test + n_val ? Bucket::Validation : Bucket::Train);
        }
    }

    DatasetSplit split;
    split.strata_keys = spec.strata;
    for (size_t i = 0; i < docs.size(); ++i) {
        switch (assignment[i]) {
            case Bucket::Train: split.train.push_back(docs[i]); break;
            case Bucket::Validation: split.validation.push_back(docs[i]); break;
            case Bucket::Test: split.test.push_back(docs[i]); break;
        }
    }
    return split;
}

LexiconSynonyms::LexiconSynonyms(std::map<std::string, std::vector<std::string>> entries)
    : entries_(std::move(entries)) {}

LexiconSynonyms LexiconSynonyms::from_file(const std::string& path) {
    std::map<std::string, std::vector<std::string>> entries;
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string term;
        fields >> term;
        std::vector<std::string> synonyms;
        std::string syn;
        while (fields >> syn) synonyms.push_back(syn);
        if (!synonyms.empty()) entries[to_lower_ascii(term)] = std::move(synonyms);
    }
    return LexiconSynonyms(std::move(entries));
}

std::vector<std::string> LexiconSynonyms::lookup(const std::string& token) const {
    const auto it = entries_.find(to_lower_ascii(token));
    return it == entries_.end() ? std::vector<std::string>{} : it->second;
}

namespace {

std::vector<std::string> whitespace_words(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out.push_back(' ');
        out += words[i];
    }
    return out;
}

// Strips non-alphanumeric edges so "word," looks up as "word" and the comma
// survives the substitution.
void split_edges(const std::string& w, std::string* prefix, std::string* core,
                 std::string* suffix) {
    size_t b = 0;
    size_t e = w.size();
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    while (b < e && !is_word(w[b])) ++b;
    while (e > b && !is_word(w[e - 1])) --e;
    *prefix = w.substr(0, b);
    *core = w.substr(b, e - b);
    *suffix = w.substr(e);
}

bool apply_synonym(std::vector<std::string>& words, Rng& rng, const SynonymSource& lexicon) {
    std::vector<size_t> order(words.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (const size_t i : order) {
        std::string prefix, core, suffix;
        split_edges(words[i], &prefix, &core, &suffix);
        if (core.empty()) continue;
        std::vector<std::string> candidates;
        for (const std::string& s : lexicon.lookup(core)) {
            if (to_lower_ascii(s) != to_lower_ascii(core)) candidates.push_back(s);
        }
        if (candidates.empty()) continue;
        const std::string& pick = candidates[rng.below(candidates.size())];
        words[i] = prefix + match_case(core, pick) + suffix;
        return true;
    }
    return false;
}

bool apply_swap(std::vector<std::string>& words, Rng& rng) {
    if (words.size() < 2) return false;
    for (int attempt = 0; attempt < 10; ++attempt) {
        const size_t i = rng.below(words.size());
        size_t j = rng.below(words.size() - 1);
        if (j >= i) ++j;
        if (words[i] == words[j]) continue;
        std::swap(words[i], words[j]);
        return true;
    }
    return false;
}

bool apply_insert(std::vector<std::string>& words, Rng& rng) {
    if (words.empty()) return false;
    const std::string copy = words[rng.below(words.size())];
    const size_t at = rng.below(words.size() + 1);
    words.insert(words.begin() + static_cast<ptrdiff_t>(at), copy);
    return true;
}

bool apply_delete(std::vector<std::string>& words, Rng& rng) {
    if (words.size() < 2) return false;
    words.erase(words.begin() + static_cast<ptrdiff_t>(rng.below(words.size())));
    return true;
}

bool apply_spelling(std::vector<std::string>& words, Rng& rng) {
    std::vector<size_t> eligible;
    for (size_t i = 0; i < words.size(); ++i) {
        std::string prefix, core, suffix;
        split_edges(words[i], &prefix, &core, &suffix);
        if (core.size() >= 4) eligible.push_back(i);
    }
    if (eligible.empty()) return false;
    const size_t i = eligible[rng.below(eligible.size())];
    std::string prefix, core, suffix;
    split_edges(words[i], &prefix, &core, &suffix);
    switch (rng.below(3)) {
        case 0: {  // substitute
            const size_t at = rng.below(core.size());
            char c = static_cast<char>('a' + rng.below(26));
            if (c == core[at]) c = c == 'z' ? 'a' : static_cast<char>(c + 1);
            core[at] = c;
            break;
        }
        case 1: {  // transpose adjacent
            const size_t at = rng.below(core.size() - 1);
            if (core[at] == core[at + 1]) {
                core[at] = core[at] == 'z' ? 'a' : static_cast<char>(core[at] + 1);
            } else {
                std::swap(core[at], core[at + 1]);
            }
            break;
        }
        default: {  // drop
            core.erase(rng.below(core.size()), 1);
            break;
        }
    }
    words[i] = prefix + core + suffix;
    return true;
}

bool apply_back_translate(std::string& text, LlmClient& client) {
    const std::string pivot = client.complete("Translate this text to Dutch: '" + text + "'");
    const std::string back = client.complete("Translate this text to English: '" + pivot + "'");
    if (trim(back).empty()) return false;
    text = back;
    return true;
}

}  // namespace

std::vector<std::pair<Document, AugmentationRecord>> augment(
    const Document& doc, const std::vector<AugmentOp>& ops, size_t n_variants, uint64_t seed,
    const SynonymSource* lexicon, LlmClient* client) {
    std::vector<std::pair<Document, AugmentationRecord>> out;
    const std::vector<std::string> parent_words = whitespace_words(doc.text);

    for (size_t v = 0; v < n_variants; ++v) {
        const uint64_t variant_seed = derive_seed(seed, v);
        Rng rng(variant_seed);

        std::vector<AugmentOp> remaining = ops;
        std::string text;
        std::optional<AugmentOp> applied;
        while (!remaining.empty() && !applied) {
            const size_t pick = rng.below(remaining.size());
            const AugmentOp op = remaining[pick];
            remaining.erase(remaining.begin() + static_cast<ptrdiff_t>(pick));

            if (op == AugmentOp::BackTranslate) {
                if (!client) continue;
                std::string bt = doc.text;
                if (apply_back_translate(bt, *client) &&
                    whitespace_words(bt) != parent_words) {
                    text = std::move(bt);
                    applied = op;
                }
                continue;
            }

            std::vector<std::string> words = parent_words;
            bool ok = false;
            switch (op) {
                case AugmentOp::Synonym:
                    if (!lexicon) throw MissingLexiconError("synonym augmentation needs a synonym source");
                    ok = apply_synonym(words, rng, *lexicon);
                    break;
                case AugmentOp::Swap: ok = apply_swap(words, rng); break;
                case AugmentOp::Insert: ok = apply_insert(words, rng); break;
                case AugmentOp::Delete: ok = apply_delete(words, rng); break;
                case AugmentOp::Spelling: ok = apply_spelling(words, rng); break;
                case AugmentOp::BackTranslate: break;  // handled above
            }
            if (ok && words != parent_words) {
                text = join_words(words);
                applied = op;
            }
        }
        if (!applied) continue;

        Document variant = doc;
        variant.id = doc.id + "-aug" + std::to_string(v);
        variant.text = std::move(text);
        AugmentationRecord record{doc.id, variant.id, {*applied}, variant_seed};
        out.emplace_back(std::move(variant), std::move(record));
    }
    return out;
}

bool augmentation_applies_only_to_train(const DatasetSplit& split,
                                        const std::vector<AugmentationRecord>& records) {
    std::unordered_set<std::string> train, elsewhere;
    for (const Document& d : split.train) train.insert(d.id);
    for (const Document& d : split.validation) elsewhere.insert(d.id);
    for (const Document& d : split.test) elsewhere.insert(d.id);

    bool all_train = true;
    for (const AugmentationRecord& r : records) {
        if (train.count(r.parent_id)) continue;
        if (elsewhere.count(r.parent_id)) {
            all_train = false;
            continue;
        }
        throw UnknownParentError("parent id '" + r.parent_id + "' is in no split");
    }
    return all_train;
}

}  // namespace aigt
