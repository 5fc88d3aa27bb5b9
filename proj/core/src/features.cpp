#include "aigt/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "aigt/errors.hpp"
#include "aigt/io.hpp"

namespace aigt {

using nlohmann::json;

namespace {

bool is_ascii_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool is_url_token(const std::string& token) {
    const size_t sep = token.find("://");
    if (sep == std::string::npos || sep == 0 || sep + 3 >= token.size()) return false;
    if (!std::isalpha(static_cast<unsigned char>(token[0]))) return false;
    for (size_t i = 1; i < sep; ++i) {
        const char c = token[i];
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '.' && c != '-') {
            return false;
        }
    }
    return true;
}

bool ends_with(const std::string& s, const char* suffix) {
    const size_t n = std::char_traits<char>::length(suffix);
    return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

void undouble(std::string& w) {
    if (w.size() < 3) return;
    const char c = w.back();
    if (w[w.size() - 2] != c) return;
    if (!std::isalpha(static_cast<unsigned char>(c)) || is_vowel(c)) return;
    if (c == 'l' || c == 's' || c == 'z') return;
    w.pop_back();
}

// One pass of the two rule stages; callers loop to fixpoint.
bool lemma_pass(std::string& w) {
    const std::string before = w;
    if (ends_with(w, "ies") && w.size() >= 5) {
        w.replace(w.size() - 3, 3, "y");
    } else if (ends_with(w, "sses")) {
        w.erase(w.size() - 2);
    } else if (ends_with(w, "s") && w.size() >= 4 && !ends_with(w, "ss") && !ends_with(w, "us") &&
               !ends_with(w, "is")) {
        w.pop_back();
    }
    if (ends_with(w, "ing") && w.size() >= 6) {
        w.erase(w.size() - 3);
        undouble(w);
    } else if (ends_with(w, "ed") && w.size() >= 5) {
        w.erase(w.size() - 2);
        undouble(w);
    } else if (ends_with(w, "lijk") && w.size() >= 7) {
        w.erase(w.size() - 4);
    } else if (ends_with(w, "heid") && w.size() >= 7) {
        w.erase(w.size() - 4);
    } else if (ends_with(w, "ness") && w.size() >= 7) {
        w.erase(w.size() - 4);
    } else if (ends_with(w, "ment") && w.size() >= 8) {
        w.erase(w.size() - 4);
    }
    return w != before;
}

std::string lemmatize_word(std::string w) {
    while (lemma_pass(w)) {
    }
    return w;
}

}  // namespace

std::string preprocess(const std::string& text, const PreprocessProfile& profile) {
    std::istringstream in(text);
    std::string token;
    std::string out;
    while (in >> token) {
        if (profile.strip_urls && is_url_token(token)) continue;
        if (profile.lowercase) token = to_lower_ascii(token);
        if (profile.strip_punct) {
            std::string kept;
            for (const char c : token) {
                if (!is_ascii_punct(c)) kept.push_back(c);
            }
            token = std::move(kept);
            if (token.empty()) continue;
        }
        if (profile.lemmatize) token = lemmatize_word(std::move(token));
        if (!out.empty()) out.push_back(' ');
        out += token;
    }
    return out;
}

namespace {

struct Codepoint {
    uint32_t value = 0;
    size_t start = 0;
    size_t length = 0;
};

// Permissive UTF-8 walk: malformed bytes come back as single-byte points so
// offsets always advance.
Codepoint decode_utf8(const std::string& s, size_t i) {
    const auto byte = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
    const unsigned char b0 = byte(i);
    Codepoint cp{b0, i, 1};
    auto cont = [&](size_t k) { return k < s.size() && (byte(k) & 0xc0) == 0x80; };
    if (b0 < 0x80) return cp;
    if ((b0 & 0xe0) == 0xc0 && cont(i + 1)) {
        cp.value = (uint32_t(b0 & 0x1f) << 6) | (byte(i + 1) & 0x3f);
        cp.length = 2;
    } else if ((b0 & 0xf0) == 0xe0 && cont(i + 1) && cont(i + 2)) {
        cp.value = (uint32_t(b0 & 0x0f) << 12) | (uint32_t(byte(i + 1) & 0x3f) << 6) |
                   (byte(i + 2) & 0x3f);
        cp.length = 3;
    } else if ((b0 & 0xf8) == 0xf0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        cp.value = (uint32_t(b0 & 0x07) << 18) | (uint32_t(byte(i + 1) & 0x3f) << 12) |
                   (uint32_t(byte(i + 2) & 0x3f) << 6) | (byte(i + 3) & 0x3f);
        cp.length = 4;
    }
    return cp;
}

bool is_unicode_space(uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0a: case 0x0b: case 0x0c: case 0x0d: case 0x20:
        case 0x85: case 0xa0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202f: case 0x205f: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200a;
    }
}

bool is_word_char(uint32_t cp) {
    if (cp < 0x80) return std::isalnum(static_cast<int>(cp)) != 0;
    return !is_unicode_space(cp);
}

}  // namespace

TokenSequence tokenize(const std::string& text) {
    TokenSequence seq;
    size_t token_start = 0;
    bool in_token = false;
    uint32_t prev_cp = 0;

    auto flush = [&](size_t end) {
        if (!in_token) return;
        seq.tokens.push_back(text.substr(token_start, end - token_start));
        seq.offsets.emplace_back(token_start, end);
        in_token = false;
    };

    size_t i = 0;
    while (i < text.size()) {
        const Codepoint cp = decode_utf8(text, i);
        if (is_unicode_space(cp.value)) {
            flush(i);
            prev_cp = cp.value;
            i += cp.length;
            continue;
        }
        const bool ascii_punct = cp.value < 0x80 && is_ascii_punct(static_cast<char>(cp.value));
        if (ascii_punct) {
            const bool joiner = cp.value == '\'' || cp.value == '-';
            bool inside_word = false;
            if (joiner && in_token && is_word_char(prev_cp)) {
                const size_t next = i + cp.length;
                if (next < text.size()) {
                    const Codepoint nc = decode_utf8(text, next);
                    inside_word = is_word_char(nc.value);
                }
            }
            if (!inside_word) {
                flush(i);
                seq.tokens.push_back(text.substr(i, cp.length));
                seq.offsets.emplace_back(i, i + cp.length);
                prev_cp = cp.value;
                i += cp.length;
                continue;
            }
        }
        if (!in_token) {
            token_start = i;
            in_token = true;
        }
        prev_cp = cp.value;
        i += cp.length;
    }
    flush(text.size());
    return seq;
}

namespace {

void collect_terms(const std::vector<std::string>& tokens, int ngram_max,
                   const std::function<void(const std::string&)>& sink) {
    for (const std::string& t : tokens) sink(t);
    if (ngram_max >= 2) {
        for (size_t i = 0; i + 1 < tokens.size(); ++i) sink(tokens[i] + ' ' + tokens[i + 1]);
    }
}

}  // namespace

TfidfModel TfidfModel::fit(const std::vector<TokenSequence>& corpus, const TfidfOptions& options) {
    if (corpus.empty()) throw EmptyCorpusError("tf-idf fit needs a non-empty corpus");
    if (options.max_features < 1) throw Error("max_features must be >= 1");
    if (options.ngram_max < 1 || options.ngram_max > 2) throw Error("ngram_max must be 1 or 2");

    std::map<std::string, uint64_t> total_count;
    std::map<std::string, uint64_t> doc_freq;
    std::unordered_map<std::string, uint64_t> in_doc;
    for (const TokenSequence& doc : corpus) {
        in_doc.clear();
        collect_terms(doc.tokens, options.ngram_max,
                      [&](const std::string& t) { ++in_doc[t]; });
        for (const auto& [term, count] : in_doc) {
            total_count[term] += count;
            doc_freq[term] += 1;
        }
    }

    // Top max_features by total corpus count, ties favoring the
    // lexicographically smaller term (total_count iterates in term order,
    // so stable_sort keeps that order among equals).
    std::vector<std::pair<std::string, uint64_t>> ranked(total_count.begin(), total_count.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > options.max_features) ranked.resize(options.max_features);

    TfidfModel model;
    model.options_ = options;
    model.vocabulary_.reserve(ranked.size());
    for (const auto& [term, count] : ranked) model.vocabulary_.push_back(term);
    std::sort(model.vocabulary_.begin(), model.vocabulary_.end());

    const double n_docs = static_cast<double>(corpus.size());
    model.idf_.reserve(model.vocabulary_.size());
    model.index_.reserve(model.vocabulary_.size());
    for (size_t i = 0; i < model.vocabulary_.size(); ++i) {
        const std::string& term = model.vocabulary_[i];
        const double df = static_cast<double>(doc_freq.at(term));
        model.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + df)) + 1.0);
        model.index_.emplace_back(term, static_cast<uint32_t>(i));
    }
    return model;
}

uint32_t TfidfModel::lookup(const std::string& term) const {
    const auto it = std::lower_bound(
        index_.begin(), index_.end(), term,
        [](const std::pair<std::string, uint32_t>& entry, const std::string& t) {
            return entry.first < t;
        });
    if (it == index_.end() || it->first != term) return UINT32_MAX;
    return it->second;
}

FeatureVector TfidfModel::transform_tokens(const std::vector<std::string>& tokens) const {
    std::map<uint32_t, double> counts;
    collect_terms(tokens, options_.ngram_max, [&](const std::string& t) {
        const uint32_t idx = lookup(t);
        if (idx != UINT32_MAX) counts[idx] += 1.0;
    });

    FeatureVector out;
    out.indices.reserve(counts.size());
    out.values.reserve(counts.size());
    double norm_sq = 0.0;
    for (const auto& [idx, tf] : counts) {
        const double v = tf * idf_[idx];
        out.indices.push_back(idx);
        out.values.push_back(v);
        norm_sq += v * v;
    }
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : out.values) v *= inv;
    }
    return out;
}

FeatureVector TfidfModel::transform(const TokenSequence& doc) const {
    return transform_tokens(doc.tokens);
}

std::string TfidfModel::to_json() const {
    json obj;
    obj["vocabulary"] = vocabulary_;
    obj["idf"] = idf_;
    obj["max_features"] = options_.max_features;
    if (options_.ngram_max != 1) obj["ngram_max"] = options_.ngram_max;
    return obj.dump();
}

TfidfModel TfidfModel::from_json(const std::string& json_text) {
    json obj;
    try {
        obj = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad tf-idf json: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("vocabulary") || !obj.contains("idf") ||
        !obj.contains("max_features")) {
        throw ParseError("tf-idf json needs vocabulary, idf, max_features");
    }
    TfidfModel model;
    model.vocabulary_ = obj.at("vocabulary").get<std::vector<std::string>>();
    model.idf_ = obj.at("idf").get<std::vector<double>>();
    model.options_.max_features = obj.at("max_features").get<size_t>();
    model.options_.ngram_max = obj.value("ngram_max", 1);
    if (model.vocabulary_.size() != model.idf_.size()) {
        throw ParseError("vocabulary/idf length mismatch");
    }
    if (model.vocabulary_.size() > model.options_.max_features) {
        throw ParseError("vocabulary exceeds max_features");
    }
    model.index_.reserve(model.vocabulary_.size());
    for (size_t i = 0; i < model.vocabulary_.size(); ++i) {
        model.index_.emplace_back(model.vocabulary_[i], static_cast<uint32_t>(i));
    }
    std::sort(model.index_.begin(), model.index_.end());
    return model;
}

bool operator==(const TfidfModel& a, const TfidfModel& b) {
    return a.vocabulary_ == b.vocabulary_ && a.idf_ == b.idf_ &&
           a.options_.max_features == b.options_.max_features &&
           a.options_.ngram_max == b.options_.ngram_max;
}

}  // namespace aigt
