#include "aigt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "aigt/errors.hpp"

namespace aigt {

namespace {

// n-gram -> count, the gram encoded as its token indices into a shared pool
// to avoid string splicing; equal token strings share a pool id.
std::unordered_map<std::string, long> ngram_counts(const std::vector<std::string>& tokens,
                                                   size_t n) {
    std::unordered_map<std::string, long> counts;
    if (tokens.size() < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (size_t k = 0; k < n; ++k) {
            key += tokens[i + k];
            key.push_back('\x1f');
        }
        ++counts[key];
    }
    return counts;
}

double f1_from_overlap(double overlap, double hyp_size, double ref_size) {
    if (hyp_size == 0.0 && ref_size == 0.0) return 1.0;
    if (hyp_size == 0.0 || ref_size == 0.0) return 0.0;
    if (overlap == 0.0) return 0.0;
    const double p = overlap / hyp_size;
    const double r = overlap / ref_size;
    return 2.0 * p * r / (p + r);
}

}  // namespace

BleuScore bleu(const std::vector<std::string>& reference,
               const std::vector<std::string>& hypothesis, size_t max_n) {
    if (max_n < 1) max_n = 1;
    if (hypothesis.empty()) {
        return BleuScore{reference.empty() ? 1.0 : 0.0, true};
    }

    double log_sum = 0.0;
    for (size_t n = 1; n <= max_n; ++n) {
        const auto ref_grams = ngram_counts(reference, n);
        const auto hyp_grams = ngram_counts(hypothesis, n);
        double matches = 0.0;
        double total = 0.0;
        for (const auto& [gram, count] : hyp_grams) {
            total += static_cast<double>(count);
            const auto it = ref_grams.find(gram);
            if (it != ref_grams.end()) {
                matches += static_cast<double>(std::min(count, it->second));
            }
        }
        double p;
        if (n == 1) {
            if (matches == 0.0) return BleuScore{0.0, false};
            p = matches / total;
        } else if (matches == 0.0 || total == 0.0) {
            p = (matches + 1.0) / (total + 1.0);
        } else {
            p = matches / total;
        }
        log_sum += std::log(p);
    }

    const double ref_len = static_cast<double>(reference.size());
    const double hyp_len = static_cast<double>(hypothesis.size());
    const double bp = std::exp(std::min(0.0, 1.0 - ref_len / hyp_len));
    const double value = bp * std::exp(log_sum / static_cast<double>(max_n));
    return BleuScore{std::min(1.0, value), false};
}

double rouge1(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis) {
    const auto ref_counts = ngram_counts(reference, 1);
    const auto hyp_counts = ngram_counts(hypothesis, 1);
    double overlap = 0.0;
    for (const auto& [token, count] : hyp_counts) {
        const auto it = ref_counts.find(token);
        if (it != ref_counts.end()) {
            overlap += static_cast<double>(std::min(count, it->second));
        }
    }
    return f1_from_overlap(overlap, static_cast<double>(hypothesis.size()),
                           static_cast<double>(reference.size()));
}

double rougeL(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis) {
    const size_t n = reference.size();
    const size_t m = hypothesis.size();
    if (n == 0 && m == 0) return 1.0;
    if (n == 0 || m == 0) return 0.0;

    // Rolling-row LCS.
    std::vector<long> prev(m + 1, 0), curr(m + 1, 0);
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            curr[j] = reference[i - 1] == hypothesis[j - 1]
                          ? prev[j - 1] + 1
                          : std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return f1_from_overlap(static_cast<double>(prev[m]), static_cast<double>(m),
                           static_cast<double>(n));
}

SimilarityScores similarity(const std::vector<std::string>& reference,
                            const std::vector<std::string>& hypothesis) {
    return SimilarityScores{bleu(reference, hypothesis).value, rouge1(reference, hypothesis),
                            rougeL(reference, hypothesis)};
}

FlipReport flip_rate(const std::map<std::string, Label>& before,
                     const std::map<std::string, Label>& after,
                     const std::set<std::string>& gold_ai_ids) {
    if (before.size() != after.size()) {
        throw IdMismatchError("before/after cover different numbers of documents");
    }
    for (const auto& [id, label] : before) {
        if (!after.count(id)) throw IdMismatchError("id '" + id + "' missing from after");
    }
    FlipReport report;
    for (const std::string& id : gold_ai_ids) {
        const auto b = before.find(id);
        if (b == before.end()) throw IdMismatchError("gold id '" + id + "' missing from before");
        if (b->second != Label::Ai) continue;  // the model never caught it
        ++report.n_ai;
        if (after.at(id) == Label::Human) ++report.flips;
    }
    report.flip_rate = report.n_ai == 0
                           ? 0.0
                           : 100.0 * static_cast<double>(report.flips) /
                                 static_cast<double>(report.n_ai);
    return report;
}

OverlapReport overlap_sets(const std::map<std::string, std::set<std::string>>& flips_by_model) {
    OverlapReport report;
    for (const auto& [name, ids] : flips_by_model) report.model_names.push_back(name);

    // Exact-subset partition of the union: each id is binned under precisely
    // the set of models that flipped it.
    std::map<std::vector<std::string>, long> bins;
    std::set<std::string> all_ids;
    for (const auto& [name, ids] : flips_by_model) all_ids.insert(ids.begin(), ids.end());
    for (const std::string& id : all_ids) {
        std::vector<std::string> subset;
        for (const auto& [name, ids] : flips_by_model) {
            if (ids.count(id)) subset.push_back(name);
        }
        ++bins[subset];
    }

    report.intersections.assign(bins.begin(), bins.end());
    std::sort(report.intersections.begin(), report.intersections.end(),
              [](const auto& a, const auto& b) {
                  if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
                  return a.first < b.first;
              });
    return report;
}

double delta_pp(double original, double scenario) { return (scenario - original) * 100.0; }

long delta_pp_rounded(double original, double scenario) {
    return std::lround(delta_pp(original, scenario));
}

}  // namespace aigt
