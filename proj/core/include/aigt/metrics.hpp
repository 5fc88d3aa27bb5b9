#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aigt/types.hpp"

namespace aigt {

struct BleuScore {
    double value = 0.0;
    bool empty_hypothesis = false;
};

// Sentence-level BLEU with clipped n-gram precisions up to max_n, add-one
// smoothing for zero counts at n >= 2, and the brevity penalty
// exp(min(0, 1 - ref_len/hyp_len)). Identical sequences score 1 exactly.
BleuScore bleu(const std::vector<std::string>& reference,
               const std::vector<std::string>& hypothesis, size_t max_n = 4);

// Unigram-overlap F1 with clipped counts.
double rouge1(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis);

// Longest-common-subsequence F1.
double rougeL(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis);

struct SimilarityScores {
    double bleu = 0.0;
    double rouge1 = 0.0;
    double rougeL = 0.0;
};

SimilarityScores similarity(const std::vector<std::string>& reference,
                            const std::vector<std::string>& hypothesis);

struct FlipReport {
    // Scenario naming, filled by the caller that knows the run context.
    std::string explainer;
    std::string strategy;
    std::string model;
    long n_ai = 0;   // gold-AI documents the model caught before rewriting
    long flips = 0;  // of those, now predicted human
    double flip_rate = 0.0;  // percent; 0 when n_ai == 0
};

// before/after map doc id -> predicted label on the original and rewritten
// text. Both maps must cover the same ids.
FlipReport flip_rate(const std::map<std::string, Label>& before,
                     const std::map<std::string, Label>& after,
                     const std::set<std::string>& gold_ai_ids);

struct OverlapReport {
    std::vector<std::string> model_names;  // sorted
    // Exact-subset partition: each flipped id is counted once, under the
    // full set of models that flipped it. Empty subsets are omitted.
    std::vector<std::pair<std::vector<std::string>, long>> intersections;
};

OverlapReport overlap_sets(const std::map<std::string, std::set<std::string>>& flips_by_model);

// Percentage-point change, scenario minus original.
double delta_pp(double original, double scenario);
long delta_pp_rounded(double original, double scenario);

}  // namespace aigt
