#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aigt/detectors.hpp"
#include "aigt/features.hpp"

namespace aigt {

// Value function target: scores an ordered list of surface tokens. Keeping
// attribution against this interface (rather than a concrete model) lets
// tests swap in analytic scorers with known ground truth.
class TokenScorer {
public:
    virtual ~TokenScorer() = default;
    virtual double score(const std::vector<std::string>& tokens) const = 0;
};

// Joins the kept tokens with single spaces and runs the full text pipeline,
// so attribution positions refer to tokens of the raw document text.
class DetectorTokenScorer : public TokenScorer {
public:
    explicit DetectorTokenScorer(const TextModel& model) : model_(&model) {}
    double score(const std::vector<std::string>& tokens) const override;

private:
    const TextModel* model_;
};

enum class MaskMode : uint8_t {
    Delete,       // drop masked tokens entirely
    Placeholder,  // replace masked tokens with a fixed string
};

struct CoalitionOptions {
    MaskMode mask_mode = MaskMode::Delete;
    std::string placeholder = "[UNK]";
};

// members = kept token positions, strictly increasing.
double coalition_value(const TokenScorer& scorer, const std::vector<std::string>& tokens,
                       const std::vector<size_t>& members, const CoalitionOptions& options = {});

enum class AttributionMethod : uint8_t { ShapExact, ShapSampled, Lime, Random };

std::string to_string(AttributionMethod method);
AttributionMethod parse_attribution_method(const std::string& s);

struct AttributionVector {
    std::string doc_id;
    AttributionMethod method = AttributionMethod::ShapExact;
    std::vector<double> scores;  // one per token position
    size_t samples = 0;          // permutations or perturbations drawn
    uint64_t seed = 0;
    double kernel_width = 0.0;   // Lime only
};

struct ShapleyOptions {
    size_t max_exact_tokens = 12;  // exact enumeration is 2^m coalition values
    CoalitionOptions coalition;
};

AttributionVector exact_shapley(const TokenScorer& scorer, const std::string& doc_id,
                                const std::vector<std::string>& tokens,
                                const ShapleyOptions& options = {});

AttributionVector sampled_shapley(const TokenScorer& scorer, const std::string& doc_id,
                                  const std::vector<std::string>& tokens, size_t n_permutations,
                                  uint64_t seed, const CoalitionOptions& options = {});

struct LimeOptions {
    size_t n_samples = 1000;
    // Width of exp(-d^2/width^2) over normalized Hamming distances; 0 means
    // auto, 0.75/sqrt(m), the usual count-distance width rescaled to [0,1].
    double kernel_width = 0.0;
    double ridge_lambda = 1.0;
    double keep_probability = 0.5;
    CoalitionOptions coalition;
};

AttributionVector lime_attribution(const TokenScorer& scorer, const std::string& doc_id,
                                   const std::vector<std::string>& tokens,
                                   const LimeOptions& options, uint64_t seed);

AttributionVector random_attribution(const std::string& doc_id, size_t n_tokens, uint64_t seed);

struct TokenSelection {
    std::string doc_id;
    std::vector<size_t> positions;  // selection order (see the producing op)
    size_t k = 0;                   // requested budget (count mode)
    AttributionMethod method = AttributionMethod::ShapExact;
    bool used_absolute = false;
};

// Top-k by |score| descending, ties to the lower position; at most
// min(k, tokens) positions, kept in that ranking order.
TokenSelection select_top_tokens(const AttributionVector& attribution, size_t k);
TokenSelection select_by_threshold(const AttributionVector& attribution, double min_abs_score);
TokenSelection random_selection(const std::string& doc_id, size_t n_tokens, size_t k,
                                uint64_t seed);

// Replaces each token's score with the mean score of its surface form within
// the enclosing sentence (boundaries after . ? !).
std::vector<double> sentence_averaged_scores(const std::vector<std::string>& tokens,
                                             const std::vector<double>& scores);

// Documents the model currently classifies correctly; only these are worth
// attacking.
std::vector<Document> eligible_documents(const TextModel& model,
                                         const std::vector<Document>& docs);

}  // namespace aigt
