#include "aigt/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <Eigen/Dense>

#include "aigt/errors.hpp"
#include "aigt/rng.hpp"

namespace aigt {

std::string to_string(AttributionMethod method) {
    switch (method) {
        case AttributionMethod::ShapExact: return "shap_exact";
        case AttributionMethod::ShapSampled: return "shap_sampled";
        case AttributionMethod::Lime: return "lime";
        case AttributionMethod::Random: return "random";
    }
    return "shap_exact";
}

AttributionMethod parse_attribution_method(const std::string& s) {
    if (s == "shap_exact") return AttributionMethod::ShapExact;
    if (s == "shap_sampled") return AttributionMethod::ShapSampled;
    if (s == "lime") return AttributionMethod::Lime;
    if (s == "random") return AttributionMethod::Random;
    throw ParseError("unknown attribution method: '" + s + "'");
}

double DetectorTokenScorer::score(const std::vector<std::string>& tokens) const {
    std::string text;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) text.push_back(' ');
        text += tokens[i];
    }
    return model_->predict_proba_text(text);
}

double coalition_value(const TokenScorer& scorer, const std::vector<std::string>& tokens,
                       const std::vector<size_t>& members, const CoalitionOptions& options) {
    for (const size_t p : members) {
        if (p >= tokens.size()) {
            throw PositionOutOfRangeError("coalition member " + std::to_string(p) +
                                          " exceeds token count " + std::to_string(tokens.size()));
        }
    }
    std::vector<size_t> sorted = members;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<std::string> kept;
    if (options.mask_mode == MaskMode::Delete) {
        kept.reserve(sorted.size());
        for (const size_t p : sorted) kept.push_back(tokens[p]);
    } else {
        kept.assign(tokens.size(), options.placeholder);
        for (const size_t p : sorted) kept[p] = tokens[p];
    }
    return scorer.score(kept);
}

namespace {

// Coalition value keyed by membership bitmask; usable whenever m <= 64.
class MaskEvaluator {
public:
    MaskEvaluator(const TokenScorer& scorer, const std::vector<std::string>& tokens,
                  const CoalitionOptions& options)
        : scorer_(scorer), tokens_(tokens), options_(options) {}

    double value(uint64_t mask) {
        const auto it = cache_.find(mask);
        if (it != cache_.end()) return it->second;
        std::vector<size_t> members;
        members.reserve(static_cast<size_t>(std::popcount(mask)));
        for (size_t j = 0; j < tokens_.size(); ++j) {
            if (mask & (uint64_t(1) << j)) members.push_back(j);
        }
        const double v = coalition_value(scorer_, tokens_, members, options_);
        cache_.emplace(mask, v);
        return v;
    }

private:
    const TokenScorer& scorer_;
    const std::vector<std::string>& tokens_;
    const CoalitionOptions& options_;
    std::unordered_map<uint64_t, double> cache_;
};

}  // namespace

AttributionVector exact_shapley(const TokenScorer& scorer, const std::string& doc_id,
                                const std::vector<std::string>& tokens,
                                const ShapleyOptions& options) {
    const size_t m = tokens.size();
    // 2^24 coalition values is the absolute ceiling regardless of options.
    if (m > options.max_exact_tokens || m > 24) {
        throw TooManyTokensError("exact attribution enumerates 2^" + std::to_string(m) +
                                 " coalitions; limit is 2^" +
                                 std::to_string(std::min<size_t>(options.max_exact_tokens, 24)));
    }

    AttributionVector attr;
    attr.doc_id = doc_id;
    attr.method = AttributionMethod::ShapExact;
    attr.scores.assign(m, 0.0);
    if (m == 0) return attr;

    const uint64_t full = (m == 64) ? ~uint64_t(0) : ((uint64_t(1) << m) - 1);
    attr.samples = full + 1;

    std::vector<double> values(static_cast<size_t>(full) + 1);
    MaskEvaluator eval(scorer, tokens, options.coalition);
    for (uint64_t mask = 0; mask <= full; ++mask) {
        values[static_cast<size_t>(mask)] = eval.value(mask);
    }

    // weight(s) = s! (m-s-1)! / m! for a coalition of size s not holding j.
    std::vector<double> weight(m);
    for (size_t s = 0; s < m; ++s) {
        double w = 1.0 / static_cast<double>(m);
        // s! (m-s-1)! / m! = 1 / (m * C(m-1, s))
        for (size_t i = 0; i < s; ++i) {
            w *= static_cast<double>(i + 1) / static_cast<double>(m - 1 - i);
        }
        weight[s] = w;
    }

    for (size_t j = 0; j < m; ++j) {
        const uint64_t bit = uint64_t(1) << j;
        double phi = 0.0;
        for (uint64_t mask = 0; mask <= full; ++mask) {
            if (mask & bit) continue;
            const size_t s = static_cast<size_t>(std::popcount(mask));
            phi += weight[s] * (values[static_cast<size_t>(mask | bit)] -
                                values[static_cast<size_t>(mask)]);
        }
        attr.scores[j] = phi;
    }
    return attr;
}

AttributionVector sampled_shapley(const TokenScorer& scorer, const std::string& doc_id,
                                  const std::vector<std::string>& tokens, size_t n_permutations,
                                  uint64_t seed, const CoalitionOptions& options) {
    if (n_permutations < 1) throw Error("sampled attribution needs at least one permutation");
    const size_t m = tokens.size();

    AttributionVector attr;
    attr.doc_id = doc_id;
    attr.method = AttributionMethod::ShapSampled;
    attr.scores.assign(m, 0.0);
    attr.samples = n_permutations;
    attr.seed = seed;
    if (m == 0) return attr;

    // Coalition values repeat across permutations only when a bitmask fits;
    // beyond 64 tokens each value is evaluated directly.
    const bool memoize = m <= 64;
    MaskEvaluator eval(scorer, tokens, options);
    const double empty_value =
        memoize ? eval.value(0) : coalition_value(scorer, tokens, {}, options);

    Rng rng(seed);
    std::vector<size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<size_t> members;
    members.reserve(m);

    for (size_t it = 0; it < n_permutations; ++it) {
        rng.shuffle(perm);
        double prev = empty_value;
        if (memoize) {
            uint64_t mask = 0;
            for (const size_t j : perm) {
                mask |= uint64_t(1) << j;
                const double v = eval.value(mask);
                attr.scores[j] += v - prev;
                prev = v;
            }
        } else {
            members.clear();
            for (const size_t j : perm) {
                members.push_back(j);
                const double v = coalition_value(scorer, tokens, members, options);
                attr.scores[j] += v - prev;
                prev = v;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(n_permutations);
    for (double& s : attr.scores) s *= inv;
    return attr;
}

AttributionVector lime_attribution(const TokenScorer& scorer, const std::string& doc_id,
                                   const std::vector<std::string>& tokens,
                                   const LimeOptions& options, uint64_t seed) {
    const size_t m = tokens.size();
    if (m < 1) throw Error("local surrogate needs at least one token");
    if (options.n_samples < m + 2) {
        throw Error("local surrogate needs at least m + 2 samples");
    }

    const double width =
        options.kernel_width > 0.0 ? options.kernel_width : 0.75 / std::sqrt(static_cast<double>(m));

    Rng rng(seed);
    const size_t n = options.n_samples;
    std::vector<std::vector<char>> masks(n, std::vector<char>(m, 1));
    for (size_t i = 1; i < n; ++i) {
        for (size_t j = 0; j < m; ++j) {
            masks[i][j] = rng.uniform() < options.keep_probability ? 1 : 0;
        }
    }
    bool any_different = false;
    for (size_t i = 1; i < n && !any_different; ++i) any_different = masks[i] != masks[0];
    if (!any_different) throw DegenerateDesignError("all perturbation masks are identical");

    Eigen::MatrixXd x(n, m + 1);
    Eigen::VectorXd y(n);
    Eigen::VectorXd w(n);
    std::vector<size_t> members;
    for (size_t i = 0; i < n; ++i) {
        members.clear();
        size_t dropped = 0;
        for (size_t j = 0; j < m; ++j) {
            if (masks[i][j]) {
                members.push_back(j);
            } else {
                ++dropped;
            }
        }
        y(static_cast<Eigen::Index>(i)) = coalition_value(scorer, tokens, members, options.coalition);
        const double d = static_cast<double>(dropped) / static_cast<double>(m);
        w(static_cast<Eigen::Index>(i)) = std::exp(-(d * d) / (width * width));
        x(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (size_t j = 0; j < m; ++j) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) =
                static_cast<double>(masks[i][j]);
        }
    }

    // Weighted ridge normal equations; the intercept column is unpenalized.
    const Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
    Eigen::MatrixXd a = xtw * x;
    for (size_t j = 1; j <= m; ++j) {
        a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += options.ridge_lambda;
    }
    const Eigen::VectorXd beta = a.ldlt().solve(xtw * y);

    AttributionVector attr;
    attr.doc_id = doc_id;
    attr.method = AttributionMethod::Lime;
    attr.samples = n;
    attr.seed = seed;
    attr.kernel_width = width;
    attr.scores.resize(m);
    for (size_t j = 0; j < m; ++j) {
        attr.scores[j] = beta(static_cast<Eigen::Index>(j + 1));
    }
    return attr;
}

AttributionVector random_attribution(const std::string& doc_id, size_t n_tokens, uint64_t seed) {
    AttributionVector attr;
    attr.doc_id = doc_id;
    attr.method = AttributionMethod::Random;
    attr.scores.assign(n_tokens, 0.0);
    attr.seed = seed;
    return attr;
}

namespace {

std::vector<size_t> rank_by_magnitude(const std::vector<double>& scores) {
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        const double ma = std::abs(scores[a]);
        const double mb = std::abs(scores[b]);
        if (ma != mb) return ma > mb;
        return a < b;
    });
    return order;
}

}  // namespace

TokenSelection select_top_tokens(const AttributionVector& attribution, size_t k) {
    if (k < 1) throw Error("selection budget must be at least 1");
    TokenSelection sel;
    sel.doc_id = attribution.doc_id;
    sel.method = attribution.method;
    sel.k = k;
    sel.used_absolute = true;
    const std::vector<size_t> order = rank_by_magnitude(attribution.scores);
    const size_t take = std::min(k, order.size());
    sel.positions.assign(order.begin(), order.begin() + static_cast<ptrdiff_t>(take));
    return sel;
}

TokenSelection select_by_threshold(const AttributionVector& attribution, double min_abs_score) {
    TokenSelection sel;
    sel.doc_id = attribution.doc_id;
    sel.method = attribution.method;
    sel.used_absolute = true;
    for (const size_t j : rank_by_magnitude(attribution.scores)) {
        if (std::abs(attribution.scores[j]) >= min_abs_score) sel.positions.push_back(j);
    }
    sel.k = sel.positions.size();
    return sel;
}

TokenSelection random_selection(const std::string& doc_id, size_t n_tokens, size_t k,
                                uint64_t seed) {
    if (k < 1) throw Error("selection budget must be at least 1");
    TokenSelection sel;
    sel.doc_id = doc_id;
    sel.method = AttributionMethod::Random;
    sel.k = k;
    sel.used_absolute = false;
    Rng rng(seed);
    sel.positions = rng.sample_without_replacement(n_tokens, k);
    return sel;
}

std::vector<double> sentence_averaged_scores(const std::vector<std::string>& tokens,
                                             const std::vector<double>& scores) {
    if (tokens.size() != scores.size()) throw Error("token/score length mismatch");
    std::vector<double> out(scores.size(), 0.0);

    size_t begin = 0;
    auto flush_sentence = [&](size_t end) {
        if (begin >= end) return;
        std::map<std::string, std::pair<double, size_t>> sums;
        for (size_t i = begin; i < end; ++i) {
            auto& [sum, count] = sums[tokens[i]];
            sum += scores[i];
            ++count;
        }
        for (size_t i = begin; i < end; ++i) {
            const auto& [sum, count] = sums[tokens[i]];
            out[i] = sum / static_cast<double>(count);
        }
        begin = end;
    };

    for (size_t i = 0; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (t == "." || t == "?" || t == "!") flush_sentence(i + 1);
    }
    flush_sentence(tokens.size());
    return out;
}

std::vector<Document> eligible_documents(const TextModel& model,
                                         const std::vector<Document>& docs) {
    std::vector<Document> eligible;
    for (const Document& doc : docs) {
        if (model.classify(doc.text) == doc.label) eligible.push_back(doc);
    }
    return eligible;
}

}  // namespace aigt
