#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace testsupport {

namespace {

// Clipped n-gram matches counted by scanning the hypothesis position by
// position and striking out reference n-grams as they are consumed.
void count_ngrams(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                  size_t n, double& matches, double& total) {
    matches = 0.0;
    total = 0.0;
    if (hyp.size() < n) return;
    std::vector<bool> used(ref.size() >= n ? ref.size() - n + 1 : 0, false);
    for (size_t i = 0; i + n <= hyp.size(); ++i) {
        total += 1.0;
        for (size_t j = 0; j < used.size(); ++j) {
            if (used[j]) continue;
            bool same = true;
            for (size_t t = 0; t < n; ++t) {
                if (hyp[i + t] != ref[j + t]) {
                    same = false;
                    break;
                }
            }
            if (same) {
                used[j] = true;
                matches += 1.0;
                break;
            }
        }
    }
}

}  // namespace

double oracle_bleu(const std::vector<std::string>& reference,
                   const std::vector<std::string>& hypothesis, size_t max_n) {
    if (hypothesis.empty()) return reference.empty() ? 1.0 : 0.0;
    double log_sum = 0.0;
    for (size_t n = 1; n <= max_n; ++n) {
        double matches = 0.0;
        double total = 0.0;
        count_ngrams(hypothesis, reference, n, matches, total);
        double p;
        if (n == 1) {
            if (matches == 0.0) return 0.0;
            p = matches / total;
        } else if (matches == 0.0) {
            p = (matches + 1.0) / (total + 1.0);
        } else {
            p = matches / total;
        }
        log_sum += std::log(p);
    }
    const double bp = std::exp(std::min(
        0.0, 1.0 - static_cast<double>(reference.size()) / static_cast<double>(hypothesis.size())));
    return std::min(1.0, bp * std::exp(log_sum / static_cast<double>(max_n)));
}

double oracle_rouge1(const std::vector<std::string>& reference,
                     const std::vector<std::string>& hypothesis) {
    if (reference.empty() && hypothesis.empty()) return 1.0;
    double overlap = 0.0;
    std::vector<bool> used(reference.size(), false);
    for (const std::string& h : hypothesis) {
        for (size_t j = 0; j < reference.size(); ++j) {
            if (!used[j] && reference[j] == h) {
                used[j] = true;
                overlap += 1.0;
                break;
            }
        }
    }
    if (overlap == 0.0) return 0.0;
    const double p = overlap / static_cast<double>(hypothesis.size());
    const double r = overlap / static_cast<double>(reference.size());
    return 2.0 * p * r / (p + r);
}

size_t oracle_lcs_exhaustive(const std::vector<std::string>& reference,
                             const std::vector<std::string>& hypothesis) {
    const size_t n = reference.size();
    if (n > 20) throw std::invalid_argument("exhaustive LCS limited to 20 tokens");
    size_t best = 0;
    for (uint64_t mask = 0; mask < (uint64_t(1) << n); ++mask) {
        std::vector<std::string> sub;
        for (size_t i = 0; i < n; ++i) {
            if (mask & (uint64_t(1) << i)) sub.push_back(reference[i]);
        }
        if (sub.size() <= best) continue;
        size_t pos = 0;
        bool contained = true;
        for (const std::string& s : sub) {
            while (pos < hypothesis.size() && hypothesis[pos] != s) ++pos;
            if (pos == hypothesis.size()) {
                contained = false;
                break;
            }
            ++pos;
        }
        if (contained) best = sub.size();
    }
    return best;
}

double oracle_rougeL(const std::vector<std::string>& reference,
                     const std::vector<std::string>& hypothesis) {
    if (reference.empty() && hypothesis.empty()) return 1.0;
    if (reference.empty() || hypothesis.empty()) return 0.0;
    const double lcs = static_cast<double>(oracle_lcs_exhaustive(reference, hypothesis));
    if (lcs == 0.0) return 0.0;
    const double p = lcs / static_cast<double>(hypothesis.size());
    const double r = lcs / static_cast<double>(reference.size());
    return 2.0 * p * r / (p + r);
}

std::vector<double> oracle_shapley(
    const std::function<double(const std::vector<size_t>&)>& value, size_t m) {
    if (m > 20) throw std::invalid_argument("oracle enumeration limited to 20 tokens");
    std::vector<double> factorial(m + 1, 1.0);
    for (size_t i = 1; i <= m; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);

    std::vector<double> phi(m, 0.0);
    for (size_t j = 0; j < m; ++j) {
        for (uint64_t mask = 0; mask < (uint64_t(1) << m); ++mask) {
            if (mask & (uint64_t(1) << j)) continue;
            std::vector<size_t> without;
            for (size_t i = 0; i < m; ++i) {
                if (mask & (uint64_t(1) << i)) without.push_back(i);
            }
            std::vector<size_t> with = without;
            with.insert(std::lower_bound(with.begin(), with.end(), j), j);
            const size_t s = without.size();
            const double weight = factorial[s] * factorial[m - s - 1] / factorial[m];
            phi[j] += weight * (value(with) - value(without));
        }
    }
    return phi;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw std::invalid_argument("spearman needs two equal-length vectors");
    }
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    const size_t n = ra.size();
    double mean_a = 0.0, mean_b = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mean_a += ra[i];
        mean_b += rb[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double da = ra[i] - mean_a;
        const double db = rb[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0) return 0.0;
    return cov / std::sqrt(var_a * var_b);
}

AdditiveScorer::AdditiveScorer(std::vector<double> weights, double bias)
    : weights_(std::move(weights)), bias_(bias) {
    tokens_.reserve(weights_.size());
    for (size_t j = 0; j < weights_.size(); ++j) tokens_.push_back("w" + std::to_string(j));
}

double AdditiveScorer::score(const std::vector<std::string>& tokens) const {
    double z = bias_;
    for (const std::string& t : tokens) {
        if (t.size() < 2 || t[0] != 'w') continue;  // placeholder masks contribute nothing
        z += weights_.at(std::stoul(t.substr(1)));
    }
    return 1.0 / (1.0 + std::exp(-z));
}

double AdditiveScorer::value_of(const std::vector<size_t>& members) const {
    double z = bias_;
    for (const size_t j : members) z += weights_.at(j);
    return 1.0 / (1.0 + std::exp(-z));
}

}  // namespace testsupport
