#include <algorithm>
#include <cmath>
#include <vector>

#include "aigt/errors.hpp"
#include "detail.hpp"

namespace aigt::detail {

namespace {

struct ColumnEntry {
    double value;
    uint32_t row;
};

// One sorted (value, row) list per feature; rows absent from a column hold
// an implicit zero there.
std::vector<std::vector<ColumnEntry>> build_columns(const std::vector<FeatureVector>& x,
                                                    size_t n_features) {
    std::vector<std::vector<ColumnEntry>> columns(n_features);
    for (uint32_t row = 0; row < x.size(); ++row) {
        const FeatureVector& fv = x[row];
        for (size_t k = 0; k < fv.indices.size(); ++k) {
            if (fv.values[k] == 0.0) continue;
            columns[fv.indices[k]].push_back({fv.values[k], row});
        }
    }
    for (auto& col : columns) {
        std::stable_sort(col.begin(), col.end(),
                         [](const ColumnEntry& a, const ColumnEntry& b) { return a.value < b.value; });
    }
    return columns;
}

struct SplitChoice {
    double gain = 0.0;
    int32_t feature = -1;
    double threshold = 0.0;
};

double leaf_objective(double g, double h, double reg_lambda) {
    return g * g / (h + reg_lambda);
}

struct TreeBuilder {
    const std::vector<std::vector<ColumnEntry>>& columns;
    const std::vector<double>& grad;
    const std::vector<double>& hess;
    const GbdtConfig& config;
    std::vector<int32_t> node_of_row;  // -1 when the row left the tree's frontier
    GbdtTree tree;

    int32_t make_leaf(double g, double h) {
        GbdtNode node;
        node.value = -g / (h + config.reg_lambda);
        tree.nodes.push_back(node);
        return static_cast<int32_t>(tree.nodes.size() - 1);
    }

    // rows: members of this node. Returns the node index in tree.nodes.
    int32_t build(std::vector<uint32_t>& rows, int depth, double g_sum, double h_sum) {
        SplitChoice best;
        if (depth < config.max_depth && rows.size() >= 2) {
            best = find_split(rows, g_sum, h_sum);
        }
        if (best.feature < 0) return make_leaf(g_sum, h_sum);

        const int32_t self = static_cast<int32_t>(tree.nodes.size());
        tree.nodes.push_back(GbdtNode{best.feature, best.threshold, -1, -1, 0.0});

        std::vector<uint32_t> left_rows, right_rows;
        double gl = 0.0, hl = 0.0;
        // Membership test: explicit entries below the threshold go left,
        // along with every member row the column does not mention (zeros)
        // when 0 < threshold.
        std::vector<char> goes_right(rows.size(), 0.0 < best.threshold ? 0 : 1);
        std::vector<int32_t> slot(node_of_row.size(), -1);
        for (size_t i = 0; i < rows.size(); ++i) slot[rows[i]] = static_cast<int32_t>(i);
        for (const ColumnEntry& e : columns[static_cast<size_t>(best.feature)]) {
            const int32_t s = slot[e.row];
            if (s < 0) continue;
            goes_right[static_cast<size_t>(s)] = e.value < best.threshold ? 0 : 1;
        }
        for (size_t i = 0; i < rows.size(); ++i) {
            if (goes_right[i]) {
                right_rows.push_back(rows[i]);
            } else {
                left_rows.push_back(rows[i]);
                gl += grad[rows[i]];
                hl += hess[rows[i]];
            }
        }
        if (left_rows.empty() || right_rows.empty()) {
            tree.nodes.resize(static_cast<size_t>(self));
            return make_leaf(g_sum, h_sum);
        }
        rows.clear();
        rows.shrink_to_fit();

        const int32_t left = build(left_rows, depth + 1, gl, hl);
        const int32_t right = build(right_rows, depth + 1, g_sum - gl, h_sum - hl);
        tree.nodes[static_cast<size_t>(self)].left = left;
        tree.nodes[static_cast<size_t>(self)].right = right;
        return self;
    }

    SplitChoice find_split(const std::vector<uint32_t>& rows, double g_sum, double h_sum) {
        SplitChoice best;
        const double parent = leaf_objective(g_sum, h_sum, config.reg_lambda);

        std::vector<char> member(node_of_row.size(), 0);
        for (const uint32_t r : rows) member[r] = 1;

        for (size_t j = 0; j < columns.size(); ++j) {
            const auto& col = columns[j];
            if (col.empty()) continue;

            // Explicit entries of this node, already value-sorted.
            double g_explicit = 0.0, h_explicit = 0.0;
            size_t n_explicit = 0;
            for (const ColumnEntry& e : col) {
                if (!member[e.row]) continue;
                g_explicit += grad[e.row];
                h_explicit += hess[e.row];
                ++n_explicit;
            }
            if (n_explicit == 0) continue;
            const double g_zero = g_sum - g_explicit;
            const double h_zero = h_sum - h_explicit;
            const bool has_zero = n_explicit < rows.size();

            double g_prefix = 0.0, h_prefix = 0.0;
            double prev_value = 0.0;
            bool have_prev = false;
            for (const ColumnEntry& e : col) {
                if (!member[e.row]) continue;
                if (have_prev && e.value > prev_value) {
                    const double threshold = 0.5 * (prev_value + e.value);
                    consider(best, threshold, g_prefix, h_prefix, g_zero, h_zero, g_sum, h_sum,
                             parent, static_cast<int32_t>(j));
                }
                if (!have_prev && has_zero && e.value > 0.0) {
                    // Separate the implicit zeros from every explicit value.
                    consider(best, 0.5 * e.value, 0.0, 0.0, g_zero, h_zero, g_sum, h_sum, parent,
                             static_cast<int32_t>(j));
                }
                g_prefix += grad[e.row];
                h_prefix += hess[e.row];
                prev_value = e.value;
                have_prev = true;
            }
        }
        return best;
    }

    void consider(SplitChoice& best, double threshold, double g_explicit_below,
                  double h_explicit_below, double g_zero, double h_zero, double g_sum,
                  double h_sum, double parent, int32_t feature) {
        double gl = g_explicit_below;
        double hl = h_explicit_below;
        if (0.0 < threshold) {
            gl += g_zero;
            hl += h_zero;
        }
        const double gr = g_sum - gl;
        const double hr = h_sum - hl;
        if (hl < config.min_child_weight || hr < config.min_child_weight) return;
        const double gain = leaf_objective(gl, hl, config.reg_lambda) +
                            leaf_objective(gr, hr, config.reg_lambda) - parent;
        if (gain > best.gain + 1e-12) {
            best.gain = gain;
            best.feature = feature;
            best.threshold = threshold;
        }
    }
};

}  // namespace

double gbdt_raw_score(const GbdtPayload& payload, const FeatureVector& features) {
    double score = payload.base_score;
    for (const GbdtTree& tree : payload.trees) {
        int32_t at = 0;
        while (true) {
            const GbdtNode& node = tree.nodes[static_cast<size_t>(at)];
            if (node.feature < 0) {
                score += payload.learning_rate * node.value;
                break;
            }
            double v = 0.0;
            const auto it = std::lower_bound(features.indices.begin(), features.indices.end(),
                                             static_cast<uint32_t>(node.feature));
            if (it != features.indices.end() && *it == static_cast<uint32_t>(node.feature)) {
                v = features.values[static_cast<size_t>(it - features.indices.begin())];
            }
            at = v < node.threshold ? node.left : node.right;
        }
    }
    return score;
}

GbdtPayload train_gbdt(const std::vector<FeatureVector>& x, const std::vector<Label>& y,
                       const GbdtConfig& config, uint64_t /*seed*/) {
    size_t n_features = 0;
    for (const FeatureVector& fv : x) {
        if (!fv.indices.empty()) n_features = std::max<size_t>(n_features, fv.indices.back() + 1);
    }

    const size_t n = x.size();
    size_t n_ai = 0;
    for (const Label l : y) n_ai += l == Label::Ai ? 1 : 0;

    GbdtPayload payload;
    payload.learning_rate = config.learning_rate;
    payload.n_features = n_features;
    payload.base_score = std::log(static_cast<double>(n_ai) / static_cast<double>(n - n_ai));

    const auto columns = build_columns(x, n_features);

    std::vector<double> raw(n, payload.base_score);
    std::vector<double> grad(n), hess(n);
    for (int round = 0; round < config.n_rounds; ++round) {
        double loss = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double p = sigmoid(raw[i]);
            const double target = y[i] == Label::Ai ? 1.0 : 0.0;
            grad[i] = p - target;
            hess[i] = std::max(p * (1.0 - p), 1e-16);
            loss -= target > 0.5 ? std::log(std::max(p, 1e-300))
                                 : std::log(std::max(1.0 - p, 1e-300));
        }
        if (!std::isfinite(loss)) throw NonFiniteLossError("boosting loss diverged");

        TreeBuilder builder{columns, grad, hess, config, std::vector<int32_t>(n, 0), {}};
        std::vector<uint32_t> rows(n);
        for (uint32_t i = 0; i < n; ++i) rows[i] = i;
        double g_sum = 0.0, h_sum = 0.0;
        for (size_t i = 0; i < n; ++i) {
            g_sum += grad[i];
            h_sum += hess[i];
        }
        builder.build(rows, 0, g_sum, h_sum);

        GbdtTree tree = std::move(builder.tree);
        for (size_t i = 0; i < n; ++i) {
            int32_t at = 0;
            while (true) {
                const GbdtNode& node = tree.nodes[static_cast<size_t>(at)];
                if (node.feature < 0) {
                    raw[i] += config.learning_rate * node.value;
                    break;
                }
                double v = 0.0;
                const FeatureVector& fv = x[i];
                const auto it = std::lower_bound(fv.indices.begin(), fv.indices.end(),
                                                 static_cast<uint32_t>(node.feature));
                if (it != fv.indices.end() && *it == static_cast<uint32_t>(node.feature)) {
                    v = fv.values[static_cast<size_t>(it - fv.indices.begin())];
                }
                at = v < node.threshold ? node.left : node.right;
            }
        }
        payload.trees.push_back(std::move(tree));
    }
    return payload;
}

}  // namespace aigt::detail
