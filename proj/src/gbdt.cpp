#include "pagc/error.hpp"
#include "pagc/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pagc {

namespace {

struct LeafSplit {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct LeafState {
    int node_id = -1;
    std::vector<std::size_t> rows;
    double g_sum = 0.0;
    double h_sum = 0.0;
    LeafSplit best;
};

double leaf_objective(double g, double h, double lambda) { return g * g / (h + lambda); }

// Best gain over all features for one leaf. Same midpoint threshold rule and
// (feature index, threshold) tie-break as the forest split search.
LeafSplit find_best_split(const FeatureTable& table, const LeafState& leaf,
                          const std::vector<double>& grad, const std::vector<double>& hess,
                          const GbdtParams& params) {
    LeafSplit best;
    const double parent = leaf_objective(leaf.g_sum, leaf.h_sum, params.lambda);
    std::vector<std::size_t> order(leaf.rows.size());

    for (std::size_t f = 0; f < table.n_features(); ++f) {
        order.assign(leaf.rows.begin(), leaf.rows.end());
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return table.values[a][f] < table.values[b][f];
        });
        double gl = 0.0, hl = 0.0;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            gl += grad[order[i]];
            hl += hess[order[i]];
            const double v0 = table.values[order[i]][f];
            const double v1 = table.values[order[i + 1]][f];
            if (v0 == v1) continue;
            const std::size_t left_n = i + 1;
            const std::size_t right_n = order.size() - left_n;
            if (left_n < static_cast<std::size_t>(params.min_data_in_leaf) ||
                right_n < static_cast<std::size_t>(params.min_data_in_leaf))
                continue;
            const double gr = leaf.g_sum - gl;
            const double hr = leaf.h_sum - hl;
            if (hl < params.min_child_hessian || hr < params.min_child_hessian) continue;
            const double gain = 0.5 * (leaf_objective(gl, hl, params.lambda) +
                                       leaf_objective(gr, hr, params.lambda) - parent);
            if (gain > best.gain)
                best = {gain, static_cast<int>(f), v0 + 0.5 * (v1 - v0)};
        }
    }
    return best;
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

} // namespace

// Leaf-wise boosted trees on the logistic loss: each boosting round grows one
// regression tree by repeatedly splitting the leaf with the largest gain
// until max_leaves is reached or no split helps, then applies a Newton step
// per leaf scaled by the learning rate.
TrainedModel train_gbdt(const FeatureTable& table, const GbdtParams& params, std::uint64_t seed) {
    table.validate();
    const std::size_t n = table.n_rows();
    if (n < 2) throw InputError("gbdt: need at least 2 rows");
    long long n_pos = 0;
    for (int l : table.labels) n_pos += l;
    if (n_pos == 0 || n_pos == static_cast<long long>(n))
        throw InputError("gbdt: both classes required");
    if (params.n_trees < 0 || params.max_leaves < 2 || !(params.learning_rate >= 0.0) ||
        params.min_data_in_leaf < 1)
        throw InputError("gbdt: bad params");

    GbdtModel gbdt;
    gbdt.params = params;
    const double prior = static_cast<double>(n_pos) / static_cast<double>(n);
    gbdt.f0 = std::log(prior / (1.0 - prior));

    std::vector<double> f(n, gbdt.f0);
    std::vector<double> grad(n), hess(n);

    for (int t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-f[i]));
            grad[i] = p - static_cast<double>(table.labels[i]);
            hess[i] = std::max(p * (1.0 - p), 1e-16);
        }

        Tree tree;
        tree.nodes.emplace_back();
        std::vector<LeafState> leaves;
        {
            LeafState root;
            root.node_id = 0;
            root.rows.resize(n);
            std::iota(root.rows.begin(), root.rows.end(), std::size_t{0});
            root.g_sum = std::accumulate(grad.begin(), grad.end(), 0.0);
            root.h_sum = std::accumulate(hess.begin(), hess.end(), 0.0);
            root.best = find_best_split(table, root, grad, hess, params);
            leaves.push_back(std::move(root));
        }

        while (static_cast<int>(leaves.size()) < params.max_leaves) {
            int pick = -1;
            for (std::size_t l = 0; l < leaves.size(); ++l) {
                if (leaves[l].best.feature < 0 || leaves[l].best.gain <= 0.0) continue;
                if (pick < 0 || leaves[l].best.gain > leaves[static_cast<std::size_t>(pick)].best.gain)
                    pick = static_cast<int>(l);
            }
            if (pick < 0) break;

            LeafState parent = std::move(leaves[static_cast<std::size_t>(pick)]);
            leaves.erase(leaves.begin() + pick);

            LeafState left, right;
            const std::size_t feat = static_cast<std::size_t>(parent.best.feature);
            for (std::size_t r : parent.rows) {
                LeafState& side = table.values[r][feat] <= parent.best.threshold ? left : right;
                side.rows.push_back(r);
                side.g_sum += grad[r];
                side.h_sum += hess[r];
            }
            left.node_id = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            right.node_id = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            TreeNode& pn = tree.nodes[static_cast<std::size_t>(parent.node_id)];
            pn.feature = parent.best.feature;
            pn.threshold = parent.best.threshold;
            pn.left = left.node_id;
            pn.right = right.node_id;

            left.best = find_best_split(table, left, grad, hess, params);
            right.best = find_best_split(table, right, grad, hess, params);
            leaves.push_back(std::move(left));
            leaves.push_back(std::move(right));
        }

        for (const auto& leaf : leaves) {
            const double w = -leaf.g_sum / (leaf.h_sum + params.lambda);
            const double scaled = params.learning_rate * w;
            tree.nodes[static_cast<std::size_t>(leaf.node_id)].value = scaled;
            for (std::size_t r : leaf.rows) f[r] += scaled;
        }

        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            loss += table.labels[i] == 1 ? softplus(-f[i]) : softplus(f[i]);
        gbdt.train_loss.push_back(loss / static_cast<double>(n));
        gbdt.trees.push_back(std::move(tree));
    }

    TrainedModel model;
    model.kind = ModelKind::gbdt;
    model.seed = seed;
    model.feature_names = table.feature_names;
    model.model = std::move(gbdt);
    return model;
}

} // namespace pagc
