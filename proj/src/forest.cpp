#include "pagc/error.hpp"
#include "pagc/learners.hpp"
#include "pagc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pagc {

namespace {

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

double gini(long long pos, long long total) {
    if (total == 0) return 0.0;
    const double p = static_cast<double>(pos) / static_cast<double>(total);
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

// Best Gini split over the given feature set. Thresholds are midpoints of
// consecutive sorted unique values; ties break toward the lower feature
// index, then the lower threshold (strict > and ascending scan order).
SplitChoice best_split(const FeatureTable& table, const std::vector<std::size_t>& rows,
                       const std::vector<int>& features) {
    SplitChoice best;
    const long long n = static_cast<long long>(rows.size());
    long long n_pos = 0;
    for (std::size_t r : rows) n_pos += table.labels[r];
    const double parent = gini(n_pos, n);

    std::vector<std::pair<double, int>> ordered(rows.size());
    for (int f : features) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            ordered[i] = {table.values[rows[i]][static_cast<std::size_t>(f)],
                          table.labels[rows[i]]};
        std::sort(ordered.begin(), ordered.end());

        long long left_n = 0, left_pos = 0;
        for (std::size_t i = 0; i + 1 < ordered.size(); ++i) {
            ++left_n;
            left_pos += ordered[i].second;
            if (ordered[i].first == ordered[i + 1].first) continue;
            const double threshold = ordered[i].first + 0.5 * (ordered[i + 1].first - ordered[i].first);
            const long long right_n = n - left_n;
            const long long right_pos = n_pos - left_pos;
            const double gain = parent -
                                (static_cast<double>(left_n) / n) * gini(left_pos, left_n) -
                                (static_cast<double>(right_n) / n) * gini(right_pos, right_n);
            if (gain > best.gain) best = {gain, f, threshold};
        }
    }
    return best;
}

void grow_node(Tree& tree, int node_id, const FeatureTable& table,
               std::vector<std::size_t> rows, int depth, const RfParams& params, int mtry,
               Rng& rng) {
    long long n_pos = 0;
    for (std::size_t r : rows) n_pos += table.labels[r];
    const double p1 = static_cast<double>(n_pos) / static_cast<double>(rows.size());

    auto make_leaf = [&] {
        tree.nodes[static_cast<std::size_t>(node_id)].feature = -1;
        tree.nodes[static_cast<std::size_t>(node_id)].value = p1;
    };
    if (n_pos == 0 || n_pos == static_cast<long long>(rows.size()) ||
        (params.max_depth >= 0 && depth >= params.max_depth)) {
        make_leaf();
        return;
    }

    const int p = static_cast<int>(table.n_features());
    std::vector<int> all(static_cast<std::size_t>(p));
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> sampled = all;
    if (mtry < p) {
        for (int i = 0; i < mtry; ++i)
            std::swap(sampled[static_cast<std::size_t>(i)],
                      sampled[static_cast<std::size_t>(i) +
                              static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(p - i)))]);
        sampled.resize(static_cast<std::size_t>(mtry));
        std::sort(sampled.begin(), sampled.end());
    }

    SplitChoice split = best_split(table, rows, sampled);
    // when the sampled subset cannot separate, widen to every feature so a
    // fully grown tree always reaches purity on distinct points
    if (split.feature < 0 && mtry < p) split = best_split(table, rows, all);
    if (split.feature < 0) {
        make_leaf();
        return;
    }

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
        if (table.values[r][static_cast<std::size_t>(split.feature)] <= split.threshold)
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(node_id)].feature = split.feature;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = split.threshold;
    tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
    tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;

    grow_node(tree, left_id, table, std::move(left_rows), depth + 1, params, mtry, rng);
    grow_node(tree, right_id, table, std::move(right_rows), depth + 1, params, mtry, rng);
}

} // namespace

TrainedModel train_random_forest(const FeatureTable& table, const RfParams& params,
                                 std::uint64_t seed) {
    table.validate();
    if (table.n_rows() < 2) throw InputError("random forest: need at least 2 rows");
    if (params.n_trees <= 0) throw InputError("random forest: n_trees must be positive");
    if (params.mtry < 0 || params.mtry > static_cast<int>(table.n_features()))
        throw InputError("random forest: bad mtry");

    const int p = static_cast<int>(table.n_features());
    const int mtry = params.mtry > 0
                         ? params.mtry
                         : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));

    RfModel rf;
    rf.params = params;
    rf.trees.resize(static_cast<std::size_t>(params.n_trees));
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
        std::vector<std::size_t> rows;
        if (params.bootstrap) {
            rows.resize(table.n_rows());
            for (auto& r : rows) r = static_cast<std::size_t>(rng.bounded(table.n_rows()));
        } else {
            rows.resize(table.n_rows());
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        Tree& tree = rf.trees[static_cast<std::size_t>(t)];
        tree.nodes.emplace_back();
        grow_node(tree, 0, table, std::move(rows), 0, params, mtry, rng);
    }

    TrainedModel model;
    model.kind = ModelKind::random_forest;
    model.seed = seed;
    model.feature_names = table.feature_names;
    model.model = std::move(rf);
    return model;
}

} // namespace pagc
