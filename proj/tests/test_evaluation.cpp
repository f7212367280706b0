#include "pagc/error.hpp"
#include "pagc/evaluation.hpp"
#include "pagc/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace pagc;

namespace {

FeatureTable labeled_table(const std::vector<std::vector<double>>& rows,
                           const std::vector<int>& labels) {
    FeatureTable t;
    t.feature_names.resize(rows[0].size());
    for (std::size_t f = 0; f < rows[0].size(); ++f) t.feature_names[f] = "f" + std::to_string(f);
    t.values = rows;
    t.labels = labels;
    for (std::size_t i = 0; i < rows.size(); ++i) t.subject_ids.push_back("s" + std::to_string(i));
    return t;
}

FeatureTable separable_table(int n_per_class, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < n_per_class; ++i) {
        rows.push_back({rng.normal() * 0.4 - 2.0, rng.normal()});
        labels.push_back(0);
        rows.push_back({rng.normal() * 0.4 + 2.0, rng.normal()});
        labels.push_back(1);
    }
    return labeled_table(rows, labels);
}

} // namespace

TEST_CASE("stratified kfold with 10 labels and k=5") {
    const std::vector<int> labels{0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
    const FoldPlan plan = stratified_kfold(labels, 5, 3);
    std::set<std::size_t> seen;
    for (const auto& fold : plan.folds) {
        CHECK(fold.size() == 2);
        int pos = 0;
        for (std::size_t idx : fold) {
            pos += labels[idx];
            seen.insert(idx);
        }
        // ideal positive share is 4/5 per fold; deviation below 1
        CHECK(std::abs(pos - 0.8) < 1.0);
    }
    CHECK(seen.size() == labels.size());
}

TEST_CASE("kfold is deterministic and errors on small classes") {
    const std::vector<int> labels{0, 0, 0, 1, 1, 1, 0, 1, 0, 1};
    const FoldPlan a = stratified_kfold(labels, 3, 99);
    const FoldPlan b = stratified_kfold(labels, 3, 99);
    CHECK(a.folds == b.folds);

    const std::vector<int> single_class{0, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(stratified_kfold(single_class, 3, 1), InputError);
    CHECK_THROWS_AS(stratified_kfold(labels, 1, 1), InputError);
}

TEST_CASE("paper cohort shape: fold positive counts over 100 seeds") {
    std::vector<int> labels(52, 0);
    for (int i = 0; i < 32; ++i) labels[static_cast<std::size_t>(i)] = 1;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const FoldPlan plan = stratified_kfold(labels, 5, seed);
        std::set<std::size_t> seen;
        for (const auto& fold : plan.folds) {
            int pos = 0;
            for (std::size_t idx : fold) {
                pos += labels[idx];
                seen.insert(idx);
            }
            REQUIRE((pos == 6 || pos == 7));
        }
        REQUIRE(seen.size() == 52);
    }
}

TEST_CASE("holdout split: 50 rows, 30/20 classes") {
    std::vector<int> labels(50, 0);
    for (int i = 0; i < 30; ++i) labels[static_cast<std::size_t>(i)] = 1;
    const HoldoutSplit split = holdout_split(labels, 0.2, 17);
    CHECK(split.train.size() == 40);
    CHECK(split.test.size() == 10);
    int test_pos = 0;
    for (std::size_t idx : split.test) test_pos += labels[idx];
    CHECK(test_pos == 6);

    // determinism, disjointness, coverage
    const HoldoutSplit again = holdout_split(labels, 0.2, 17);
    CHECK(again.train == split.train);
    CHECK(again.test == split.test);
    std::set<std::size_t> all(split.train.begin(), split.train.end());
    for (std::size_t idx : split.test) CHECK(all.insert(idx).second);
    CHECK(all.size() == 50);
}

TEST_CASE("metrics hand values") {
    const std::vector<int> y{1, 0, 1, 0};
    SUBCASE("perfect") {
        const std::vector<int> pred{1, 0, 1, 0};
        const std::vector<double> scores{0.9, 0.1, 0.8, 0.2};
        const MetricSet m = compute_metrics(y, pred, scores);
        CHECK(m.accuracy == 1.0);
        CHECK(m.f1 == 1.0);
        REQUIRE(m.auroc.has_value());
        CHECK(*m.auroc == 1.0);
    }
    SUBCASE("all predicted negative gives F1 = 0") {
        const std::vector<int> pred{0, 0, 0, 0};
        const std::vector<double> scores{0.1, 0.1, 0.1, 0.1};
        const MetricSet m = compute_metrics(y, pred, scores);
        CHECK(m.accuracy == 0.5);
        CHECK(m.f1 == 0.0);
    }
    SUBCASE("AUROC 0.75 by hand") {
        const std::vector<double> scores{0.9, 0.8, 0.4, 0.1};
        const std::vector<int> pred{1, 1, 0, 0};
        const MetricSet m = compute_metrics(y, pred, scores);
        REQUIRE(m.auroc.has_value());
        CHECK(*m.auroc == doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("single-class truth leaves AUROC undefined") {
        const std::vector<int> ones{1, 1, 1};
        const std::vector<int> pred{1, 1, 0};
        const std::vector<double> scores{0.9, 0.8, 0.1};
        const MetricSet m = compute_metrics(ones, pred, scores);
        CHECK(!m.auroc.has_value());
    }
}

TEST_CASE("AUROC equals the pairwise Mann-Whitney oracle including ties") {
    Rng rng(314);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 8 + rng.bounded(20);
        std::vector<int> y(n);
        std::vector<double> s(n);
        int pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(rng.bounded(2));
            pos += y[i];
            s[i] = std::round(rng.uniform() * 10.0) / 10.0; // coarse grid forces ties
        }
        if (pos == 0 || pos == static_cast<int>(n)) continue;
        const auto auc = auroc_midrank(y, s);
        REQUIRE(auc.has_value());
        REQUIRE(*auc == doctest::Approx(oracles::auroc_pair_count(y, s)).epsilon(1e-12));

        std::vector<double> negated(s);
        for (double& v : negated) v = -v;
        const auto flipped = auroc_midrank(y, negated);
        REQUIRE(*auc + *flipped == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("accuracy and F1 are invariant under consistent permutation") {
    Rng rng(11);
    std::vector<int> y(30), pred(30);
    for (std::size_t i = 0; i < 30; ++i) {
        y[i] = static_cast<int>(rng.bounded(2));
        pred[i] = static_cast<int>(rng.bounded(2));
    }
    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    std::vector<int> yp(30), pp(30);
    for (std::size_t i = 0; i < 30; ++i) {
        yp[i] = y[perm[i]];
        pp[i] = pred[perm[i]];
    }
    CHECK(f1_score(y, pred) == f1_score(yp, pp));
}

TEST_CASE("cross_validate on separable data") {
    const FeatureTable table = separable_table(15, 2001);
    ModelSpec spec;
    spec.kind = ModelKind::random_forest;
    spec.rf.n_trees = 25;
    const CvResult cv = cross_validate(table, spec, 5, 7);
    CHECK(cv.folds.size() == 5);
    CHECK(cv.mean.f1 >= 0.9);
    REQUIRE(cv.mean.auroc.has_value());
    CHECK(*cv.mean.auroc >= 0.9);

    // identical rows with mixed labels stay near chance
    std::vector<std::vector<double>> flat(20, {1.0, 2.0});
    std::vector<int> labels(20);
    for (std::size_t i = 0; i < 20; ++i) labels[i] = i % 2;
    const CvResult chance = cross_validate(labeled_table(flat, labels), spec, 5, 7);
    CHECK(chance.mean.f1 <= 0.75);

    // determinism under a fixed seed
    const CvResult again = cross_validate(table, spec, 5, 7);
    CHECK(again.oof_labels == cv.oof_labels);
    CHECK(again.oof_scores == cv.oof_scores);
    for (std::size_t f = 0; f < 5; ++f) {
        CHECK(again.folds[f].accuracy == cv.folds[f].accuracy);
        CHECK(again.folds[f].f1 == cv.folds[f].f1);
    }
}

TEST_CASE("cross_validate is independent of the thread count") {
    const FeatureTable table = separable_table(10, 3001);
    ModelSpec spec;
    spec.kind = ModelKind::random_forest;
    spec.rf.n_trees = 10;
    const CvResult serial = cross_validate(table, spec, 5, 13, 1);
    const CvResult parallel = cross_validate(table, spec, 5, 13, 4);
    CHECK(serial.oof_labels == parallel.oof_labels);
    CHECK(serial.oof_scores == parallel.oof_scores);
}

TEST_CASE("grid search basics") {
    const FeatureTable table = separable_table(10, 4001);
    ModelSpec base;
    base.kind = ModelKind::random_forest;

    SUBCASE("singleton grid returns the single point") {
        const ParamGrid grid{{"rf.n_trees", {40}}};
        const GridSearchResult result = grid_search(table, base, grid, 5, 5);
        CHECK(result.best_params.at("rf.n_trees") == 40);
        CHECK(result.evaluated.size() == 1);
    }
    SUBCASE("empty grid is rejected") {
        CHECK_THROWS_AS(grid_search(table, base, {}, 5, 5), InputError);
    }
    SUBCASE("winner is the max over points and survives declaration-order permutation") {
        const ParamGrid grid{{"rf.n_trees", {5, 25}}, {"rf.max_depth", {-1, 1}}};
        const GridSearchResult a = grid_search(table, base, grid, 5, 5);
        for (const auto& gp : a.evaluated) CHECK(a.best_f1 >= gp.mean_f1);

        const ParamGrid permuted{{"rf.max_depth", {1, -1}}, {"rf.n_trees", {25, 5}}};
        const GridSearchResult b = grid_search(table, base, permuted, 5, 5);
        const bool distinct = [&] {
            std::set<double> f1s;
            for (const auto& gp : a.evaluated) f1s.insert(gp.mean_f1);
            return f1s.size() == a.evaluated.size();
        }();
        if (distinct) {
            CHECK(a.best_params == b.best_params);
            CHECK(a.best_f1 == b.best_f1);
        }
    }
}

TEST_CASE("and_fuse") {
    const std::vector<int> left{1, 1, 0, 0};
    const std::vector<int> right{1, 0, 1, 0};
    CHECK(and_fuse(left, right) == std::vector<int>{1, 0, 0, 0});

    const std::vector<int> ones(4, 1);
    CHECK(and_fuse(left, ones) == left);

    const std::vector<int> shorter{1, 0};
    CHECK_THROWS_AS(and_fuse(left, shorter), InputError);

    // commutative, associative, idempotent
    Rng rng(6);
    std::vector<int> a(12), b(12), c(12);
    for (std::size_t i = 0; i < 12; ++i) {
        a[i] = static_cast<int>(rng.bounded(2));
        b[i] = static_cast<int>(rng.bounded(2));
        c[i] = static_cast<int>(rng.bounded(2));
    }
    CHECK(and_fuse(a, b) == and_fuse(b, a));
    CHECK(and_fuse(and_fuse(a, b), c) == and_fuse(a, and_fuse(b, c)));
    CHECK(and_fuse(a, a) == a);
}

TEST_CASE("fused false positives never exceed either side") {
    Rng rng(21);
    std::vector<int> truth(40), left(40), right(40);
    for (std::size_t i = 0; i < 40; ++i) {
        truth[i] = static_cast<int>(rng.bounded(2));
        left[i] = static_cast<int>(rng.bounded(2));
        right[i] = static_cast<int>(rng.bounded(2));
    }
    const auto fused = and_fuse(left, right);
    auto count_fp = [&](const std::vector<int>& pred) {
        long long n = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (truth[i] == 0 && pred[i] == 1) ++n;
        return n;
    };
    CHECK(count_fp(fused) <= std::min(count_fp(left), count_fp(right)));
}

TEST_CASE("permutation importance ranks the planted signal first") {
    Rng rng(31);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
        const int label = i % 2;
        rows.push_back({label + 0.2 * rng.normal(), rng.normal(), 5.0});
        labels.push_back(label);
    }
    FeatureTable table = labeled_table(rows, labels);
    table.feature_names = {"planted", "noise", "flat"};

    ModelSpec spec;
    spec.kind = ModelKind::random_forest;
    spec.rf.n_trees = 30;
    const TrainedModel model = train_model(table, spec, 3);
    const auto importance = permutation_importance(model, table, 10, 17);

    CHECK(importance.at("flat") == 0.0);
    CHECK(importance.at("planted") > importance.at("noise"));
    CHECK(importance.at("planted") > 0.2);

    const auto again = permutation_importance(model, table, 10, 17);
    CHECK(again == importance);
}

TEST_CASE("cohort graph report") {
    SUBCASE("single subject per group collapses quartiles") {
        std::vector<GraphSummary> summaries(2);
        summaries[0] = {10, 5, 0.75};
        summaries[1] = {3, 2, 0.9};
        const std::vector<int> labels{0, 1};
        const CohortGraphReport report = cohort_graph_report(summaries, labels);
        const auto& control = report.groups.at("control").at("num_edges");
        CHECK(control.min == 10.0);
        CHECK(control.median == 10.0);
        CHECK(control.max == 10.0);
        CHECK(report.groups.at("patient").at("avg_edge_weight").median == 0.9);
        // 2 groups x 3 statistics
        int rows = 0;
        for (const auto& [_, stats] : report.groups) rows += static_cast<int>(stats.size());
        CHECK(rows == 6);
    }
    SUBCASE("empty group is an error") {
        std::vector<GraphSummary> summaries(2);
        const std::vector<int> labels{0, 0};
        CHECK_THROWS_AS(cohort_graph_report(summaries, labels), InputError);
    }
}

TEST_CASE("per-fold reduction pipeline runs inside cross_validate") {
    Rng rng(41);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
        const int label = i % 2;
        std::vector<double> row(8);
        for (auto& v : row) v = rng.normal();
        row[0] = label + 0.15 * rng.normal();
        row[1] = row[0] * 2.0 + 1e-5 * rng.normal(); // near duplicate of feature 0
        rows.push_back(row);
        labels.push_back(label);
    }
    const FeatureTable table = labeled_table(rows, labels);
    ModelSpec spec;
    spec.kind = ModelKind::gbdt;
    spec.gbdt.n_trees = 40;
    spec.gbdt.learning_rate = 0.1;
    spec.gbdt.min_data_in_leaf = 2;
    spec.reduce = true;
    spec.split_select = true;

    const CvResult cv = cross_validate(table, spec, 5, 23);
    CHECK(cv.mean.f1 >= 0.8);
    for (const auto& log : cv.fold_drop_logs) CHECK(!log.empty());
    for (const auto& selected : cv.fold_selected_features) CHECK(!selected.empty());
}
