#include "pagc/evaluation.hpp"

#include "pagc/csv.hpp"
#include "pagc/error.hpp"
#include "pagc/parallel.hpp"
#include "pagc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pagc {

FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) throw InputError("kfold: k must be >= 2");
    if (labels.size() < static_cast<std::size_t>(k))
        throw InputError("kfold: fewer rows than folds");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw InputError("kfold: labels must be 0/1");
        by_class[labels[i]].push_back(i);
    }
    // a class may have fewer members than folds (some folds then carry none
    // of it); only an absent class makes stratification meaningless
    for (int c = 0; c < 2; ++c)
        if (by_class[c].empty())
            throw InputError("kfold: class " + std::to_string(c) + " has no members");

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.stratified = true;
    plan.folds.resize(static_cast<std::size_t>(k));

    Rng rng(derive_seed(seed, {0xF01D}));
    std::size_t fold_ptr = 0; // shared across classes to balance fold sizes
    for (int c = 0; c < 2; ++c) {
        rng.shuffle(by_class[c]);
        for (std::size_t idx : by_class[c]) {
            plan.folds[fold_ptr % static_cast<std::size_t>(k)].push_back(idx);
            ++fold_ptr;
        }
    }
    for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
    return plan;
}

HoldoutSplit holdout_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw InputError("holdout: test_fraction must be in (0,1)");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw InputError("holdout: labels must be 0/1");
        by_class[labels[i]].push_back(i);
    }
    HoldoutSplit split;
    Rng rng(derive_seed(seed, {0x8020}));
    for (int c = 0; c < 2; ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        if (members.size() < 2)
            throw InputError("holdout: class " + std::to_string(c) + " too small to split");
        rng.shuffle(members);
        std::size_t t = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(members.size())));
        t = std::clamp<std::size_t>(t, 1, members.size() - 1);
        for (std::size_t i = 0; i < members.size(); ++i)
            (i < t ? split.test : split.train).push_back(members[i]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

double f1_score(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) throw InputError("f1: length mismatch");
    long long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_pred[i] == 1 && y_true[i] == 1) ++tp;
        else if (y_pred[i] == 1 && y_true[i] == 0) ++fp;
        else if (y_pred[i] == 0 && y_true[i] == 1) ++fn;
    }
    const long long denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

std::optional<double> auroc_midrank(std::span<const int> y_true, std::span<const double> scores) {
    if (y_true.size() != scores.size()) throw InputError("auroc: length mismatch");
    long long n_pos = 0, n_neg = 0;
    for (int y : y_true) (y == 1 ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks over tie groups
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t)
            if (y_true[order[t]] == 1) rank_sum_pos += midrank;
        i = j + 1;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MetricSet compute_metrics(std::span<const int> y_true, std::span<const int> y_pred,
                          std::span<const double> scores) {
    if (y_true.size() != y_pred.size() || y_true.size() != scores.size())
        throw InputError("metrics: length mismatch");
    if (y_true.empty()) throw InputError("metrics: empty input");
    MetricSet m;
    long long hits = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i)
        if (y_true[i] == y_pred[i]) ++hits;
    m.accuracy = static_cast<double>(hits) / static_cast<double>(y_true.size());
    m.f1 = f1_score(y_true, y_pred);
    m.auroc = auroc_midrank(y_true, scores);
    return m;
}

TrainedModel train_model(const FeatureTable& table, const ModelSpec& spec, std::uint64_t seed) {
    FeatureTable working = table;
    if (spec.reduce) working = reduce_features(working, spec.reduce_params).table;
    if (spec.split_select) {
        const TrainedModel probe = train_gbdt(working, spec.gbdt, seed);
        const auto selected = select_by_split_importance(probe, spec.split_select_threshold);
        if (selected.empty()) throw AnalysisError("no features selected by split importance");
        working = working.select_columns_by_name(selected);
    }
    switch (spec.kind) {
        case ModelKind::random_forest: return train_random_forest(working, spec.rf, seed);
        case ModelKind::svm_rbf: return train_svm_rbf(working, spec.svm, seed);
        case ModelKind::gbdt: return train_gbdt(working, spec.gbdt, seed);
    }
    throw InputError("unknown model kind");
}

CvResult cross_validate(const FeatureTable& table, const ModelSpec& spec, int k,
                        std::uint64_t seed, int threads) {
    table.validate();
    const FoldPlan plan = stratified_kfold(table.labels, k, seed);

    CvResult result;
    result.folds.resize(static_cast<std::size_t>(k));
    result.oof_labels.assign(table.n_rows(), 0);
    result.oof_scores.assign(table.n_rows(), 0.0);
    result.fold_drop_logs.resize(static_cast<std::size_t>(k));
    result.fold_selected_features.resize(static_cast<std::size_t>(k));

    parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t f) {
        const auto& test_idx = plan.folds[f];
        std::vector<std::size_t> train_idx;
        for (std::size_t other = 0; other < plan.folds.size(); ++other)
            if (other != f)
                train_idx.insert(train_idx.end(), plan.folds[other].begin(),
                                 plan.folds[other].end());
        std::sort(train_idx.begin(), train_idx.end());

        FeatureTable train = table.select_rows(train_idx);
        FeatureTable test = table.select_rows(test_idx);
        const std::uint64_t fold_seed = derive_seed(seed, {static_cast<std::uint64_t>(f)});

        // fit the reduction pipeline inside the training fold only
        if (spec.reduce) {
            ReduceResult reduced = reduce_features(train, spec.reduce_params);
            result.fold_drop_logs[f] = reduced.dropped;
            test = test.select_columns_by_name(reduced.table.feature_names);
            train = std::move(reduced.table);
        }
        ModelSpec fold_spec = spec;
        fold_spec.reduce = false;
        if (spec.split_select) {
            const TrainedModel probe = train_gbdt(train, spec.gbdt, fold_seed);
            const auto selected = select_by_split_importance(probe, spec.split_select_threshold);
            if (selected.empty()) throw AnalysisError("no features selected by split importance");
            result.fold_selected_features[f] = selected;
            train = train.select_columns_by_name(selected);
            test = test.select_columns_by_name(selected);
            fold_spec.split_select = false;
        }

        const TrainedModel model = train_model(train, fold_spec, fold_seed);
        const Predictions pred = predict(model, test);
        result.folds[f] = compute_metrics(test.labels, pred.labels, pred.scores);
        for (std::size_t i = 0; i < test_idx.size(); ++i) {
            result.oof_labels[test_idx[i]] = pred.labels[i];
            result.oof_scores[test_idx[i]] = pred.scores[i];
        }
    });

    double acc = 0.0, f1 = 0.0, auc = 0.0;
    int auc_defined = 0;
    for (const auto& m : result.folds) {
        acc += m.accuracy;
        f1 += m.f1;
        if (m.auroc) {
            auc += *m.auroc;
            ++auc_defined;
        }
    }
    result.mean.accuracy = acc / static_cast<double>(k);
    result.mean.f1 = f1 / static_cast<double>(k);
    if (auc_defined > 0) result.mean.auroc = auc / static_cast<double>(auc_defined);
    return result;
}

ModelSpec apply_grid_point(const ModelSpec& base, const ParamGrid& grid,
                           const std::vector<std::size_t>& choice) {
    ModelSpec spec = base;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto& [name, values] = grid[g];
        const double v = values[choice[g]];
        if (name == "rf.n_trees") spec.rf.n_trees = static_cast<int>(v);
        else if (name == "rf.max_depth") spec.rf.max_depth = static_cast<int>(v);
        else if (name == "rf.mtry") spec.rf.mtry = static_cast<int>(v);
        else if (name == "rf.bootstrap") spec.rf.bootstrap = v != 0.0;
        else if (name == "svm.c") spec.svm.c = v;
        else if (name == "svm.gamma") spec.svm.gamma = v;
        else if (name == "svm.tol") spec.svm.tol = v;
        else if (name == "svm.max_iter") spec.svm.max_iter = static_cast<int>(v);
        else if (name == "gbdt.learning_rate") spec.gbdt.learning_rate = v;
        else if (name == "gbdt.n_trees") spec.gbdt.n_trees = static_cast<int>(v);
        else if (name == "gbdt.max_leaves") spec.gbdt.max_leaves = static_cast<int>(v);
        else if (name == "gbdt.min_data_in_leaf") spec.gbdt.min_data_in_leaf = static_cast<int>(v);
        else throw InputError("unknown grid parameter: '" + name + "'");
    }
    return spec;
}

GridSearchResult grid_search(const FeatureTable& table, const ModelSpec& base,
                             const ParamGrid& grid, int k, std::uint64_t seed, int threads) {
    if (grid.empty()) throw InputError("grid_search: empty grid");
    for (const auto& [name, values] : grid)
        if (values.empty()) throw InputError("grid_search: empty value list for '" + name + "'");

    std::size_t n_points = 1;
    for (const auto& [_, values] : grid) n_points *= values.size();

    GridSearchResult result;
    result.best_f1 = -1.0;
    std::vector<std::size_t> choice(grid.size(), 0);
    for (std::size_t point = 0; point < n_points; ++point) {
        const ModelSpec spec = apply_grid_point(base, grid, choice);
        // every point is evaluated on the same fold plan and per-fold seeds,
        // so a point's mean F1 does not depend on where it sits in the grid
        const CvResult cv = cross_validate(table, spec, k, seed, threads);
        GridPointResult gp;
        for (std::size_t g = 0; g < grid.size(); ++g)
            gp.params[grid[g].first] = grid[g].second[choice[g]];
        gp.mean_f1 = cv.mean.f1;
        result.evaluated.push_back(gp);
        if (gp.mean_f1 > result.best_f1) {
            result.best_f1 = gp.mean_f1;
            result.best_spec = spec;
            result.best_params = gp.params;
        }
        // odometer increment, last axis fastest
        for (std::size_t g = grid.size(); g-- > 0;) {
            if (++choice[g] < grid[g].second.size()) break;
            choice[g] = 0;
        }
    }
    return result;
}

std::vector<int> and_fuse(std::span<const int> left, std::span<const int> right) {
    if (left.size() != right.size()) throw InputError("and_fuse: length mismatch");
    std::vector<int> fused(left.size());
    for (std::size_t i = 0; i < left.size(); ++i)
        fused[i] = (left[i] == 1 && right[i] == 1) ? 1 : 0;
    return fused;
}

std::map<std::string, double> permutation_importance(const TrainedModel& model,
                                                     const FeatureTable& table, int n_repeats,
                                                     std::uint64_t seed) {
    if (n_repeats < 1) throw InputError("permutation_importance: n_repeats must be >= 1");
    table.validate();
    const Predictions base = predict(model, table);
    const double baseline = f1_score(table.labels, base.labels);

    std::map<std::string, double> importance;
    for (std::size_t f = 0; f < table.n_features(); ++f) {
        double drop_sum = 0.0;
        for (int rep = 0; rep < n_repeats; ++rep) {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(f),
                                       static_cast<std::uint64_t>(rep)}));
            std::vector<std::size_t> perm(table.n_rows());
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            rng.shuffle(perm);
            FeatureTable permuted = table;
            for (std::size_t r = 0; r < table.n_rows(); ++r)
                permuted.values[r][f] = table.values[perm[r]][f];
            const Predictions pred = predict(model, permuted);
            drop_sum += baseline - f1_score(table.labels, pred.labels);
        }
        importance[table.feature_names[f]] = drop_sum / static_cast<double>(n_repeats);
    }
    return importance;
}

namespace {

SummaryStats five_number(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    auto pct = [&](double p) {
        const std::size_t n = values.size();
        if (n == 1) return values[0];
        const double rank = p / 100.0 * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(rank);
        if (lo + 1 >= n) return values[n - 1];
        return values[lo] + (rank - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
    };
    return {values.front(), pct(25.0), pct(50.0), pct(75.0), values.back()};
}

} // namespace

CohortGraphReport cohort_graph_report(std::span<const GraphSummary> summaries,
                                      std::span<const int> labels) {
    if (summaries.size() != labels.size()) throw InputError("cohort report: length mismatch");
    std::vector<double> edges[2], nodes[2], weights[2];
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        const int g = labels[i] == 1 ? 1 : 0;
        edges[g].push_back(static_cast<double>(summaries[i].num_edges));
        nodes[g].push_back(static_cast<double>(summaries[i].num_active_nodes));
        weights[g].push_back(summaries[i].avg_edge_weight);
    }
    if (edges[0].empty() || edges[1].empty())
        throw InputError("cohort report: both groups need at least one subject");

    CohortGraphReport report;
    const char* group_names[2] = {"control", "patient"};
    for (int g = 0; g < 2; ++g) {
        auto& group = report.groups[group_names[g]];
        group["num_edges"] = five_number(edges[g]);
        group["num_active_nodes"] = five_number(nodes[g]);
        group["avg_edge_weight"] = five_number(weights[g]);
    }
    return report;
}

void write_cohort_graph_report_csv(const CohortGraphReport& report, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"group", "statistic", "min", "q1", "median", "q3", "max"});
    for (const auto& [group, stats] : report.groups)
        for (const auto& [stat, s] : stats)
            rows.push_back({group, stat, csv::format_double(s.min), csv::format_double(s.q1),
                            csv::format_double(s.median), csv::format_double(s.q3),
                            csv::format_double(s.max)});
    csv::write_file(path, rows);
}

} // namespace pagc
