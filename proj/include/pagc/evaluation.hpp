#pragma once

#include "pagc/graph.hpp"
#include "pagc/learners.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pagc {

// ---------------------------------------------------------------------------
// splits
// ---------------------------------------------------------------------------

struct FoldPlan {
    int k = 0;
    std::uint64_t seed = 0;
    bool stratified = true;
    std::vector<std::vector<std::size_t>> folds; // partition of all row indices
};

// Seeded shuffle within each class, then round-robin assignment with a fold
// pointer shared across classes (keeps fold sizes balanced). Every fold's
// positive count is within 1 of the ideal proportional share.
FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

struct HoldoutSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Stratified holdout; per-class test count = round(fraction * class size),
// at least 1.
HoldoutSplit holdout_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

struct MetricSet {
    double accuracy = 0.0;
    double f1 = 0.0;                // 0 when the denominator vanishes
    std::optional<double> auroc;   // absent when y_true is single-class
};

// Accuracy, binary F1 (positive class 1), AUROC as the normalized
// Mann-Whitney U statistic with midrank tie handling.
MetricSet compute_metrics(std::span<const int> y_true, std::span<const int> y_pred,
                          std::span<const double> scores);

double f1_score(std::span<const int> y_true, std::span<const int> y_pred);
std::optional<double> auroc_midrank(std::span<const int> y_true, std::span<const double> scores);

// ---------------------------------------------------------------------------
// cross-validation
// ---------------------------------------------------------------------------

/// What to train inside each fold. Reduction and split-importance selection
/// are fit on the training fold only, never on held-out rows.
struct ModelSpec {
    ModelKind kind = ModelKind::random_forest;
    RfParams rf;
    SvmParams svm;
    GbdtParams gbdt;
    bool reduce = false;
    ReduceParams reduce_params;
    bool split_select = false; // gbdt split-importance >= threshold feature pass
    int split_select_threshold = 1;
};

TrainedModel train_model(const FeatureTable& table, const ModelSpec& spec, std::uint64_t seed);

struct CvResult {
    std::vector<MetricSet> folds;
    MetricSet mean;                     // auroc averaged over folds where defined
    std::vector<int> oof_labels;        // out-of-fold prediction per row
    std::vector<double> oof_scores;
    std::vector<std::vector<DropRecord>> fold_drop_logs;       // when spec.reduce
    std::vector<std::vector<std::string>> fold_selected_features; // when spec.split_select
};

CvResult cross_validate(const FeatureTable& table, const ModelSpec& spec, int k,
                        std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// grid search
// ---------------------------------------------------------------------------

/// Named value lists; the cartesian product is walked in declaration order.
using ParamGrid = std::vector<std::pair<std::string, std::vector<double>>>;

ModelSpec apply_grid_point(const ModelSpec& base, const ParamGrid& grid,
                           const std::vector<std::size_t>& choice);

struct GridPointResult {
    std::map<std::string, double> params;
    double mean_f1 = 0.0;
};

struct GridSearchResult {
    ModelSpec best_spec;
    std::map<std::string, double> best_params;
    double best_f1 = 0.0;
    std::vector<GridPointResult> evaluated;
};

// Maximizes mean CV F1; ties keep the earlier point in grid declaration
// order. Throws on an empty grid.
GridSearchResult grid_search(const FeatureTable& table, const ModelSpec& base,
                             const ParamGrid& grid, int k, std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// fusion and explainability
// ---------------------------------------------------------------------------

// Elementwise logical AND of two prediction vectors.
std::vector<int> and_fuse(std::span<const int> left, std::span<const int> right);

// Mean F1 drop per feature across seeded column permutations.
std::map<std::string, double> permutation_importance(const TrainedModel& model,
                                                     const FeatureTable& table, int n_repeats,
                                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// cohort graph report
// ---------------------------------------------------------------------------

struct SummaryStats {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Per-group five-number summaries of the graph statistics; one entry per
/// (group, statistic) pair.
struct CohortGraphReport {
    // group ("control"/"patient") -> statistic name -> stats
    std::map<std::string, std::map<std::string, SummaryStats>> groups;
};

CohortGraphReport cohort_graph_report(std::span<const GraphSummary> summaries,
                                      std::span<const int> labels);

// Tidy CSV: group,statistic,min,q1,median,q3,max.
void write_cohort_graph_report_csv(const CohortGraphReport& report, const std::string& path);

} // namespace pagc
