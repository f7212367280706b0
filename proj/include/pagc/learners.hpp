#pragma once

#include "pagc/feature_table.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pagc {

// ---------------------------------------------------------------------------
// feature reduction
// ---------------------------------------------------------------------------

// Sample Pearson correlation; 0 when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

struct DropRecord {
    std::string feature;
    std::string rule;  // "target" or "pairwise"
    double statistic;  // the correlation that triggered the drop
};

struct ReduceParams {
    double target_min = 0.01; // drop |corr(feature, label)| below this
    double pair_max = 0.95;   // drop |corr(feature, kept feature)| above this
};

struct ReduceResult {
    FeatureTable table; // surviving columns in keep order
    std::vector<DropRecord> dropped;
};

// Two-stage reduction: first the target-correlation floor, then a greedy
// pairwise scan in descending |target correlation| order (ties: earlier name
// first) that drops any feature too correlated with one already kept. The
// keep order is canonical, so the result is independent of input column
// order. Throws AnalysisError when nothing survives.
ReduceResult reduce_features(const FeatureTable& table, const ReduceParams& params = {});

void write_drop_log_csv(const std::vector<DropRecord>& dropped, const std::string& path);

// ---------------------------------------------------------------------------
// models
// ---------------------------------------------------------------------------

enum class ModelKind { random_forest, svm_rbf, gbdt };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

struct RfParams {
    int n_trees = 100;
    int max_depth = -1; // -1 = unbounded
    int mtry = 0;       // 0 = floor(sqrt(p)), min 1
    bool bootstrap = true;
};

struct SvmParams {
    double c = 1.0;
    double gamma = 0.0; // 0 = auto: 1 / (p * mean feature variance)
    double tol = 1e-3;
    int max_iter = 1000; // full passes over the training set
};

struct GbdtParams {
    double learning_rate = 0.01;
    int n_trees = 1000;
    int max_leaves = 31;
    int min_data_in_leaf = 12; // splits must leave this many rows per side
    double min_child_hessian = 1e-3;
    double lambda = 1e-6; // L2 on leaf values
};

/// Binary decision tree stored as a flat node array. Leaves keep the
/// prediction in `value` (class-1 fraction for classification trees,
/// additive score for boosted regression trees).
struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(std::span<const double> row) const;
};

struct RfModel {
    RfParams params;
    std::vector<Tree> trees;
};

struct SvmModel {
    SvmParams params;
    double gamma_used = 0.0;
    std::vector<std::vector<double>> support_x;
    std::vector<double> alpha_y; // alpha_i * y_i per support vector
    double bias = 0.0;
    bool converged = true;
};

struct GbdtModel {
    GbdtParams params;
    double f0 = 0.0;
    std::vector<Tree> trees;
    std::vector<double> train_loss; // mean logistic loss after each tree
};

struct TrainedModel {
    ModelKind kind = ModelKind::random_forest;
    std::uint64_t seed = 0;
    std::vector<std::string> feature_names; // binding checked at predict time
    std::variant<RfModel, SvmModel, GbdtModel> model;
};

TrainedModel train_random_forest(const FeatureTable& table, const RfParams& params,
                                 std::uint64_t seed);
TrainedModel train_svm_rbf(const FeatureTable& table, const SvmParams& params, std::uint64_t seed);
TrainedModel train_gbdt(const FeatureTable& table, const GbdtParams& params, std::uint64_t seed);

struct Predictions {
    std::vector<int> labels;
    std::vector<double> scores; // ranking scores for AUROC
};

// Rejects tables whose feature names or order differ from the binding.
Predictions predict(const TrainedModel& model, const FeatureTable& table);

// Number of tree splits using each feature (gbdt models only).
std::map<std::string, int> split_importance(const TrainedModel& model);
std::vector<std::string> select_by_split_importance(const TrainedModel& model, int threshold = 1);

// Versioned JSON with kind, params, seed, feature binding and learned state.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

} // namespace pagc
