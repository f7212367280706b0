#include "pagc/learners.hpp"

#include "pagc/csv.hpp"
#include "pagc/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pagc {

using nlohmann::json;

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InputError("pearson: length mismatch");
    if (x.size() < 2) throw InputError("pearson: need at least 2 samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0; // constant input convention
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

ReduceResult reduce_features(const FeatureTable& table, const ReduceParams& params) {
    table.validate();
    const std::size_t p = table.n_features();
    std::vector<double> label_real(table.labels.begin(), table.labels.end());

    std::vector<double> target_corr(p);
    std::vector<std::vector<double>> cols(p);
    for (std::size_t f = 0; f < p; ++f) {
        cols[f] = table.column(f);
        target_corr[f] = pearson(cols[f], label_real);
    }

    ReduceResult result;
    std::vector<std::size_t> candidates;
    for (std::size_t f = 0; f < p; ++f) {
        if (std::abs(target_corr[f]) < params.target_min)
            result.dropped.push_back({table.feature_names[f], "target", target_corr[f]});
        else
            candidates.push_back(f);
    }

    // canonical scan order: descending |target corr|, name breaks ties
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        const double ca = std::abs(target_corr[a]), cb = std::abs(target_corr[b]);
        if (ca != cb) return ca > cb;
        return table.feature_names[a] < table.feature_names[b];
    });

    std::vector<std::size_t> kept;
    for (std::size_t f : candidates) {
        bool drop = false;
        for (std::size_t k : kept) {
            const double r = pearson(cols[f], cols[k]);
            if (std::abs(r) > params.pair_max) {
                result.dropped.push_back({table.feature_names[f], "pairwise", r});
                drop = true;
                break;
            }
        }
        if (!drop) kept.push_back(f);
    }
    if (kept.empty()) throw AnalysisError("no features survive reduction");
    result.table = table.select_columns(kept);
    return result;
}

void write_drop_log_csv(const std::vector<DropRecord>& dropped, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"feature", "rule", "statistic"});
    for (const auto& d : dropped)
        rows.push_back({d.feature, d.rule, csv::format_double(d.statistic)});
    csv::write_file(path, rows);
}

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::random_forest: return "random_forest";
        case ModelKind::svm_rbf: return "svm_rbf";
        case ModelKind::gbdt: return "gbdt";
    }
    throw InputError("unknown model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "random_forest" || name == "rf") return ModelKind::random_forest;
    if (name == "svm_rbf" || name == "svm") return ModelKind::svm_rbf;
    if (name == "gbdt" || name == "lightgbm") return ModelKind::gbdt;
    throw InputError("unknown model kind: '" + name + "'");
}

double Tree::predict(std::span<const double> row) const {
    int i = 0;
    while (true) {
        const TreeNode& node = nodes[static_cast<std::size_t>(i)];
        if (node.feature < 0) return node.value;
        i = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
}

namespace {

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_binding(const TrainedModel& model, const FeatureTable& table) {
    if (table.feature_names != model.feature_names)
        throw InputError("schema mismatch: table features differ from model binding");
}

} // namespace

Predictions predict(const TrainedModel& model, const FeatureTable& table) {
    table.validate();
    check_binding(model, table);
    Predictions out;
    out.labels.resize(table.n_rows());
    out.scores.resize(table.n_rows());
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const auto& row = table.values[r];
        double score = 0.0;
        if (const auto* rf = std::get_if<RfModel>(&model.model)) {
            int votes = 0;
            for (const auto& tree : rf->trees)
                if (tree.predict(row) >= 0.5) ++votes;
            score = rf->trees.empty() ? 0.0
                                      : static_cast<double>(votes) /
                                            static_cast<double>(rf->trees.size());
            out.labels[r] = score >= 0.5 ? 1 : 0;
        } else if (const auto* svm = std::get_if<SvmModel>(&model.model)) {
            double f = svm->bias;
            for (std::size_t s = 0; s < svm->support_x.size(); ++s)
                f += svm->alpha_y[s] * rbf_kernel(svm->support_x[s], row, svm->gamma_used);
            score = f;
            out.labels[r] = f >= 0.0 ? 1 : 0;
        } else {
            const auto& gbdt = std::get<GbdtModel>(model.model);
            double f = gbdt.f0;
            for (const auto& tree : gbdt.trees) f += tree.predict(row);
            score = sigmoid(f);
            out.labels[r] = score >= 0.5 ? 1 : 0;
        }
        out.scores[r] = score;
    }
    return out;
}

std::map<std::string, int> split_importance(const TrainedModel& model) {
    const auto* gbdt = std::get_if<GbdtModel>(&model.model);
    if (!gbdt) throw InputError("split_importance requires a gbdt model");
    std::map<std::string, int> counts;
    for (const auto& name : model.feature_names) counts[name] = 0;
    for (const auto& tree : gbdt->trees)
        for (const auto& node : tree.nodes)
            if (node.feature >= 0)
                ++counts[model.feature_names[static_cast<std::size_t>(node.feature)]];
    return counts;
}

std::vector<std::string> select_by_split_importance(const TrainedModel& model, int threshold) {
    const auto counts = split_importance(model);
    std::vector<std::string> selected;
    for (const auto& name : model.feature_names)
        if (counts.at(name) >= threshold) selected.push_back(name);
    return selected;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

json tree_to_json(const Tree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    return nodes;
}

Tree tree_from_json(const json& j) {
    Tree tree;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.value = n.at(4).get<double>();
        tree.nodes.push_back(node);
    }
    return tree;
}

} // namespace

std::string model_to_json(const TrainedModel& model) {
    json j;
    j["schema_version"] = 1;
    j["kind"] = model_kind_name(model.kind);
    j["seed"] = model.seed;
    j["feature_names"] = model.feature_names;
    if (const auto* rf = std::get_if<RfModel>(&model.model)) {
        j["params"] = {{"n_trees", rf->params.n_trees},
                       {"max_depth", rf->params.max_depth},
                       {"mtry", rf->params.mtry},
                       {"bootstrap", rf->params.bootstrap}};
        json trees = json::array();
        for (const auto& t : rf->trees) trees.push_back(tree_to_json(t));
        j["state"] = {{"trees", trees}};
    } else if (const auto* svm = std::get_if<SvmModel>(&model.model)) {
        j["params"] = {{"c", svm->params.c},
                       {"gamma", svm->params.gamma},
                       {"tol", svm->params.tol},
                       {"max_iter", svm->params.max_iter}};
        j["state"] = {{"gamma_used", svm->gamma_used},
                      {"support_x", svm->support_x},
                      {"alpha_y", svm->alpha_y},
                      {"bias", svm->bias},
                      {"converged", svm->converged}};
    } else {
        const auto& gbdt = std::get<GbdtModel>(model.model);
        j["params"] = {{"learning_rate", gbdt.params.learning_rate},
                       {"n_trees", gbdt.params.n_trees},
                       {"max_leaves", gbdt.params.max_leaves},
                       {"min_data_in_leaf", gbdt.params.min_data_in_leaf},
                       {"min_child_hessian", gbdt.params.min_child_hessian},
                       {"lambda", gbdt.params.lambda}};
        json trees = json::array();
        for (const auto& t : gbdt.trees) trees.push_back(tree_to_json(t));
        j["state"] = {{"f0", gbdt.f0}, {"trees", trees}};
    }
    return j.dump(2) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("bad model json: ") + e.what());
    }
    if (j.value("schema_version", 0) != 1) throw InputError("unsupported model schema version");
    TrainedModel model;
    model.kind = model_kind_from_name(j.at("kind").get<std::string>());
    model.seed = j.at("seed").get<std::uint64_t>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const json& params = j.at("params");
    const json& state = j.at("state");
    if (model.kind == ModelKind::random_forest) {
        RfModel rf;
        rf.params.n_trees = params.at("n_trees").get<int>();
        rf.params.max_depth = params.at("max_depth").get<int>();
        rf.params.mtry = params.at("mtry").get<int>();
        rf.params.bootstrap = params.at("bootstrap").get<bool>();
        for (const auto& t : state.at("trees")) rf.trees.push_back(tree_from_json(t));
        model.model = std::move(rf);
    } else if (model.kind == ModelKind::svm_rbf) {
        SvmModel svm;
        svm.params.c = params.at("c").get<double>();
        svm.params.gamma = params.at("gamma").get<double>();
        svm.params.tol = params.at("tol").get<double>();
        svm.params.max_iter = params.at("max_iter").get<int>();
        svm.gamma_used = state.at("gamma_used").get<double>();
        svm.support_x = state.at("support_x").get<std::vector<std::vector<double>>>();
        svm.alpha_y = state.at("alpha_y").get<std::vector<double>>();
        svm.bias = state.at("bias").get<double>();
        svm.converged = state.at("converged").get<bool>();
        model.model = std::move(svm);
    } else {
        GbdtModel gbdt;
        gbdt.params.learning_rate = params.at("learning_rate").get<double>();
        gbdt.params.n_trees = params.at("n_trees").get<int>();
        gbdt.params.max_leaves = params.at("max_leaves").get<int>();
        gbdt.params.min_data_in_leaf = params.at("min_data_in_leaf").get<int>();
        gbdt.params.min_child_hessian = params.at("min_child_hessian").get<double>();
        gbdt.params.lambda = params.at("lambda").get<double>();
        gbdt.f0 = state.at("f0").get<double>();
        for (const auto& t : state.at("trees")) gbdt.trees.push_back(tree_from_json(t));
        model.model = std::move(gbdt);
    }
    return model;
}

void save_model(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << model_to_json(model);
    if (!out) throw InputError("write failed: " + path);
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("missing file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

} // namespace pagc
