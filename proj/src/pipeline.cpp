#include "pagc/pipeline.hpp"

#include "pagc/csv.hpp"
#include "pagc/error.hpp"
#include "pagc/parallel.hpp"
#include "pagc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pagc {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw InputError("config: bad boolean for '" + key + "': '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

std::array<int, 3> parse_dims(const std::string& v, const std::string& key) {
    std::array<int, 3> out{};
    std::stringstream ss(v);
    std::string tok;
    int i = 0;
    while (std::getline(ss, tok, 'x')) {
        if (i >= 3) throw InputError("config: '" + key + "' needs AxBxC");
        out[i++] = static_cast<int>(csv::parse_int(tok));
    }
    if (i != 3) throw InputError("config: '" + key + "' needs AxBxC");
    return out;
}

} // namespace

ModelSpec RunConfig::model_spec() const {
    ModelSpec spec;
    spec.kind = model;
    spec.rf = rf;
    spec.svm = svm;
    spec.gbdt = gbdt;
    if (pipeline == "radiomics") {
        spec.reduce = reduce;
        spec.reduce_params = reduce_params;
        spec.split_select = split_select;
    }
    return spec;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::stringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // strip leading whitespace
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        line = line.substr(first);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);

        if (key == "pipeline") {
            if (value != "pag" && value != "radiomics")
                throw InputError("config: pipeline must be pag or radiomics");
            cfg.pipeline = value;
        } else if (key == "regions") {
            cfg.regions.clear();
            for (const auto& name : split_list(value)) cfg.regions.push_back(region_from_name(name));
            if (cfg.regions.empty()) throw InputError("config: regions list is empty");
        } else if (key == "mi_bins") {
            cfg.mi_bins = static_cast<int>(csv::parse_int(value));
        } else if (key == "edge_threshold") {
            cfg.edge_threshold = csv::parse_double(value);
        } else if (key == "k_eigen") {
            cfg.k_eigen = static_cast<int>(csv::parse_int(value));
        } else if (key == "dump_graphs") {
            cfg.dump_graphs = parse_bool(value, key);
        } else if (key == "discretize_bins") {
            cfg.radiomics.discretize_bins = static_cast<int>(csv::parse_int(value));
        } else if (key == "filters") {
            cfg.radiomics.filters.clear();
            for (const auto& name : split_list(value))
                cfg.radiomics.filters.push_back(filter_kind_from_name(name));
        } else if (key == "log_sigmas") {
            cfg.radiomics.log_sigmas.clear();
            for (const auto& s : split_list(value))
                cfg.radiomics.log_sigmas.push_back(csv::parse_double(s));
        } else if (key == "reduce") {
            cfg.reduce = parse_bool(value, key);
        } else if (key == "reduce.target_min") {
            cfg.reduce_params.target_min = csv::parse_double(value);
        } else if (key == "reduce.pair_max") {
            cfg.reduce_params.pair_max = csv::parse_double(value);
        } else if (key == "split_select") {
            cfg.split_select = parse_bool(value, key);
        } else if (key == "holdout_fraction") {
            cfg.holdout_fraction = csv::parse_double(value);
        } else if (key == "model") {
            cfg.model = model_kind_from_name(value);
        } else if (key == "rf.n_trees") {
            cfg.rf.n_trees = static_cast<int>(csv::parse_int(value));
        } else if (key == "rf.max_depth") {
            cfg.rf.max_depth = value == "none" ? -1 : static_cast<int>(csv::parse_int(value));
        } else if (key == "rf.mtry") {
            cfg.rf.mtry = value == "auto" ? 0 : static_cast<int>(csv::parse_int(value));
        } else if (key == "rf.bootstrap") {
            cfg.rf.bootstrap = parse_bool(value, key);
        } else if (key == "svm.c") {
            cfg.svm.c = csv::parse_double(value);
        } else if (key == "svm.gamma") {
            cfg.svm.gamma = value == "auto" ? 0.0 : csv::parse_double(value);
        } else if (key == "svm.tol") {
            cfg.svm.tol = csv::parse_double(value);
        } else if (key == "svm.max_iter") {
            cfg.svm.max_iter = static_cast<int>(csv::parse_int(value));
        } else if (key == "gbdt.learning_rate") {
            cfg.gbdt.learning_rate = csv::parse_double(value);
        } else if (key == "gbdt.n_trees") {
            cfg.gbdt.n_trees = static_cast<int>(csv::parse_int(value));
        } else if (key == "gbdt.max_leaves") {
            cfg.gbdt.max_leaves = static_cast<int>(csv::parse_int(value));
        } else if (key == "gbdt.min_data_in_leaf") {
            cfg.gbdt.min_data_in_leaf = static_cast<int>(csv::parse_int(value));
        } else if (key == "grid") {
            if (value == "default") cfg.grid = true;
            else cfg.grid = parse_bool(value, key);
        } else if (key == "cv_k") {
            cfg.cv_k = static_cast<int>(csv::parse_int(value));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(csv::parse_int(value));
        } else if (key == "threads") {
            cfg.threads = static_cast<int>(csv::parse_int(value));
        } else if (key == "phantom.n_per_group") {
            cfg.phantom.n_per_group = static_cast<int>(csv::parse_int(value));
        } else if (key == "phantom.roi_dims") {
            cfg.phantom.roi_dims = parse_dims(value, key);
        } else if (key == "phantom.snr") {
            cfg.phantom.snr = csv::parse_double(value);
        } else if (key == "phantom.seed") {
            cfg.phantom.seed = static_cast<std::uint64_t>(csv::parse_int(value));
        } else if (key == "resample.spacing") {
            const auto parts = split_list(value);
            if (parts.size() != 3) throw InputError("config: resample.spacing needs sx,sy,sz");
            cfg.resample_spacing = {csv::parse_double(parts[0]), csv::parse_double(parts[1]),
                                    csv::parse_double(parts[2])};
        } else if (key == "resample.method") {
            cfg.resample_method = resample_method_from_name(value);
        } else {
            throw InputError("config: unknown key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("missing file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

ParamGrid default_grid(ModelKind kind) {
    switch (kind) {
        case ModelKind::random_forest:
            return {{"rf.n_trees", {100, 300}}, {"rf.max_depth", {-1, 8}}};
        case ModelKind::svm_rbf:
            return {{"svm.c", {0.1, 1, 10}}, {"svm.gamma", {0.01, 0.1, 1}}};
        case ModelKind::gbdt:
            return {{"gbdt.learning_rate", {0.01}},
                    {"gbdt.n_trees", {1000}},
                    {"gbdt.max_leaves", {31}}};
    }
    throw InputError("unknown model kind");
}

// ---------------------------------------------------------------------------
// cohort loading
// ---------------------------------------------------------------------------

std::vector<RegionCohort> load_cohort(const std::string& manifest_path, const RunConfig& config) {
    const auto entries = read_manifest(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    std::map<std::string, Volume3D> volume_cache;
    auto get_volume = [&](const std::string& rel) -> const Volume3D& {
        auto it = volume_cache.find(rel);
        if (it != volume_cache.end()) return it->second;
        Volume3D vol = load_volume((base / rel).string());
        if (config.resample_spacing)
            vol = resample(vol, *config.resample_spacing, config.resample_method);
        return volume_cache.emplace(rel, std::move(vol)).first->second;
    };

    std::vector<RegionCohort> cohorts;
    for (Region region : config.regions) {
        std::vector<const ManifestEntry*> rows;
        for (const auto& e : entries)
            if (e.region == region) rows.push_back(&e);
        if (rows.empty())
            throw InputError(std::string("manifest has no rows for region ") + region_name(region));
        std::sort(rows.begin(), rows.end(),
                  [](const ManifestEntry* a, const ManifestEntry* b) {
                      return a->subject_id < b->subject_id;
                  });
        for (std::size_t i = 0; i + 1 < rows.size(); ++i)
            if (rows[i]->subject_id == rows[i + 1]->subject_id)
                throw InputError("duplicate manifest row for subject '" + rows[i]->subject_id +
                                 "', region " + region_name(region));

        RegionCohort cohort;
        cohort.region = region;
        for (const auto* e : rows) {
            RoiSpec spec{e->region, e->roi_origin, e->roi_size};
            const Volume3D& vol = get_volume(e->volume_path);
            cohort.patches.push_back(extract_roi(vol, spec, e->subject_id, e->label));
            cohort.subject_ids.push_back(e->subject_id);
            cohort.labels.push_back(e->label);
        }
        for (std::size_t i = 1; i < cohort.patches.size(); ++i)
            if (cohort.patches[i].dims != cohort.patches[0].dims)
                throw InputError(std::string("inconsistent ROI dims for region ") +
                                 region_name(region));
        cohorts.push_back(std::move(cohort));
    }

    // subjects and labels must agree across regions
    for (std::size_t r = 1; r < cohorts.size(); ++r) {
        if (cohorts[r].subject_ids != cohorts[0].subject_ids)
            throw InputError("regions cover different subject sets");
        if (cohorts[r].labels != cohorts[0].labels)
            throw InputError("subject labels differ between regions");
    }
    return cohorts;
}

// ---------------------------------------------------------------------------
// report helpers
// ---------------------------------------------------------------------------

namespace {

std::string iso_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json metric_to_json(const MetricSet& m) {
    json j;
    j["accuracy"] = m.accuracy;
    j["f1"] = m.f1;
    if (m.auroc) j["auroc"] = *m.auroc;
    else j["auroc"] = nullptr;
    return j;
}

json cv_to_json(const CvResult& cv) {
    json folds = json::array();
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
        json jf = metric_to_json(cv.folds[f]);
        jf["fold"] = f;
        folds.push_back(jf);
    }
    return {{"folds", folds}, {"mean", metric_to_json(cv.mean)}};
}

json stats_to_json(const SummaryStats& s) {
    return {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

json params_to_json(const ModelSpec& spec) {
    switch (spec.kind) {
        case ModelKind::random_forest:
            return {{"n_trees", spec.rf.n_trees},
                    {"max_depth", spec.rf.max_depth},
                    {"mtry", spec.rf.mtry},
                    {"bootstrap", spec.rf.bootstrap}};
        case ModelKind::svm_rbf:
            return {{"c", spec.svm.c},
                    {"gamma", spec.svm.gamma},
                    {"tol", spec.svm.tol},
                    {"max_iter", spec.svm.max_iter}};
        case ModelKind::gbdt:
            return {{"learning_rate", spec.gbdt.learning_rate},
                    {"n_trees", spec.gbdt.n_trees},
                    {"max_leaves", spec.gbdt.max_leaves},
                    {"min_data_in_leaf", spec.gbdt.min_data_in_leaf}};
    }
    throw InputError("unknown model kind");
}

json config_echo(const RunConfig& config) {
    json regions = json::array();
    for (Region r : config.regions) regions.push_back(region_name(r));
    json j{{"pipeline", config.pipeline},
           {"regions", regions},
           {"model", model_kind_name(config.model)},
           {"cv_k", config.cv_k},
           {"seed", config.seed},
           {"grid", config.grid}};
    if (config.pipeline == "pag") {
        j["mi_bins"] = config.mi_bins;
        j["edge_threshold"] = config.edge_threshold;
        j["k_eigen"] = config.k_eigen;
    } else {
        json filters = json::array();
        for (FilterKind f : config.radiomics.filters) filters.push_back(filter_kind_name(f));
        j["filters"] = filters;
        j["log_sigmas"] = config.radiomics.log_sigmas;
        j["discretize_bins"] = config.radiomics.discretize_bins;
        j["reduce"] = config.reduce;
        j["reduce_target_min"] = config.reduce_params.target_min;
        j["reduce_pair_max"] = config.reduce_params.pair_max;
        j["split_select"] = config.split_select;
        j["holdout_fraction"] = config.holdout_fraction;
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << text;
    if (!out) throw InputError("write failed: " + path);
}

void write_report(const json& report, const std::string& out_dir) {
    write_text_file((fs::path(out_dir) / "report.json").string(), report.dump(2) + "\n");
}

void write_metrics_csv(const json& report, const std::string& out_dir) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"region", "fold", "accuracy", "f1", "auroc"});
    for (const auto& [region, body] : report.at("regions").items()) {
        for (const auto& fold : body.at("cv").at("folds")) {
            rows.push_back({region, csv::format_int(fold.at("fold").get<long long>()),
                            csv::format_double(fold.at("accuracy").get<double>()),
                            csv::format_double(fold.at("f1").get<double>()),
                            fold.at("auroc").is_null()
                                ? ""
                                : csv::format_double(fold.at("auroc").get<double>())});
        }
        const auto& mean = body.at("cv").at("mean");
        rows.push_back({region, "mean", csv::format_double(mean.at("accuracy").get<double>()),
                        csv::format_double(mean.at("f1").get<double>()),
                        mean.at("auroc").is_null()
                            ? ""
                            : csv::format_double(mean.at("auroc").get<double>())});
    }
    csv::write_file((fs::path(out_dir) / "metrics.csv").string(), rows);
}

struct RegionModelRun {
    ModelSpec spec;       // effective spec (after grid search when enabled)
    CvResult cv;
    json grid_json;       // null when grid disabled
};

RegionModelRun evaluate_region(const FeatureTable& table, const RunConfig& config) {
    RegionModelRun run;
    run.spec = config.model_spec();
    run.grid_json = nullptr;
    if (config.grid) {
        const GridSearchResult gs =
            grid_search(table, run.spec, default_grid(config.model), config.cv_k, config.seed,
                        config.threads);
        run.spec = gs.best_spec;
        json evaluated = json::array();
        for (const auto& gp : gs.evaluated)
            evaluated.push_back({{"params", gp.params}, {"mean_f1", gp.mean_f1}});
        run.grid_json = {{"evaluated", evaluated},
                         {"best_params", gs.best_params},
                         {"best_mean_f1", gs.best_f1}};
    }
    run.cv = cross_validate(table, run.spec, config.cv_k, config.seed, config.threads);
    return run;
}

json fusion_report(const std::vector<RegionCohort>& cohorts,
                   const std::map<std::string, CvResult>& cv_by_region) {
    const auto left_it = cv_by_region.find(region_name(Region::left_cistern));
    const auto right_it = cv_by_region.find(region_name(Region::right_cistern));
    if (left_it == cv_by_region.end() || right_it == cv_by_region.end()) return nullptr;

    const auto& labels = cohorts[0].labels;
    const auto fused = and_fuse(left_it->second.oof_labels, right_it->second.oof_labels);

    auto count_errors = [&](const std::vector<int>& pred, int truth, int predicted) {
        long long n = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (labels[i] == truth && pred[i] == predicted) ++n;
        return n;
    };
    json j;
    j["regions"] = {region_name(Region::left_cistern), region_name(Region::right_cistern)};
    long long hits = 0;
    for (std::size_t i = 0; i < fused.size(); ++i)
        if (fused[i] == labels[i]) ++hits;
    j["accuracy"] = static_cast<double>(hits) / static_cast<double>(fused.size());
    j["f1"] = f1_score(labels, fused);
    j["false_positives"] = {{"left_cistern", count_errors(left_it->second.oof_labels, 0, 1)},
                            {"right_cistern", count_errors(right_it->second.oof_labels, 0, 1)},
                            {"fused", count_errors(fused, 0, 1)}};
    j["false_negatives"] = {{"left_cistern", count_errors(left_it->second.oof_labels, 1, 0)},
                            {"right_cistern", count_errors(right_it->second.oof_labels, 1, 0)},
                            {"fused", count_errors(fused, 1, 0)}};
    return j;
}

} // namespace

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

json run_phantom_cmd(const RunConfig& config, const std::string& out_dir) {
    const PhantomDataset dataset = generate_phantom(config.phantom);
    const std::string manifest = write_phantom(dataset, out_dir);
    json j;
    j["manifest"] = manifest;
    j["subjects"] = dataset.subjects.size();
    j["regions_per_subject"] = 4;
    return j;
}

json run_pag(const std::string& manifest_path, const RunConfig& config,
             const std::string& out_dir) {
    const auto cohorts = load_cohort(manifest_path, config);
    fs::create_directories(fs::path(out_dir) / "features");
    fs::create_directories(fs::path(out_dir) / "models");

    json report;
    report["schema_version"] = 1;
    if (config.timestamp) report["generated_at"] = iso_utc_now();
    report["pipeline"] = "pag";
    report["config"] = config_echo(config);
    report["notes"] = {{"feature_reduction", "fit inside training folds only"},
                       {"fusion", "left AND right cistern out-of-fold predictions"}};

    std::vector<std::vector<std::string>> summary_rows;
    summary_rows.push_back({"region", "subject_id", "label", "n_total", "num_edges",
                            "num_active_nodes", "avg_edge_weight", "connected"});
    std::vector<std::vector<std::string>> stats_rows;
    stats_rows.push_back({"region", "group", "statistic", "min", "q1", "median", "q3", "max"});

    std::map<std::string, CvResult> cv_by_region;
    json regions_json;
    for (const auto& cohort : cohorts) {
        const std::string rname = region_name(cohort.region);
        const std::size_t n = cohort.patches.size();

        std::vector<PixelArrayGraph> graphs(n);
        std::vector<GraphSummary> summaries(n);
        std::vector<SpectralFeatureVector> features(n);
        parallel_for(n, config.threads, [&](std::size_t i) {
            const RoiPatch normalized = normalize_max(cohort.patches[i]);
            graphs[i] = build_graph(normalized, config.mi_bins, config.edge_threshold);
            summaries[i] = graph_summary(graphs[i]);
            features[i] = spectral_features(adjacency(graphs[i]), config.k_eigen);
        });

        if (config.dump_graphs) {
            const fs::path gdir = fs::path(out_dir) / "graphs" / rname;
            fs::create_directories(gdir);
            for (std::size_t i = 0; i < n; ++i) {
                write_graph_csv(graphs[i], (gdir / (cohort.subject_ids[i] + ".csv")).string());
                std::vector<std::vector<std::string>> one;
                one.push_back({"n_total", "num_edges", "num_active_nodes", "avg_edge_weight",
                               "connected"});
                one.push_back({csv::format_int(graphs[i].n_total),
                               csv::format_int(summaries[i].num_edges),
                               csv::format_int(summaries[i].num_active_nodes),
                               csv::format_double(summaries[i].avg_edge_weight),
                               graph_connected(graphs[i]) ? "1" : "0"});
                csv::write_file((gdir / (cohort.subject_ids[i] + "_summary.csv")).string(), one);
            }
        }

        for (std::size_t i = 0; i < n; ++i)
            summary_rows.push_back(
                {rname, cohort.subject_ids[i], csv::format_int(cohort.labels[i]),
                 csv::format_int(graphs[i].n_total), csv::format_int(summaries[i].num_edges),
                 csv::format_int(summaries[i].num_active_nodes),
                 csv::format_double(summaries[i].avg_edge_weight),
                 graph_connected(graphs[i]) ? "1" : "0"});

        const CohortGraphReport dist = cohort_graph_report(summaries, cohort.labels);
        for (const auto& [group, stats] : dist.groups)
            for (const auto& [stat, s] : stats)
                stats_rows.push_back({rname, group, stat, csv::format_double(s.min),
                                      csv::format_double(s.q1), csv::format_double(s.median),
                                      csv::format_double(s.q3), csv::format_double(s.max)});

        FeatureTable table;
        table.feature_names = spectral_feature_names(config.k_eigen, features[0].n);
        table.subject_ids = cohort.subject_ids;
        table.labels = cohort.labels;
        for (std::size_t i = 0; i < n; ++i) table.values.push_back(features[i].features);
        table.validate();
        const std::string features_file = "features/" + rname + "_features.csv";
        write_feature_table_csv(table, (fs::path(out_dir) / features_file).string());

        const RegionModelRun run = evaluate_region(table, config);
        cv_by_region[rname] = run.cv;

        const TrainedModel final_model =
            train_model(table, run.spec, derive_seed(config.seed, {0xF17A1}));
        const std::string model_file = "models/" + rname + ".json";
        save_model(final_model, (fs::path(out_dir) / model_file).string());

        json region_json;
        region_json["n_subjects"] = n;
        region_json["n_nodes"] = features[0].n;
        region_json["feature_count"] = table.n_features();
        region_json["model"] = model_kind_name(run.spec.kind);
        region_json["params"] = params_to_json(run.spec);
        if (!run.grid_json.is_null()) region_json["grid"] = run.grid_json;
        region_json["cv"] = cv_to_json(run.cv);
        json dist_json;
        for (const auto& [group, stats] : dist.groups) {
            json group_json;
            for (const auto& [stat, s] : stats) group_json[stat] = stats_to_json(s);
            dist_json[group] = group_json;
        }
        region_json["graph_stats"] = dist_json;
        region_json["features_file"] = features_file;
        region_json["model_file"] = model_file;
        regions_json[rname] = region_json;
    }
    report["regions"] = regions_json;
    report["fusion"] = fusion_report(cohorts, cv_by_region);

    csv::write_file((fs::path(out_dir) / "graph_summaries.csv").string(), summary_rows);
    csv::write_file((fs::path(out_dir) / "graph_summary_stats.csv").string(), stats_rows);
    write_metrics_csv(report, out_dir);
    write_report(report, out_dir);
    return report;
}

json run_radiomics(const std::string& manifest_path, const RunConfig& config,
                   const std::string& out_dir) {
    const auto cohorts = load_cohort(manifest_path, config);
    fs::create_directories(fs::path(out_dir) / "features");
    fs::create_directories(fs::path(out_dir) / "models");

    json report;
    report["schema_version"] = 1;
    if (config.timestamp) report["generated_at"] = iso_utc_now();
    report["pipeline"] = "radiomics";
    report["config"] = config_echo(config);
    report["notes"] = {{"feature_reduction", "fit inside training folds only"}};

    json features_manifest;
    {
        json filters = json::array();
        for (FilterKind f : config.radiomics.filters) filters.push_back(filter_kind_name(f));
        features_manifest = {{"filters", filters},
                             {"log_sigmas", config.radiomics.log_sigmas},
                             {"discretize_bins", config.radiomics.discretize_bins},
                             {"families", {"firstorder", "glcm", "glrlm", "shape"}},
                             {"image_count", config.radiomics.image_count()},
                             {"feature_count", config.radiomics.feature_count()}};
        write_text_file((fs::path(out_dir) / "features_manifest.json").string(),
                        features_manifest.dump(2) + "\n");
    }
    report["features_manifest"] = features_manifest;

    std::vector<std::vector<std::string>> drop_rows;
    drop_rows.push_back({"region", "fold", "feature", "rule", "statistic"});

    json regions_json;
    for (const auto& cohort : cohorts) {
        const std::string rname = region_name(cohort.region);
        const std::size_t n = cohort.patches.size();

        std::vector<FeatureRow> rows(n);
        parallel_for(n, config.threads, [&](std::size_t i) {
            rows[i] = extract_all(zscore_normalize(cohort.patches[i]), config.radiomics);
        });

        FeatureTable table;
        table.feature_names.reserve(rows[0].features.size());
        for (const auto& [name, _] : rows[0].features) table.feature_names.push_back(name);
        table.subject_ids = cohort.subject_ids;
        table.labels = cohort.labels;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> vals;
            vals.reserve(rows[i].features.size());
            for (const auto& [_, v] : rows[i].features) vals.push_back(v);
            table.values.push_back(std::move(vals));
        }
        table.validate();
        const std::string features_file = "features/" + rname + "_features.csv";
        write_feature_table_csv(table, (fs::path(out_dir) / features_file).string());

        const RegionModelRun run = evaluate_region(table, config);
        for (std::size_t f = 0; f < run.cv.fold_drop_logs.size(); ++f)
            for (const auto& d : run.cv.fold_drop_logs[f])
                drop_rows.push_back({rname, csv::format_int(static_cast<long long>(f)), d.feature,
                                     d.rule, csv::format_double(d.statistic)});

        // paper-style 80/20 stratified holdout alongside the CV numbers
        const HoldoutSplit split =
            holdout_split(table.labels, config.holdout_fraction, config.seed);
        const FeatureTable train = table.select_rows(split.train);
        const FeatureTable test = table.select_rows(split.test);
        ModelSpec holdout_spec = run.spec;
        const std::uint64_t holdout_seed = derive_seed(config.seed, {0x407D});
        json holdout_json;
        {
            FeatureTable fit_train = train;
            FeatureTable fit_test = test;
            if (holdout_spec.reduce) {
                ReduceResult reduced = reduce_features(fit_train, holdout_spec.reduce_params);
                for (const auto& d : reduced.dropped)
                    drop_rows.push_back({rname, "holdout", d.feature, d.rule,
                                         csv::format_double(d.statistic)});
                fit_test = fit_test.select_columns_by_name(reduced.table.feature_names);
                fit_train = std::move(reduced.table);
                holdout_spec.reduce = false;
            }
            if (holdout_spec.split_select) {
                const TrainedModel probe = train_gbdt(fit_train, holdout_spec.gbdt, holdout_seed);
                const auto selected =
                    select_by_split_importance(probe, holdout_spec.split_select_threshold);
                if (selected.empty())
                    throw AnalysisError("no features selected by split importance");
                fit_train = fit_train.select_columns_by_name(selected);
                fit_test = fit_test.select_columns_by_name(selected);
                holdout_spec.split_select = false;
                holdout_json["selected_features"] = selected;
            }
            const TrainedModel model = train_model(fit_train, holdout_spec, holdout_seed);
            const Predictions pred = predict(model, fit_test);
            holdout_json["metrics"] = metric_to_json(compute_metrics(fit_test.labels, pred.labels,
                                                                     pred.scores));
            holdout_json["n_train"] = split.train.size();
            holdout_json["n_test"] = split.test.size();
        }

        const TrainedModel final_model =
            train_model(table, run.spec, derive_seed(config.seed, {0xF17A1}));
        const std::string model_file = "models/" + rname + ".json";
        save_model(final_model, (fs::path(out_dir) / model_file).string());

        json region_json;
        region_json["n_subjects"] = n;
        region_json["feature_count"] = table.n_features();
        if (final_model.kind == ModelKind::gbdt) {
            json counts;
            for (const auto& [name, count] : split_importance(final_model))
                if (count > 0) counts[name] = count;
            region_json["final_model_split_importance"] = counts;
        }
        region_json["model"] = model_kind_name(run.spec.kind);
        region_json["params"] = params_to_json(run.spec);
        if (!run.grid_json.is_null()) region_json["grid"] = run.grid_json;
        region_json["cv"] = cv_to_json(run.cv);
        if (config.split_select) {
            json per_fold = json::array();
            for (const auto& sel : run.cv.fold_selected_features) per_fold.push_back(sel);
            region_json["selected_features_per_fold"] = per_fold;
        }
        region_json["holdout"] = holdout_json;
        region_json["features_file"] = features_file;
        region_json["model_file"] = model_file;
        regions_json[rname] = region_json;
    }
    report["regions"] = regions_json;

    csv::write_file((fs::path(out_dir) / "drop_log.csv").string(), drop_rows);
    write_metrics_csv(report, out_dir);
    write_report(report, out_dir);
    return report;
}

json run_explain(const std::string& model_path, const std::string& table_path, int n_repeats,
                 std::uint64_t seed, const std::string& out_csv) {
    const TrainedModel model = load_model(model_path);
    FeatureTable table = read_feature_table_csv(table_path);
    // the model may be bound to a reduced feature subset
    table = table.select_columns_by_name(model.feature_names);

    const auto importance = permutation_importance(model, table, n_repeats, seed);
    std::vector<std::pair<std::string, double>> ranked(importance.begin(), importance.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"feature", "mean_f1_drop"});
    for (const auto& [name, drop] : ranked) rows.push_back({name, csv::format_double(drop)});
    csv::write_file(out_csv, rows);

    json j;
    j["model"] = model_path;
    j["n_features"] = ranked.size();
    j["n_repeats"] = n_repeats;
    j["output"] = out_csv;
    if (!ranked.empty()) j["top_feature"] = ranked.front().first;
    return j;
}

std::string format_report_summary(const json& report) {
    std::ostringstream out;
    out << "pipeline: " << report.value("pipeline", std::string("?")) << "\n";
    if (report.contains("regions")) {
        for (const auto& [region, body] : report.at("regions").items()) {
            const auto& mean = body.at("cv").at("mean");
            out << region << ": accuracy " << mean.at("accuracy").get<double>() << ", F1 "
                << mean.at("f1").get<double>();
            if (!mean.at("auroc").is_null())
                out << ", AUROC " << mean.at("auroc").get<double>();
            out << " (" << body.at("model").get<std::string>() << ")\n";
        }
    }
    if (report.contains("fusion") && !report.at("fusion").is_null()) {
        const auto& fusion = report.at("fusion");
        out << "cistern AND-fusion: accuracy " << fusion.at("accuracy").get<double>() << ", F1 "
            << fusion.at("f1").get<double>() << ", false positives "
            << fusion.at("false_positives").at("fused").get<long long>() << "\n";
    }
    return out.str();
}

} // namespace pagc
