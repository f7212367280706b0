#pragma once

#include "pagc/evaluation.hpp"
#include "pagc/phantom.hpp"
#include "pagc/radiomics.hpp"
#include "pagc/spectral.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pagc {

/// Everything a run needs, parsed from a key=value config file. Seeds are
/// always explicit; nothing falls back to the wall clock.
struct RunConfig {
    std::string pipeline = "pag"; // pag | radiomics
    std::vector<Region> regions{Region::left_cistern, Region::right_cistern, Region::bone,
                                Region::corpus_callosum};

    // pixel-array graph stage
    int mi_bins = kDefaultMiBins;
    double edge_threshold = kDefaultEdgeThreshold;
    int k_eigen = kDefaultTopEigenvectors;
    bool dump_graphs = false;

    // radiomics stage
    RadiomicsConfig radiomics;
    bool reduce = true;
    ReduceParams reduce_params;
    bool split_select = true;
    double holdout_fraction = 0.2;

    // models
    ModelKind model = ModelKind::random_forest;
    RfParams rf;
    SvmParams svm;
    GbdtParams gbdt;
    bool grid = false; // use the documented default grid for the model kind

    // evaluation
    int cv_k = 5;
    std::uint64_t seed = 7;
    int threads = 1;
    bool timestamp = true;

    // optional resampling before ROI extraction (ROI coordinates are
    // interpreted on the resampled grid)
    std::optional<std::array<double, 3>> resample_spacing;
    ResampleMethod resample_method = ResampleMethod::cubic_bspline;

    PhantomConfig phantom;

    ModelSpec model_spec() const;
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// The documented default search grid for a model kind (gbdt: the fixed
// configuration, a singleton grid).
ParamGrid default_grid(ModelKind kind);

/// One region's loaded cohort, rows sorted by subject_id.
struct RegionCohort {
    Region region = Region::left_cistern;
    std::vector<RoiPatch> patches;
    std::vector<std::string> subject_ids;
    std::vector<int> labels;
};

// Loads and validates the cohort for every configured region: uniform ROI
// dims within a region ("inconsistent ROI dims"), identical subject/label
// sets across regions.
std::vector<RegionCohort> load_cohort(const std::string& manifest_path, const RunConfig& config);

// Command runners. Each writes its outputs under out_dir and returns the
// report document.
nlohmann::json run_phantom_cmd(const RunConfig& config, const std::string& out_dir);
nlohmann::json run_pag(const std::string& manifest_path, const RunConfig& config,
                       const std::string& out_dir);
nlohmann::json run_radiomics(const std::string& manifest_path, const RunConfig& config,
                             const std::string& out_dir);
nlohmann::json run_explain(const std::string& model_path, const std::string& table_path,
                           int n_repeats, std::uint64_t seed, const std::string& out_csv);

// Renders a report JSON as a human-readable summary.
std::string format_report_summary(const nlohmann::json& report);

} // namespace pagc
