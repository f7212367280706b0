#pragma once

#include "pagc/volume.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pagc {

/// Cohort generator settings. snr is the latent-signal to noise amplitude
/// ratio; snr == 0 produces a null cohort (pure noise in both groups).
struct PhantomConfig {
    int n_per_group = 20;
    std::array<int, 3> roi_dims{8, 8, 16};
    double snr = 4.0;
    std::uint64_t seed = 7;

    void validate() const; // dz >= 4, n_per_group >= 2, snr >= 0
};

struct PhantomSubject {
    std::string id;
    int label = 0;
    Volume3D volume;                // the four ROIs laid out side by side on x
    std::array<RoiSpec, 4> rois;
};

struct PhantomDataset {
    PhantomConfig config;
    std::vector<PhantomSubject> subjects; // controls first, then patients
};

// Deterministic synthetic cohort. Control columns share one latent
// z-signal per (subject, region) with additive noise scaled by 1/snr, so
// inter-column mutual information is high. Patient columns are independent
// noise except for small clusters that mix in their own latent signals,
// giving low inter-column MI for most pairs. Per-(subject, region)
// substreams make generation a pure function of the config.
PhantomDataset generate_phantom(const PhantomConfig& config);

/// One manifest row: where a subject's ROI lives on disk.
struct ManifestEntry {
    std::string subject_id;
    int label = 0;
    Region region = Region::left_cistern;
    std::string volume_path; // relative to the manifest file
    std::array<int, 3> roi_origin{0, 0, 0};
    std::array<int, 3> roi_size{0, 0, 0};
};

// Writes volumes (<id>.vol/.raw) and manifest.csv under out_dir; returns the
// manifest path.
std::string write_phantom(const PhantomDataset& dataset, const std::string& out_dir);

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);

} // namespace pagc
