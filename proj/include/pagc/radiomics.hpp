#pragma once

#include "pagc/volume.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace pagc {

enum class FilterKind {
    original,
    exponential,
    logarithm,
    square,
    square_root,
    gradient,
    log_of_gaussian, // Laplacian of Gaussian, sigma in voxels
    wavelet          // single-level 3D Haar, 8 subbands
};

const char* filter_kind_name(FilterKind k);
FilterKind filter_kind_from_name(const std::string& name);

// Subband letters in x,y,z order: "LLH" = low-pass in x and y, high-pass in z.
extern const char* const kWaveletSubbands[8];

// Intensity filters:
//   square:      x^2
//   square_root: sqrt(x - min)
//   logarithm:   ln(x - min + 1)
//   exponential: exp(x rescaled to [0,1]) (constant input maps to exp(0))
//   gradient:    central-difference magnitude, border replication
//   LoG:         separable Gaussian blur (kernel radius ceil(3*sigma), border
//                replication) followed by the 6-neighbor discrete Laplacian
// Output dims equal input dims. gradient needs every axis dim >= 2.
RoiPatch apply_filter(const RoiPatch& patch, FilterKind kind, double sigma = 1.0);

// Single-level orthonormal 3D Haar transform. Returns the 8 subbands in
// kWaveletSubbands order; each has ceil(dim/2) samples per axis (odd dims
// extend by edge replication). Needs every axis dim >= 2.
std::vector<RoiPatch> haar_wavelet(const RoiPatch& patch);

/// Integer gray levels in 1..n_levels, same grid layout as the source patch.
struct LevelGrid {
    std::array<int, 3> dims{0, 0, 0};
    int n_levels = 0;
    std::vector<int> levels;

    int at(int x, int y, int z) const {
        return levels[static_cast<std::size_t>(x) +
                      static_cast<std::size_t>(dims[0]) * (y + static_cast<std::size_t>(dims[1]) * z)];
    }
};

// Equal-width bins over [min, max]; the max value maps to n_bins. A constant
// patch maps every voxel to level 1.
LevelGrid discretize(const RoiPatch& patch, int n_bins);

using NamedFeatures = std::vector<std::pair<std::string, double>>;

// The 13 unique 3D direction offsets (26-neighborhood modulo sign).
const std::vector<std::array<int, 3>>& texture_directions();

NamedFeatures first_order_features(const RoiPatch& patch);

// Co-occurrence features, symmetric accumulation, normalized per direction
// and averaged over the given directions (default all 13). Directions with
// no voxel pairs are skipped; if every direction is skipped this throws.
NamedFeatures glcm_features(const LevelGrid& grid, int distance = 1);
NamedFeatures glcm_features(const LevelGrid& grid, const std::vector<std::array<int, 3>>& directions,
                            int distance);

// Run-length features over the same direction set, averaged.
NamedFeatures glrlm_features(const LevelGrid& grid);
NamedFeatures glrlm_features(const LevelGrid& grid, const std::vector<std::array<int, 3>>& directions);

// Shape of the rectangular ROI block: VoxelVolume, SurfaceArea,
// SurfaceVolumeRatio, Elongation, Flatness (coordinate-PCA based).
NamedFeatures shape_features(const std::array<int, 3>& dims, const std::array<double, 3>& spacing);

struct RadiomicsConfig {
    std::vector<FilterKind> filters{
        FilterKind::original,   FilterKind::exponential, FilterKind::logarithm,
        FilterKind::square,     FilterKind::square_root, FilterKind::gradient,
        FilterKind::log_of_gaussian, FilterKind::wavelet};
    std::vector<double> log_sigmas{1.0};
    int discretize_bins = 32;

    // firstorder + glcm + glrlm per image, shape once
    int feature_count() const;
    int image_count() const; // filters with wavelet expanded to its 8 subbands
};

/// One subject's named feature values, names <filter>-<family>-<FeatureName>.
struct FeatureRow {
    std::string subject_id;
    int label = 0;
    NamedFeatures features;
};

// Runs every enabled filter and feature family over the patch. Names are
// unique and values finite; deterministic for identical input.
FeatureRow extract_all(const RoiPatch& patch, const RadiomicsConfig& config);

} // namespace pagc
