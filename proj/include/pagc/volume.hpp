#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pagc {

// Region identifiers for the four ROI sites.
enum class Region { left_cistern, right_cistern, bone, corpus_callosum };

const char* region_name(Region r);
Region region_from_name(const std::string& name);

/// A dense 3D intensity grid. Voxels are stored x-fastest (index =
/// x + dims[0]*(y + dims[1]*z)) as 32-bit floats matching the on-disk
/// payload, so load/save round-trips are bit-exact.
struct Volume3D {
    std::array<int, 3> dims{0, 0, 0};            // x, y, z
    std::array<double, 3> spacing{1.0, 1.0, 1.0}; // mm
    std::vector<float> voxels;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    float at(int x, int y, int z) const {
        return voxels[static_cast<std::size_t>(x) +
                      static_cast<std::size_t>(dims[0]) * (y + static_cast<std::size_t>(dims[1]) * z)];
    }
    // Throws InputError if dims/spacing/voxels violate the invariants
    // (positive dims and spacing, count == x*y*z, finite non-negative values).
    void validate() const;
};

/// Axis-aligned ROI placement inside a volume.
struct RoiSpec {
    Region region = Region::left_cistern;
    std::array<int, 3> origin{0, 0, 0};
    std::array<int, 3> size{0, 0, 0};
};

/// A working copy of one ROI. Voxels are doubles (x-fastest ordering as in
/// Volume3D); spacing is carried over from the source volume for the shape
/// features.
struct RoiPatch {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::vector<double> voxels;
    std::string subject_id;
    Region region = Region::left_cistern;
    int label = 0; // 1 = patient

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    double at(int x, int y, int z) const {
        return voxels[static_cast<std::size_t>(x) +
                      static_cast<std::size_t>(dims[0]) * (y + static_cast<std::size_t>(dims[1]) * z)];
    }
    double& at(int x, int y, int z) {
        return voxels[static_cast<std::size_t>(x) +
                      static_cast<std::size_t>(dims[0]) * (y + static_cast<std::size_t>(dims[1]) * z)];
    }
};

enum class ResampleMethod { nearest, trilinear, cubic_bspline };

ResampleMethod resample_method_from_name(const std::string& name);

// Volume file format: a UTF-8 header of key=value lines
//   dims=x,y,z
//   spacing=sx,sy,sz
//   dtype=f32le
//   data=<path relative to the header>
// plus a raw little-endian float32 payload in the companion file.
Volume3D load_volume(const std::string& header_path);
void save_volume(const Volume3D& vol, const std::string& header_path);

RoiPatch extract_roi(const Volume3D& vol, const RoiSpec& spec,
                     const std::string& subject_id = "", int label = 0);

// I(x,y,z) / max I. Errors with "degenerate patch" when all voxels are zero.
RoiPatch normalize_max(const RoiPatch& patch);

// (I - mean) / population std. Errors with "zero variance" on constant input.
RoiPatch zscore_normalize(const RoiPatch& patch);

// Resamples onto a grid with the given spacing; new dims are
// round(old_dim * old_spacing / target_spacing), at least 1. Sample points
// use the voxel-center convention and out-of-support coordinates clamp to
// the border. cubic_bspline is an interpolating spline (coefficients are
// prefiltered), so all three methods reproduce the input on an identical grid.
Volume3D resample(const Volume3D& vol, const std::array<double, 3>& target_spacing,
                  ResampleMethod method);

} // namespace pagc
