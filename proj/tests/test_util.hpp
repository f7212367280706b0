#pragma once

#include "pagc/rng.hpp"
#include "pagc/volume.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace test_util {

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("pagc_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& name = "") const {
        return name.empty() ? path_.string() : (path_ / name).string();
    }

private:
    std::filesystem::path path_;
};

inline pagc::Volume3D random_volume(int nx, int ny, int nz, std::uint64_t seed) {
    pagc::Volume3D vol;
    vol.dims = {nx, ny, nz};
    vol.spacing = {1.0, 1.0, 1.0};
    vol.voxels.resize(vol.voxel_count());
    pagc::Rng rng(seed);
    for (auto& v : vol.voxels) v = static_cast<float>(rng.uniform(0.0, 10.0));
    return vol;
}

inline pagc::RoiPatch random_patch(int nx, int ny, int nz, std::uint64_t seed) {
    pagc::RoiPatch patch;
    patch.dims = {nx, ny, nz};
    patch.voxels.resize(patch.voxel_count());
    pagc::Rng rng(seed);
    for (auto& v : patch.voxels) v = rng.uniform(0.0, 10.0);
    return patch;
}

// Patch with all values already in [0,1].
inline pagc::RoiPatch random_unit_patch(int nx, int ny, int nz, std::uint64_t seed) {
    pagc::RoiPatch patch;
    patch.dims = {nx, ny, nz};
    patch.voxels.resize(patch.voxel_count());
    pagc::Rng rng(seed);
    for (auto& v : patch.voxels) v = rng.uniform();
    return patch;
}

inline std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace test_util
