#include "pagc/phantom.hpp"

#include "pagc/csv.hpp"
#include "pagc/error.hpp"
#include "pagc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

namespace pagc {

namespace fs = std::filesystem;

void PhantomConfig::validate() const {
    if (n_per_group < 2) throw InputError("phantom: n_per_group must be >= 2");
    for (int d : roi_dims)
        if (d <= 0) throw InputError("phantom: roi dims must be positive");
    if (roi_dims[2] < 4) throw InputError("phantom: roi dz must be >= 4 for MI histograms");
    if (!(snr >= 0.0) || !std::isfinite(snr)) throw InputError("phantom: snr must be >= 0");
}

namespace {

// Intensity map v = offset + gain * x for the structural value x. Latent
// z-signals are binary (+/-1) so their two levels land in distinct MI
// histogram bins after max-normalization while the per-sample histogram
// bias of small z-counts stays low; noise perturbs around the levels with
// standard deviation 1/snr.
constexpr double kOffset = 40.0;
constexpr double kGain = 10.0;
constexpr int kPatientClusters = 4; // live patient columns split across these
constexpr int kDeadStride = 4;      // every 4th patient column is flat

// Fills one region patch directly into the subject volume at x-offset.
//
// Controls: every column follows one shared binary z-signal, so all column
// pairs carry high mutual information. Patients: a quarter of the columns
// are flat (constant intensity, exactly zero MI with everything, hence
// isolated nodes), and the rest follow one of a few cluster signals, so
// most pairs have low MI and only within-cluster pairs stay strong.
// snr == 0 drops all structure: pure continuous noise in both groups.
void fill_region(Volume3D& vol, int x_offset, const std::array<int, 3>& dims, bool patient,
                 double snr, Rng& rng) {
    const int dx = dims[0], dy = dims[1], dz = dims[2];
    const int n_cols = dx * dy;

    auto binary_signal = [&] {
        std::vector<double> s(static_cast<std::size_t>(dz));
        for (double& v : s) v = rng.bounded(2) ? 1.0 : -1.0;
        return s;
    };
    const std::vector<double> shared = binary_signal();
    std::vector<std::vector<double>> mixed;
    for (int g = 0; g < kPatientClusters; ++g) mixed.push_back(binary_signal());

    // live patient columns, assigned to clusters by position
    std::vector<int> cluster_of(static_cast<std::size_t>(n_cols), -1);
    {
        std::vector<int> live;
        for (int col = 0; col < n_cols; ++col)
            if (col % kDeadStride != kDeadStride - 1) live.push_back(col);
        for (std::size_t i = 0; i < live.size(); ++i)
            cluster_of[static_cast<std::size_t>(live[i])] =
                static_cast<int>(i * kPatientClusters / live.size());
    }

    for (int col = 0; col < n_cols; ++col) {
        const int x = col % dx;
        const int y = col / dx;
        for (int z = 0; z < dz; ++z) {
            const double noise = rng.normal(); // one draw per voxel, always
            double x_struct;
            if (snr == 0.0) {
                x_struct = noise; // null cohort
            } else if (!patient) {
                x_struct = shared[static_cast<std::size_t>(z)] + noise / snr;
            } else if (cluster_of[static_cast<std::size_t>(col)] < 0) {
                x_struct = 0.0; // flat column
            } else {
                const auto& m = mixed[static_cast<std::size_t>(
                    cluster_of[static_cast<std::size_t>(col)])];
                x_struct = m[static_cast<std::size_t>(z)] + noise / snr;
            }
            const double v = kOffset + kGain * x_struct;
            const std::size_t idx = static_cast<std::size_t>(x_offset + x) +
                                    static_cast<std::size_t>(vol.dims[0]) *
                                        (static_cast<std::size_t>(y) +
                                         static_cast<std::size_t>(vol.dims[1]) * z);
            vol.voxels[idx] = static_cast<float>(std::max(0.0, v));
        }
    }
}

} // namespace

PhantomDataset generate_phantom(const PhantomConfig& config) {
    config.validate();
    const auto& d = config.roi_dims;

    PhantomDataset dataset;
    dataset.config = config;
    const Region regions[4] = {Region::left_cistern, Region::right_cistern, Region::bone,
                               Region::corpus_callosum};

    for (int group = 0; group < 2; ++group) {
        for (int i = 0; i < config.n_per_group; ++i) {
            PhantomSubject subject;
            char id[32];
            std::snprintf(id, sizeof(id), "%s_%03d", group == 0 ? "ctrl" : "pat", i);
            subject.id = id;
            subject.label = group;
            subject.volume.dims = {4 * d[0], d[1], d[2]};
            subject.volume.spacing = {1.0, 1.0, 1.0};
            subject.volume.voxels.assign(subject.volume.voxel_count(), 0.0f);

            const std::uint64_t subject_key =
                static_cast<std::uint64_t>(group) * 1000003ULL + static_cast<std::uint64_t>(i);
            for (int r = 0; r < 4; ++r) {
                Rng rng(derive_seed(config.seed, {subject_key, static_cast<std::uint64_t>(r)}));
                fill_region(subject.volume, r * d[0], d, group == 1, config.snr, rng);
                subject.rois[static_cast<std::size_t>(r)] = RoiSpec{
                    regions[r], {r * d[0], 0, 0}, {d[0], d[1], d[2]}};
            }
            dataset.subjects.push_back(std::move(subject));
        }
    }
    return dataset;
}

namespace {

std::string triple_to_string(const std::array<int, 3>& t) {
    return std::to_string(t[0]) + ":" + std::to_string(t[1]) + ":" + std::to_string(t[2]);
}

std::array<int, 3> triple_from_string(const std::string& s) {
    std::array<int, 3> out{};
    std::stringstream ss(s);
    std::string tok;
    int i = 0;
    while (std::getline(ss, tok, ':')) {
        if (i >= 3) throw InputError("bad coordinate triple: '" + s + "'");
        out[i++] = static_cast<int>(csv::parse_int(tok));
    }
    if (i != 3) throw InputError("bad coordinate triple: '" + s + "'");
    return out;
}

} // namespace

std::string write_phantom(const PhantomDataset& dataset, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<ManifestEntry> entries;
    for (const auto& subject : dataset.subjects) {
        const std::string vol_name = subject.id + ".vol";
        save_volume(subject.volume, (fs::path(out_dir) / vol_name).string());
        for (const auto& roi : subject.rois) {
            ManifestEntry e;
            e.subject_id = subject.id;
            e.label = subject.label;
            e.region = roi.region;
            e.volume_path = vol_name;
            e.roi_origin = roi.origin;
            e.roi_size = roi.size;
            entries.push_back(std::move(e));
        }
    }
    const std::string manifest_path = (fs::path(out_dir) / "manifest.csv").string();
    write_manifest(entries, manifest_path);
    return manifest_path;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"subject_id", "label", "region", "volume_path", "roi_origin", "roi_size"});
    for (const auto& e : entries)
        rows.push_back({e.subject_id, csv::format_int(e.label), region_name(e.region),
                        e.volume_path, triple_to_string(e.roi_origin),
                        triple_to_string(e.roi_size)});
    csv::write_file(path, rows);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    const auto rows = csv::read_file(path);
    const std::vector<std::string> header = {"subject_id", "label",      "region",
                                             "volume_path", "roi_origin", "roi_size"};
    if (rows.empty() || rows[0] != header) throw InputError("bad manifest header: " + path);
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != header.size())
            throw InputError("bad manifest row " + std::to_string(i) + " in " + path);
        ManifestEntry e;
        e.subject_id = rows[i][0];
        e.label = static_cast<int>(csv::parse_int(rows[i][1]));
        if (e.label != 0 && e.label != 1) throw InputError("manifest label must be 0 or 1");
        e.region = region_from_name(rows[i][2]);
        e.volume_path = rows[i][3];
        e.roi_origin = triple_from_string(rows[i][4]);
        e.roi_size = triple_from_string(rows[i][5]);
        entries.push_back(std::move(e));
    }
    return entries;
}

} // namespace pagc
