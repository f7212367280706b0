#include "pagc/volume.hpp"

#include "pagc/csv.hpp"
#include "pagc/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "raw voxel payload is little-endian");

namespace pagc {

namespace fs = std::filesystem;

const char* region_name(Region r) {
    switch (r) {
        case Region::left_cistern: return "left_cistern";
        case Region::right_cistern: return "right_cistern";
        case Region::bone: return "bone";
        case Region::corpus_callosum: return "corpus_callosum";
    }
    throw InputError("unknown region");
}

Region region_from_name(const std::string& name) {
    if (name == "left_cistern") return Region::left_cistern;
    if (name == "right_cistern") return Region::right_cistern;
    if (name == "bone") return Region::bone;
    if (name == "corpus_callosum") return Region::corpus_callosum;
    throw InputError("unknown region: '" + name + "'");
}

ResampleMethod resample_method_from_name(const std::string& name) {
    if (name == "nearest") return ResampleMethod::nearest;
    if (name == "trilinear") return ResampleMethod::trilinear;
    if (name == "cubic_bspline") return ResampleMethod::cubic_bspline;
    throw InputError("unknown resample method: '" + name + "'");
}

void Volume3D::validate() const {
    for (int d : dims)
        if (d <= 0) throw InputError("volume dims must be positive");
    for (double s : spacing)
        if (!(s > 0.0) || !std::isfinite(s)) throw InputError("volume spacing must be positive");
    if (voxels.size() != voxel_count())
        throw InputError("voxel count mismatch: have " + std::to_string(voxels.size()) +
                         ", dims require " + std::to_string(voxel_count()));
    for (float v : voxels) {
        if (!std::isfinite(v)) throw InputError("non-finite voxel");
        if (v < 0.0f) throw InputError("negative voxel");
    }
}

namespace {

std::array<double, 3> parse_triple(const std::string& value, const std::string& key) {
    std::array<double, 3> out{};
    std::stringstream ss(value);
    std::string tok;
    int i = 0;
    while (std::getline(ss, tok, ',')) {
        if (i >= 3) throw InputError("header field '" + key + "' needs exactly 3 values");
        out[i++] = csv::parse_double(tok);
    }
    if (i != 3) throw InputError("header field '" + key + "' needs exactly 3 values");
    return out;
}

} // namespace

Volume3D load_volume(const std::string& header_path) {
    std::ifstream in(header_path);
    if (!in) throw InputError("missing file: " + header_path);

    std::string dims_s, spacing_s, dtype_s, data_s;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError("malformed header line: '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key == "dims") dims_s = value;
        else if (key == "spacing") spacing_s = value;
        else if (key == "dtype") dtype_s = value;
        else if (key == "data") data_s = value;
        else throw InputError("unknown header field: '" + key + "'");
    }
    if (dims_s.empty() || spacing_s.empty() || dtype_s.empty() || data_s.empty())
        throw InputError("header missing required fields (dims, spacing, dtype, data)");
    if (dtype_s != "f32le") throw InputError("unsupported dtype: '" + dtype_s + "'");

    Volume3D vol;
    auto d = parse_triple(dims_s, "dims");
    for (int i = 0; i < 3; ++i) {
        if (d[i] <= 0 || d[i] != std::floor(d[i]))
            throw InputError("dims must be positive integers");
        vol.dims[i] = static_cast<int>(d[i]);
    }
    vol.spacing = parse_triple(spacing_s, "spacing");

    fs::path raw_path = fs::path(header_path).parent_path() / data_s;
    std::ifstream raw(raw_path, std::ios::binary);
    if (!raw) throw InputError("missing file: " + raw_path.string());
    raw.seekg(0, std::ios::end);
    const std::size_t bytes = static_cast<std::size_t>(raw.tellg());
    raw.seekg(0);
    if (bytes % sizeof(float) != 0)
        throw InputError("raw payload size is not a multiple of 4 bytes: " + raw_path.string());
    const std::size_t count = bytes / sizeof(float);
    if (count != vol.voxel_count())
        throw InputError("voxel count mismatch: raw file has " + std::to_string(count) +
                         " values, dims require " + std::to_string(vol.voxel_count()));
    vol.voxels.resize(count);
    raw.read(reinterpret_cast<char*>(vol.voxels.data()), static_cast<std::streamsize>(bytes));
    if (!raw) throw InputError("short read: " + raw_path.string());

    vol.validate();
    return vol;
}

void save_volume(const Volume3D& vol, const std::string& header_path) {
    vol.validate();

    fs::path hp(header_path);
    fs::path raw_path = hp;
    raw_path.replace_extension(".raw");

    std::ofstream raw(raw_path, std::ios::binary);
    if (!raw) throw InputError("cannot write file: " + raw_path.string());
    raw.write(reinterpret_cast<const char*>(vol.voxels.data()),
              static_cast<std::streamsize>(vol.voxels.size() * sizeof(float)));
    if (!raw) throw InputError("write failed: " + raw_path.string());
    raw.close();

    std::ofstream hdr(hp);
    if (!hdr) throw InputError("cannot write file: " + header_path);
    hdr << "dims=" << vol.dims[0] << ',' << vol.dims[1] << ',' << vol.dims[2] << '\n';
    hdr << "spacing=" << csv::format_double(vol.spacing[0]) << ','
        << csv::format_double(vol.spacing[1]) << ',' << csv::format_double(vol.spacing[2]) << '\n';
    hdr << "dtype=f32le\n";
    hdr << "data=" << raw_path.filename().string() << '\n';
    if (!hdr) throw InputError("write failed: " + header_path);
}

RoiPatch extract_roi(const Volume3D& vol, const RoiSpec& spec,
                     const std::string& subject_id, int label) {
    for (int i = 0; i < 3; ++i) {
        if (spec.size[i] <= 0) throw InputError("roi size must be positive");
        if (spec.origin[i] < 0 || spec.origin[i] + spec.size[i] > vol.dims[i])
            throw InputError("roi out of bounds along axis " + std::to_string(i));
    }
    RoiPatch patch;
    patch.dims = spec.size;
    patch.spacing = vol.spacing;
    patch.subject_id = subject_id;
    patch.region = spec.region;
    patch.label = label;
    patch.voxels.resize(patch.voxel_count());
    std::size_t k = 0;
    for (int z = 0; z < spec.size[2]; ++z)
        for (int y = 0; y < spec.size[1]; ++y)
            for (int x = 0; x < spec.size[0]; ++x)
                patch.voxels[k++] =
                    vol.at(spec.origin[0] + x, spec.origin[1] + y, spec.origin[2] + z);
    return patch;
}

RoiPatch normalize_max(const RoiPatch& patch) {
    if (patch.voxels.empty()) throw InputError("empty patch");
    double mx = 0.0;
    for (double v : patch.voxels) {
        if (!std::isfinite(v)) throw InputError("non-finite voxel");
        if (v < 0.0) throw InputError("negative voxel");
        mx = std::max(mx, v);
    }
    if (mx == 0.0) throw AnalysisError("degenerate patch: all voxels are zero");
    RoiPatch out = patch;
    for (double& v : out.voxels) v /= mx;
    return out;
}

RoiPatch zscore_normalize(const RoiPatch& patch) {
    const std::size_t n = patch.voxels.size();
    if (n == 0) throw InputError("empty patch");
    double mean = 0.0;
    for (double v : patch.voxels) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : patch.voxels) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n); // population variance
    if (var == 0.0) throw AnalysisError("zero variance: constant patch");
    const double sd = std::sqrt(var);
    RoiPatch out = patch;
    for (double& v : out.voxels) v = (v - mean) / sd;
    return out;
}

namespace {

// Interpolating cubic B-spline prefilter (recursive causal/anticausal filter,
// mirror boundary). After this pass, evaluating the B-spline kernel over the
// coefficients reproduces the original samples at integer positions.
void bspline_prefilter_line(double* c, std::size_t n, std::size_t stride) {
    if (n == 1) return;
    constexpr double z = -0.26794919243112270647; // sqrt(3) - 2
    constexpr double lambda = 6.0;

    auto at = [&](std::size_t i) -> double& { return c[i * stride]; };

    for (std::size_t i = 0; i < n; ++i) at(i) *= lambda;

    // causal init under mirror boundaries: either the truncated geometric
    // sum (long signals) or the closed-form full mirror sum (short ones)
    const std::size_t horizon =
        static_cast<std::size_t>(std::ceil(std::log(1e-17) / std::log(-z)));
    double sum;
    if (horizon < n) {
        sum = at(0);
        double zk = z;
        for (std::size_t k = 1; k < horizon; ++k) {
            sum += zk * at(k);
            zk *= z;
        }
    } else {
        double zk = z;
        const double iz = 1.0 / z;
        double z2k = std::pow(z, static_cast<double>(n - 1));
        sum = at(0) + z2k * at(n - 1);
        z2k = z2k * z2k * iz;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            sum += (zk + z2k) * at(k);
            zk *= z;
            z2k *= iz;
        }
        sum /= 1.0 - std::pow(z, static_cast<double>(2 * n - 2));
    }
    at(0) = sum;
    for (std::size_t i = 1; i < n; ++i) at(i) += z * at(i - 1);

    // anticausal init
    at(n - 1) = (z / (z * z - 1.0)) * (z * at(n - 2) + at(n - 1));
    for (std::size_t i = n - 1; i-- > 0;) at(i) = z * (at(i + 1) - at(i));
}

void bspline_weights(double t, double w[4]) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    w[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
    w[1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0;
    w[2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0;
    w[3] = t3 / 6.0;
}

// Mirror extension consistent with the prefilter boundary handling.
int mirror_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

} // namespace

Volume3D resample(const Volume3D& vol, const std::array<double, 3>& target_spacing,
                  ResampleMethod method) {
    vol.validate();
    for (double s : target_spacing)
        if (!(s > 0.0) || !std::isfinite(s)) throw InputError("target spacing must be positive");

    Volume3D out;
    out.spacing = target_spacing;
    std::array<double, 3> scale{}; // output index -> input index factor
    for (int i = 0; i < 3; ++i) {
        out.dims[i] = std::max(
            1, static_cast<int>(std::llround(vol.dims[i] * vol.spacing[i] / target_spacing[i])));
        scale[i] = target_spacing[i] / vol.spacing[i];
    }
    out.voxels.resize(out.voxel_count());

    const int nx = vol.dims[0], ny = vol.dims[1], nz = vol.dims[2];

    // For the spline method, work on prefiltered coefficients.
    std::vector<double> coeff;
    if (method == ResampleMethod::cubic_bspline) {
        coeff.assign(vol.voxels.begin(), vol.voxels.end());
        const std::size_t sx = 1, sy = static_cast<std::size_t>(nx),
                          sz = static_cast<std::size_t>(nx) * ny;
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y)
                bspline_prefilter_line(&coeff[sy * y + sz * z], static_cast<std::size_t>(nx), sx);
        for (int z = 0; z < nz; ++z)
            for (int x = 0; x < nx; ++x)
                bspline_prefilter_line(&coeff[x + sz * z], static_cast<std::size_t>(ny), sy);
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                bspline_prefilter_line(&coeff[x + sy * y], static_cast<std::size_t>(nz), sz);
    }

    auto src_coord = [&](int out_idx, int axis) {
        // voxel-center convention; clamp out-of-support coordinates
        double c = (out_idx + 0.5) * scale[axis] - 0.5;
        return std::clamp(c, 0.0, static_cast<double>(vol.dims[axis] - 1));
    };

    std::size_t k = 0;
    for (int z = 0; z < out.dims[2]; ++z) {
        const double cz = src_coord(z, 2);
        for (int y = 0; y < out.dims[1]; ++y) {
            const double cy = src_coord(y, 1);
            for (int x = 0; x < out.dims[0]; ++x) {
                const double cx = src_coord(x, 0);
                double value = 0.0;
                switch (method) {
                    case ResampleMethod::nearest: {
                        const int ix = std::clamp(static_cast<int>(std::floor(cx + 0.5)), 0, nx - 1);
                        const int iy = std::clamp(static_cast<int>(std::floor(cy + 0.5)), 0, ny - 1);
                        const int iz = std::clamp(static_cast<int>(std::floor(cz + 0.5)), 0, nz - 1);
                        value = vol.at(ix, iy, iz);
                        break;
                    }
                    case ResampleMethod::trilinear: {
                        const int x0 = std::min(static_cast<int>(std::floor(cx)), nx - 1);
                        const int y0 = std::min(static_cast<int>(std::floor(cy)), ny - 1);
                        const int z0 = std::min(static_cast<int>(std::floor(cz)), nz - 1);
                        const double fx = cx - x0, fy = cy - y0, fz = cz - z0;
                        const int x1 = std::min(x0 + 1, nx - 1);
                        const int y1 = std::min(y0 + 1, ny - 1);
                        const int z1 = std::min(z0 + 1, nz - 1);
                        const double c00 = vol.at(x0, y0, z0) + fx * (vol.at(x1, y0, z0) - vol.at(x0, y0, z0));
                        const double c10 = vol.at(x0, y1, z0) + fx * (vol.at(x1, y1, z0) - vol.at(x0, y1, z0));
                        const double c01 = vol.at(x0, y0, z1) + fx * (vol.at(x1, y0, z1) - vol.at(x0, y0, z1));
                        const double c11 = vol.at(x0, y1, z1) + fx * (vol.at(x1, y1, z1) - vol.at(x0, y1, z1));
                        const double c0 = c00 + fy * (c10 - c00);
                        const double c1 = c01 + fy * (c11 - c01);
                        value = c0 + fz * (c1 - c0);
                        break;
                    }
                    case ResampleMethod::cubic_bspline: {
                        const int x0 = static_cast<int>(std::floor(cx));
                        const int y0 = static_cast<int>(std::floor(cy));
                        const int z0 = static_cast<int>(std::floor(cz));
                        double wx[4], wy[4], wz[4];
                        bspline_weights(cx - x0, wx);
                        bspline_weights(cy - y0, wy);
                        bspline_weights(cz - z0, wz);
                        for (int a = 0; a < 4; ++a) {
                            const int iz = mirror_index(z0 - 1 + a, nz);
                            for (int b = 0; b < 4; ++b) {
                                const int iy = mirror_index(y0 - 1 + b, ny);
                                const double w = wz[a] * wy[b];
                                for (int c = 0; c < 4; ++c) {
                                    const int ix = mirror_index(x0 - 1 + c, nx);
                                    value += w * wx[c] *
                                             coeff[ix + static_cast<std::size_t>(nx) *
                                                            (iy + static_cast<std::size_t>(ny) * iz)];
                                }
                            }
                        }
                        break;
                    }
                }
                out.voxels[k++] = static_cast<float>(std::max(0.0, value));
            }
        }
    }
    return out;
}

} // namespace pagc
