#include "pagc/radiomics.hpp"

#include "pagc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pagc {

const char* const kWaveletSubbands[8] = {"LLL", "LLH", "LHL", "LHH",
                                         "HLL", "HLH", "HHL", "HHH"};

const char* filter_kind_name(FilterKind k) {
    switch (k) {
        case FilterKind::original: return "original";
        case FilterKind::exponential: return "exponential";
        case FilterKind::logarithm: return "logarithm";
        case FilterKind::square: return "square";
        case FilterKind::square_root: return "squareRoot";
        case FilterKind::gradient: return "gradient";
        case FilterKind::log_of_gaussian: return "log";
        case FilterKind::wavelet: return "wavelet";
    }
    throw InputError("unknown filter kind");
}

FilterKind filter_kind_from_name(const std::string& name) {
    if (name == "original") return FilterKind::original;
    if (name == "exponential") return FilterKind::exponential;
    if (name == "logarithm") return FilterKind::logarithm;
    if (name == "square") return FilterKind::square;
    if (name == "square_root" || name == "squareRoot") return FilterKind::square_root;
    if (name == "gradient") return FilterKind::gradient;
    if (name == "log_of_gaussian" || name == "log") return FilterKind::log_of_gaussian;
    if (name == "wavelet") return FilterKind::wavelet;
    throw InputError("unknown filter: '" + name + "'");
}

namespace {

double min_value(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }
double max_value(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

void check_nonempty(const RoiPatch& p) {
    if (p.voxels.empty()) throw InputError("empty patch");
}

RoiPatch gradient_magnitude(const RoiPatch& p) {
    for (int d : p.dims)
        if (d < 2) throw InputError("gradient needs every axis dim >= 2");
    RoiPatch out = p;
    auto clamped = [&](int x, int y, int z) {
        x = std::clamp(x, 0, p.dims[0] - 1);
        y = std::clamp(y, 0, p.dims[1] - 1);
        z = std::clamp(z, 0, p.dims[2] - 1);
        return p.at(x, y, z);
    };
    for (int z = 0; z < p.dims[2]; ++z)
        for (int y = 0; y < p.dims[1]; ++y)
            for (int x = 0; x < p.dims[0]; ++x) {
                const double gx = (clamped(x + 1, y, z) - clamped(x - 1, y, z)) / 2.0;
                const double gy = (clamped(x, y + 1, z) - clamped(x, y - 1, z)) / 2.0;
                const double gz = (clamped(x, y, z + 1) - clamped(x, y, z - 1)) / 2.0;
                out.at(x, y, z) = std::sqrt(gx * gx + gy * gy + gz * gz);
            }
    return out;
}

// Separable Gaussian blur with border replication, then 6-neighbor Laplacian.
RoiPatch laplacian_of_gaussian(const RoiPatch& p, double sigma) {
    if (!(sigma > 0.0)) throw InputError("LoG sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
        ksum += kernel[static_cast<std::size_t>(k + radius)];
    }
    for (double& w : kernel) w /= ksum;

    RoiPatch blurred = p;
    RoiPatch tmp = p;
    const auto convolve_axis = [&](const RoiPatch& src, RoiPatch& dst, int axis) {
        for (int z = 0; z < p.dims[2]; ++z)
            for (int y = 0; y < p.dims[1]; ++y)
                for (int x = 0; x < p.dims[0]; ++x) {
                    double acc = 0.0;
                    for (int k = -radius; k <= radius; ++k) {
                        int xx = x, yy = y, zz = z;
                        if (axis == 0) xx = std::clamp(x + k, 0, p.dims[0] - 1);
                        else if (axis == 1) yy = std::clamp(y + k, 0, p.dims[1] - 1);
                        else zz = std::clamp(z + k, 0, p.dims[2] - 1);
                        acc += kernel[static_cast<std::size_t>(k + radius)] * src.at(xx, yy, zz);
                    }
                    dst.at(x, y, z) = acc;
                }
    };
    convolve_axis(p, tmp, 0);
    convolve_axis(tmp, blurred, 1);
    convolve_axis(blurred, tmp, 2);
    blurred = tmp;

    RoiPatch out = p;
    auto b = [&](int x, int y, int z) {
        x = std::clamp(x, 0, p.dims[0] - 1);
        y = std::clamp(y, 0, p.dims[1] - 1);
        z = std::clamp(z, 0, p.dims[2] - 1);
        return blurred.at(x, y, z);
    };
    for (int z = 0; z < p.dims[2]; ++z)
        for (int y = 0; y < p.dims[1]; ++y)
            for (int x = 0; x < p.dims[0]; ++x)
                out.at(x, y, z) = b(x + 1, y, z) + b(x - 1, y, z) + b(x, y + 1, z) +
                                  b(x, y - 1, z) + b(x, y, z + 1) + b(x, y, z - 1) -
                                  6.0 * b(x, y, z);
    return out;
}

} // namespace

RoiPatch apply_filter(const RoiPatch& patch, FilterKind kind, double sigma) {
    check_nonempty(patch);
    switch (kind) {
        case FilterKind::original:
            return patch;
        case FilterKind::square: {
            RoiPatch out = patch;
            for (double& v : out.voxels) v = v * v;
            return out;
        }
        case FilterKind::square_root: {
            RoiPatch out = patch;
            const double mn = min_value(patch.voxels);
            for (double& v : out.voxels) v = std::sqrt(v - mn);
            return out;
        }
        case FilterKind::logarithm: {
            RoiPatch out = patch;
            const double mn = min_value(patch.voxels);
            for (double& v : out.voxels) v = std::log(v - mn + 1.0);
            return out;
        }
        case FilterKind::exponential: {
            RoiPatch out = patch;
            const double mn = min_value(patch.voxels);
            const double mx = max_value(patch.voxels);
            const double range = mx - mn;
            for (double& v : out.voxels) v = std::exp(range > 0.0 ? (v - mn) / range : 0.0);
            return out;
        }
        case FilterKind::gradient:
            return gradient_magnitude(patch);
        case FilterKind::log_of_gaussian:
            return laplacian_of_gaussian(patch, sigma);
        case FilterKind::wavelet:
            throw InputError("wavelet produces 8 subbands; call haar_wavelet");
    }
    throw InputError("unknown filter kind");
}

namespace {

// One Haar step along an axis: splits src into low- and high-pass halves of
// ceil(d/2) samples (edge replication on odd lengths). Orthonormal pairs
// (a+b)/sqrt2, (a-b)/sqrt2.
void haar_axis(const RoiPatch& src, int axis, RoiPatch& lo, RoiPatch& hi) {
    const double inv_sqrt2 = 0.70710678118654752440;
    std::array<int, 3> out_dims = src.dims;
    out_dims[axis] = (src.dims[axis] + 1) / 2;
    lo.dims = hi.dims = out_dims;
    lo.spacing = hi.spacing = src.spacing;
    lo.subject_id = hi.subject_id = src.subject_id;
    lo.region = hi.region = src.region;
    lo.label = hi.label = src.label;
    lo.voxels.assign(lo.voxel_count(), 0.0);
    hi.voxels.assign(hi.voxel_count(), 0.0);

    auto sample = [&](int x, int y, int z, int offset) {
        int idx[3] = {x, y, z};
        idx[axis] = std::min(2 * idx[axis] + offset, src.dims[axis] - 1); // edge replication
        return src.at(idx[0], idx[1], idx[2]);
    };
    for (int z = 0; z < out_dims[2]; ++z)
        for (int y = 0; y < out_dims[1]; ++y)
            for (int x = 0; x < out_dims[0]; ++x) {
                const double a = sample(x, y, z, 0);
                const double b = sample(x, y, z, 1);
                lo.at(x, y, z) = (a + b) * inv_sqrt2;
                hi.at(x, y, z) = (a - b) * inv_sqrt2;
            }
}

} // namespace

std::vector<RoiPatch> haar_wavelet(const RoiPatch& patch) {
    check_nonempty(patch);
    for (int d : patch.dims)
        if (d < 2) throw InputError("wavelet needs every axis dim >= 2");

    // Split along x, then y, then z. Splitting x first makes its letter the
    // most significant "bit" of the band index, which is exactly the
    // kWaveletSubbands order LLL, LLH, ..., HHH.
    std::vector<RoiPatch> bands{patch};
    for (int axis = 0; axis < 3; ++axis) {
        std::vector<RoiPatch> next;
        next.reserve(bands.size() * 2);
        for (const auto& b : bands) {
            RoiPatch lo, hi;
            haar_axis(b, axis, lo, hi);
            next.push_back(std::move(lo));
            next.push_back(std::move(hi));
        }
        bands = std::move(next);
    }
    return bands;
}

LevelGrid discretize(const RoiPatch& patch, int n_bins) {
    check_nonempty(patch);
    if (n_bins < 2) throw InputError("discretize: n_bins must be >= 2");
    LevelGrid grid;
    grid.dims = patch.dims;
    grid.n_levels = n_bins;
    grid.levels.resize(patch.voxels.size());
    const double mn = min_value(patch.voxels);
    const double mx = max_value(patch.voxels);
    if (mx == mn) {
        std::fill(grid.levels.begin(), grid.levels.end(), 1);
        return grid;
    }
    // right-closed bins: a value on an interior edge belongs to the lower bin,
    // the minimum maps to level 1 and the maximum to n_bins
    const double scale = static_cast<double>(n_bins) / (mx - mn);
    for (std::size_t i = 0; i < patch.voxels.size(); ++i) {
        int level = static_cast<int>(std::ceil((patch.voxels[i] - mn) * scale));
        grid.levels[i] = std::clamp(level, 1, n_bins);
    }
    return grid;
}

const std::vector<std::array<int, 3>>& texture_directions() {
    static const std::vector<std::array<int, 3>> dirs = {
        {1, 0, 0},  {0, 1, 0},  {0, 0, 1},  {1, 1, 0},   {1, -1, 0},
        {1, 0, 1},  {1, 0, -1}, {0, 1, 1},  {0, 1, -1},  {1, 1, 1},
        {1, 1, -1}, {1, -1, 1}, {1, -1, -1}};
    return dirs;
}

namespace {

double percentile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double rank = p / 100.0 * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

} // namespace

NamedFeatures first_order_features(const RoiPatch& patch) {
    check_nonempty(patch);
    const auto& v = patch.voxels;
    const double n = static_cast<double>(v.size());

    double mean = 0.0, energy = 0.0;
    for (double x : v) {
        mean += x;
        energy += x * x;
    }
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
    for (double x : v) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;
    const double skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    const double kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;

    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end());
    const double mn = sorted.front(), mx = sorted.back();
    const double median = v.size() % 2 == 1
                              ? sorted[v.size() / 2]
                              : 0.5 * (sorted[v.size() / 2 - 1] + sorted[v.size() / 2]);
    const double p10 = percentile_sorted(sorted, 10.0);
    const double p90 = percentile_sorted(sorted, 90.0);
    const double iqr = percentile_sorted(sorted, 75.0) - percentile_sorted(sorted, 25.0);

    // robust MAD: deviation from the mean of the values inside [P10, P90]
    double rsum = 0.0;
    std::size_t rcount = 0;
    for (double x : v)
        if (x >= p10 && x <= p90) {
            rsum += x;
            ++rcount;
        }
    double rmad = 0.0;
    if (rcount > 0) {
        const double rmean = rsum / static_cast<double>(rcount);
        for (double x : v)
            if (x >= p10 && x <= p90) rmad += std::abs(x - rmean);
        rmad /= static_cast<double>(rcount);
    }

    // entropy of the 32-bin equal-width histogram, natural log
    double entropy = 0.0;
    if (mx > mn) {
        constexpr int bins = 32;
        std::array<int, bins> hist{};
        const double scale = bins / (mx - mn);
        for (double x : v) {
            int b = static_cast<int>((x - mn) * scale);
            if (b >= bins) b = bins - 1;
            ++hist[static_cast<std::size_t>(b)];
        }
        for (int c : hist)
            if (c > 0) {
                const double p = c / n;
                entropy -= p * std::log(p);
            }
    }

    return {
        {"Mean", mean},
        {"Median", median},
        {"Variance", m2},
        {"Skewness", skewness},
        {"Kurtosis", kurtosis},
        {"Energy", energy},
        {"Entropy", entropy},
        {"Minimum", mn},
        {"Maximum", mx},
        {"Range", mx - mn},
        {"MeanAbsoluteDeviation", mad},
        {"RobustMeanAbsoluteDeviation", rmad},
        {"RootMeanSquared", std::sqrt(energy / n)},
        {"Percentile10", p10},
        {"Percentile90", p90},
        {"InterquartileRange", iqr},
    };
}

NamedFeatures glcm_features(const LevelGrid& grid, int distance) {
    return glcm_features(grid, texture_directions(), distance);
}

NamedFeatures glcm_features(const LevelGrid& grid,
                            const std::vector<std::array<int, 3>>& directions, int distance) {
    if (grid.n_levels < 2) throw InputError("glcm: n_levels must be >= 2");
    if (distance < 1) throw InputError("glcm: distance must be >= 1");
    const int L = grid.n_levels;
    const std::size_t cells = static_cast<std::size_t>(L) * L;

    double energy = 0, contrast = 0, correlation = 0, entropy = 0, idm = 0;
    double shade = 0, prominence = 0, maxprob = 0;
    int used = 0;

    std::vector<double> p(cells);
    for (const auto& dir : directions) {
        const int ox = dir[0] * distance, oy = dir[1] * distance, oz = dir[2] * distance;
        std::fill(p.begin(), p.end(), 0.0);
        long long total = 0;
        for (int z = 0; z < grid.dims[2]; ++z) {
            const int z2 = z + oz;
            if (z2 < 0 || z2 >= grid.dims[2]) continue;
            for (int y = 0; y < grid.dims[1]; ++y) {
                const int y2 = y + oy;
                if (y2 < 0 || y2 >= grid.dims[1]) continue;
                for (int x = 0; x < grid.dims[0]; ++x) {
                    const int x2 = x + ox;
                    if (x2 < 0 || x2 >= grid.dims[0]) continue;
                    const int a = grid.at(x, y, z) - 1;
                    const int b = grid.at(x2, y2, z2) - 1;
                    p[static_cast<std::size_t>(a) * L + b] += 1.0; // symmetric accumulation
                    p[static_cast<std::size_t>(b) * L + a] += 1.0;
                    total += 2;
                }
            }
        }
        if (total == 0) continue; // grid too small for this offset
        ++used;
        for (double& x : p) x /= static_cast<double>(total);

        double mu = 0.0;
        std::vector<double> marginal(static_cast<std::size_t>(L), 0.0);
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j) marginal[static_cast<std::size_t>(i)] += p[static_cast<std::size_t>(i) * L + j];
        for (int i = 0; i < L; ++i) mu += (i + 1) * marginal[static_cast<std::size_t>(i)];
        double var = 0.0;
        for (int i = 0; i < L; ++i) {
            const double d = (i + 1) - mu;
            var += d * d * marginal[static_cast<std::size_t>(i)];
        }

        double d_energy = 0, d_contrast = 0, d_corr_num = 0, d_entropy = 0, d_idm = 0;
        double d_shade = 0, d_prom = 0, d_max = 0;
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j) {
                const double pij = p[static_cast<std::size_t>(i) * L + j];
                if (pij == 0.0) continue;
                const double di = (i + 1) - mu, dj = (j + 1) - mu;
                const double diff = static_cast<double>(i - j);
                d_energy += pij * pij;
                d_contrast += diff * diff * pij;
                d_corr_num += di * dj * pij;
                d_entropy -= pij * std::log(pij);
                d_idm += pij / (1.0 + diff * diff);
                const double s = di + dj;
                d_shade += s * s * s * pij;
                d_prom += s * s * s * s * pij;
                d_max = std::max(d_max, pij);
            }
        energy += d_energy;
        contrast += d_contrast;
        correlation += var > 0.0 ? d_corr_num / var : 1.0; // constant grid: perfectly correlated
        entropy += d_entropy;
        idm += d_idm;
        shade += d_shade;
        prominence += d_prom;
        maxprob += d_max;
    }
    if (used == 0) throw AnalysisError("glcm: grid too small for every direction");

    const double inv = 1.0 / static_cast<double>(used);
    return {
        {"JointEnergy", energy * inv},
        {"Contrast", contrast * inv},
        {"Correlation", correlation * inv},
        {"JointEntropy", entropy * inv},
        {"InverseDifferenceMoment", idm * inv},
        {"ClusterShade", shade * inv},
        {"ClusterProminence", prominence * inv},
        {"MaximumProbability", maxprob * inv},
    };
}

NamedFeatures glrlm_features(const LevelGrid& grid) {
    return glrlm_features(grid, texture_directions());
}

NamedFeatures glrlm_features(const LevelGrid& grid,
                             const std::vector<std::array<int, 3>>& directions) {
    if (grid.n_levels < 2) throw InputError("glrlm: n_levels must be >= 2");
    const std::size_t n_voxels = grid.levels.size();

    double sre = 0, lre = 0, gln = 0, rln = 0, rp = 0, srlgle = 0;
    int used = 0;

    for (const auto& dir : directions) {
        // runs along maximal lines in this direction; a voxel starts a line
        // when stepping backwards leaves the grid
        std::map<std::pair<int, long long>, long long> runs; // (level, length) -> count
        long long n_runs = 0;
        for (int z = 0; z < grid.dims[2]; ++z)
            for (int y = 0; y < grid.dims[1]; ++y)
                for (int x = 0; x < grid.dims[0]; ++x) {
                    const int px = x - dir[0], py = y - dir[1], pz = z - dir[2];
                    const bool line_start = px < 0 || px >= grid.dims[0] || py < 0 ||
                                            py >= grid.dims[1] || pz < 0 || pz >= grid.dims[2];
                    if (!line_start) continue;
                    int cx = x, cy = y, cz = z;
                    int level = grid.at(cx, cy, cz);
                    long long len = 1;
                    while (true) {
                        const int nx2 = cx + dir[0], ny2 = cy + dir[1], nz2 = cz + dir[2];
                        if (nx2 < 0 || nx2 >= grid.dims[0] || ny2 < 0 || ny2 >= grid.dims[1] ||
                            nz2 < 0 || nz2 >= grid.dims[2]) {
                            ++runs[{level, len}];
                            ++n_runs;
                            break;
                        }
                        const int next = grid.at(nx2, ny2, nz2);
                        if (next == level) {
                            ++len;
                        } else {
                            ++runs[{level, len}];
                            ++n_runs;
                            level = next;
                            len = 1;
                        }
                        cx = nx2;
                        cy = ny2;
                        cz = nz2;
                    }
                }
        if (n_runs == 0) continue;
        ++used;

        const double nr = static_cast<double>(n_runs);
        double d_sre = 0, d_lre = 0, d_srlgle = 0;
        std::map<int, double> by_level;
        std::map<long long, double> by_length;
        for (const auto& [key, count] : runs) {
            const auto [level, len] = key;
            const double c = static_cast<double>(count);
            const double l2 = static_cast<double>(len) * static_cast<double>(len);
            const double g2 = static_cast<double>(level) * static_cast<double>(level);
            d_sre += c / l2;
            d_lre += c * l2;
            d_srlgle += c / (g2 * l2);
            by_level[level] += c;
            by_length[len] += c;
        }
        double d_gln = 0, d_rln = 0;
        for (const auto& [_, c] : by_level) d_gln += c * c;
        for (const auto& [_, c] : by_length) d_rln += c * c;

        sre += d_sre / nr;
        lre += d_lre / nr;
        gln += d_gln / nr;
        rln += d_rln / nr;
        rp += nr / static_cast<double>(n_voxels);
        srlgle += d_srlgle / nr;
    }
    if (used == 0) throw AnalysisError("glrlm: grid too small for every direction");

    const double inv = 1.0 / static_cast<double>(used);
    return {
        {"ShortRunEmphasis", sre * inv},
        {"LongRunEmphasis", lre * inv},
        {"GrayLevelNonUniformity", gln * inv},
        {"RunLengthNonUniformity", rln * inv},
        {"RunPercentage", rp * inv},
        {"ShortRunLowGrayLevelEmphasis", srlgle * inv},
    };
}

NamedFeatures shape_features(const std::array<int, 3>& dims, const std::array<double, 3>& spacing) {
    for (int d : dims)
        if (d <= 0) throw InputError("shape: dims must be positive");
    for (double s : spacing)
        if (!(s > 0.0)) throw InputError("shape: spacing must be positive");

    const double dx = dims[0], dy = dims[1], dz = dims[2];
    const double sx = spacing[0], sy = spacing[1], sz = spacing[2];
    const double volume = dx * dy * dz * sx * sy * sz;
    const double surface =
        2.0 * (dy * dz * sy * sz + dx * dz * sx * sz + dx * dy * sx * sy);

    // PCA of voxel-center coordinates: axes are independent, so the
    // covariance is diagonal with variance s^2 (d^2 - 1) / 12 per axis.
    std::array<double, 3> lambda{};
    for (int i = 0; i < 3; ++i) {
        const double d = static_cast<double>(dims[i]);
        lambda[static_cast<std::size_t>(i)] = spacing[static_cast<std::size_t>(i)] *
                                              spacing[static_cast<std::size_t>(i)] *
                                              (d * d - 1.0) / 12.0;
    }
    std::sort(lambda.begin(), lambda.end(), std::greater<>());
    const double elongation = lambda[0] > 0.0 ? std::sqrt(lambda[1] / lambda[0]) : 1.0;
    const double flatness = lambda[0] > 0.0 ? std::sqrt(lambda[2] / lambda[0]) : 1.0;

    return {
        {"VoxelVolume", volume},
        {"SurfaceArea", surface},
        {"SurfaceVolumeRatio", surface / volume},
        {"Elongation", elongation},
        {"Flatness", flatness},
    };
}

int RadiomicsConfig::image_count() const {
    int n = 0;
    for (FilterKind f : filters) {
        if (f == FilterKind::wavelet) n += 8;
        else if (f == FilterKind::log_of_gaussian) n += static_cast<int>(log_sigmas.size());
        else n += 1;
    }
    return n;
}

int RadiomicsConfig::feature_count() const {
    constexpr int per_image = 16 + 8 + 6; // firstorder + glcm + glrlm
    return image_count() * per_image + 5; // + shape
}

namespace {

std::string sigma_tag(double sigma) {
    // log-sigma-1, log-sigma-2.5
    std::string s = std::to_string(sigma);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

void append_image_features(const std::string& tag, const RoiPatch& image, int bins,
                           NamedFeatures& out) {
    for (auto& [name, value] : first_order_features(image))
        out.emplace_back(tag + "-firstorder-" + name, value);
    const LevelGrid grid = discretize(image, bins);
    for (auto& [name, value] : glcm_features(grid))
        out.emplace_back(tag + "-glcm-" + name, value);
    for (auto& [name, value] : glrlm_features(grid))
        out.emplace_back(tag + "-glrlm-" + name, value);
}

} // namespace

FeatureRow extract_all(const RoiPatch& patch, const RadiomicsConfig& config) {
    check_nonempty(patch);
    FeatureRow row;
    row.subject_id = patch.subject_id;
    row.label = patch.label;

    for (FilterKind f : config.filters) {
        switch (f) {
            case FilterKind::wavelet: {
                const auto bands = haar_wavelet(patch);
                for (int i = 0; i < 8; ++i)
                    append_image_features(std::string("wavelet-") + kWaveletSubbands[i],
                                          bands[static_cast<std::size_t>(i)],
                                          config.discretize_bins, row.features);
                break;
            }
            case FilterKind::log_of_gaussian: {
                for (double sigma : config.log_sigmas)
                    append_image_features("log-sigma-" + sigma_tag(sigma),
                                          apply_filter(patch, f, sigma), config.discretize_bins,
                                          row.features);
                break;
            }
            default:
                append_image_features(filter_kind_name(f), apply_filter(patch, f),
                                      config.discretize_bins, row.features);
        }
    }
    for (auto& [name, value] : shape_features(patch.dims, patch.spacing))
        row.features.emplace_back("original-shape-" + name, value);

    for (auto& [name, value] : row.features)
        if (!std::isfinite(value)) throw AnalysisError("non-finite feature: " + name);
    return row;
}

} // namespace pagc
