#include "pagc/error.hpp"
#include "pagc/radiomics.hpp"
#include "pagc/rng.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

using namespace pagc;

namespace {

double get(const NamedFeatures& features, const std::string& name) {
    for (const auto& [n, v] : features)
        if (n == name) return v;
    FAIL("missing feature ", name);
    return 0.0;
}

RoiPatch row_patch(const std::vector<double>& values) {
    RoiPatch p;
    p.dims = {static_cast<int>(values.size()), 1, 1};
    p.voxels = values;
    return p;
}

LevelGrid row_grid(const std::vector<int>& levels, int n_levels) {
    LevelGrid g;
    g.dims = {static_cast<int>(levels.size()), 1, 1};
    g.n_levels = n_levels;
    g.levels = levels;
    return g;
}

} // namespace

TEST_CASE("intensity filters") {
    SUBCASE("square of a constant") {
        RoiPatch p;
        p.dims = {2, 2, 2};
        p.voxels.assign(8, 0.5);
        const RoiPatch out = apply_filter(p, FilterKind::square);
        for (double v : out.voxels) CHECK(v == 0.25);
    }
    SUBCASE("gradient of an x ramp is 1 in the interior") {
        RoiPatch p;
        p.dims = {5, 3, 3};
        p.voxels.resize(p.voxel_count());
        for (int z = 0; z < 3; ++z)
            for (int y = 0; y < 3; ++y)
                for (int x = 0; x < 5; ++x) p.at(x, y, z) = static_cast<double>(x);
        const RoiPatch out = apply_filter(p, FilterKind::gradient);
        for (int z = 1; z < 2; ++z)
            for (int y = 1; y < 2; ++y)
                for (int x = 1; x < 4; ++x)
                    CHECK(out.at(x, y, z) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("square root and logarithm are min-shifted") {
        const RoiPatch p = row_patch({-3.0, 1.0});
        const RoiPatch sq = apply_filter(p, FilterKind::square_root);
        CHECK(sq.voxels[0] == 0.0);
        CHECK(sq.voxels[1] == doctest::Approx(2.0).epsilon(1e-12));
        const RoiPatch lg = apply_filter(p, FilterKind::logarithm);
        CHECK(lg.voxels[0] == 0.0);
        CHECK(lg.voxels[1] == doctest::Approx(std::log(5.0)).epsilon(1e-12));
    }
    SUBCASE("exponential rescales to [0,1] first") {
        const RoiPatch p = row_patch({2.0, 6.0});
        const RoiPatch ex = apply_filter(p, FilterKind::exponential);
        CHECK(ex.voxels[0] == 1.0);
        CHECK(ex.voxels[1] == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    }
    SUBCASE("errors") {
        const RoiPatch p = row_patch({1.0, 2.0});
        CHECK_THROWS_AS(apply_filter(p, FilterKind::gradient), InputError); // dy = 1
        RoiPatch cube;
        cube.dims = {2, 2, 2};
        cube.voxels.assign(8, 1.0);
        CHECK_THROWS_AS(apply_filter(cube, FilterKind::log_of_gaussian, 0.0), InputError);
    }
}

TEST_CASE("LoG of a constant volume is zero") {
    RoiPatch p;
    p.dims = {4, 4, 4};
    p.voxels.assign(64, 3.0);
    const RoiPatch out = apply_filter(p, FilterKind::log_of_gaussian, 1.0);
    for (double v : out.voxels) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("Haar wavelet of a constant volume") {
    RoiPatch p;
    p.dims = {4, 4, 4};
    p.voxels.assign(64, 0.5);
    const auto bands = haar_wavelet(p);
    REQUIRE(bands.size() == 8);
    CHECK(bands[0].dims == std::array<int, 3>{2, 2, 2});
    const double expected = 0.5 * std::pow(2.0, 1.5);
    for (double v : bands[0].voxels) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
    for (std::size_t b = 1; b < 8; ++b)
        for (double v : bands[b].voxels) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("Haar wavelet conserves energy on even dims") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const RoiPatch p = test_util::random_patch(4, 6, 8, 900 + seed);
        const auto bands = haar_wavelet(p);
        double original = 0.0;
        for (double v : p.voxels) original += v * v;
        double transformed = 0.0;
        for (const auto& band : bands)
            for (double v : band.voxels) transformed += v * v;
        REQUIRE(std::abs(original - transformed) <= 1e-9 * std::max(1.0, original));
    }
}

TEST_CASE("Haar subband letters follow the x,y,z axis order") {
    // intensity varies along z only, so every subband with a high-pass
    // letter in x or y is zero and LLH carries the z detail
    RoiPatch p;
    p.dims = {4, 4, 4};
    p.voxels.resize(p.voxel_count());
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) p.at(x, y, z) = static_cast<double>(z * z);
    const auto bands = haar_wavelet(p);
    auto band_energy = [&](int i) {
        double e = 0.0;
        for (double v : bands[static_cast<std::size_t>(i)].voxels) e += v * v;
        return e;
    };
    // order: LLL, LLH, LHL, LHH, HLL, HLH, HHL, HHH
    CHECK(band_energy(1) > 1e-6);  // LLH
    CHECK(band_energy(2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-18)); // LHL
    CHECK(band_energy(4) == doctest::Approx(0.0).scale(1.0).epsilon(1e-18)); // HLL
    CHECK(band_energy(7) == doctest::Approx(0.0).scale(1.0).epsilon(1e-18)); // HHH
}

TEST_CASE("Haar subband dims on odd axes") {
    const RoiPatch p = test_util::random_patch(5, 4, 3, 12);
    const auto bands = haar_wavelet(p);
    for (const auto& band : bands) CHECK(band.dims == std::array<int, 3>{3, 2, 2});
}

TEST_CASE("discretize") {
    CHECK(discretize(row_patch({0.0, 0.5, 1.0}), 2).levels == std::vector<int>{1, 1, 2});
    CHECK(discretize(row_patch({3.0, 3.0, 3.0}), 8).levels == std::vector<int>{1, 1, 1});
    CHECK_THROWS_AS(discretize(row_patch({0.0, 1.0}), 1), InputError);
}

TEST_CASE("discretize histogram matches a brute-force binning oracle") {
    const RoiPatch p = test_util::random_patch(4, 4, 4, 33);
    const int bins = 32;
    const LevelGrid grid = discretize(p, bins);
    const double mn = *std::min_element(p.voxels.begin(), p.voxels.end());
    const double mx = *std::max_element(p.voxels.begin(), p.voxels.end());
    std::map<int, int> expected;
    for (double v : p.voxels) {
        int level = static_cast<int>(std::ceil((v - mn) / (mx - mn) * bins));
        expected[std::clamp(level, 1, bins)] += 1;
    }
    std::map<int, int> actual;
    for (int l : grid.levels) ++actual[l];
    CHECK(actual == expected);
    CHECK(*std::max_element(grid.levels.begin(), grid.levels.end()) == bins);
}

TEST_CASE("first order features on [1,2,3,4]") {
    const auto f = first_order_features(row_patch({1, 2, 3, 4}));
    CHECK(get(f, "Mean") == 2.5);
    CHECK(get(f, "Median") == 2.5);
    CHECK(get(f, "MeanAbsoluteDeviation") == 1.0);
    CHECK(get(f, "Energy") == 30.0);
    CHECK(get(f, "Range") == 3.0);
    CHECK(get(f, "Variance") == 1.25);
    CHECK(get(f, "Minimum") == 1.0);
    CHECK(get(f, "Maximum") == 4.0);
    CHECK(get(f, "RootMeanSquared") == doctest::Approx(std::sqrt(7.5)).epsilon(1e-12));
    CHECK(get(f, "Skewness") == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(get(f, "Kurtosis") == doctest::Approx(1.64).epsilon(1e-12));
    CHECK(get(f, "Percentile10") == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(get(f, "Percentile90") == doctest::Approx(3.7).epsilon(1e-12));
    CHECK(get(f, "InterquartileRange") == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(get(f, "RobustMeanAbsoluteDeviation") == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("first order features on a constant patch") {
    RoiPatch p;
    p.dims = {2, 2, 2};
    p.voxels.assign(8, 4.2);
    const auto f = first_order_features(p);
    CHECK(get(f, "Variance") == 0.0);
    CHECK(get(f, "Entropy") == 0.0);
    CHECK(get(f, "Range") == 0.0);
    CHECK(get(f, "Skewness") == 0.0);
}

namespace {

// Straightforward second implementation used as the dual-route oracle.
std::map<std::string, double> first_order_oracle(const std::vector<double>& v) {
    std::map<std::string, double> out;
    const double n = static_cast<double>(v.size());
    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end());

    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / n;
    out["Mean"] = mean;
    out["Minimum"] = sorted.front();
    out["Maximum"] = sorted.back();
    out["Range"] = sorted.back() - sorted.front();
    out["Median"] = v.size() % 2 ? sorted[v.size() / 2]
                                 : (sorted[v.size() / 2 - 1] + sorted[v.size() / 2]) / 2.0;

    double var = 0, m3 = 0, m4 = 0, mad = 0, energy = 0;
    for (double x : v) {
        var += std::pow(x - mean, 2);
        m3 += std::pow(x - mean, 3);
        m4 += std::pow(x - mean, 4);
        mad += std::abs(x - mean);
        energy += x * x;
    }
    var /= n;
    m3 /= n;
    m4 /= n;
    out["Variance"] = var;
    out["Skewness"] = var > 0 ? m3 / std::pow(var, 1.5) : 0.0;
    out["Kurtosis"] = var > 0 ? m4 / (var * var) : 0.0;
    out["Energy"] = energy;
    out["MeanAbsoluteDeviation"] = mad / n;
    out["RootMeanSquared"] = std::sqrt(energy / n);

    auto pct = [&](double p) {
        const double rank = p / 100.0 * (n - 1.0);
        const std::size_t lo = static_cast<std::size_t>(rank);
        if (lo + 1 >= sorted.size()) return sorted.back();
        return sorted[lo] + (rank - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
    };
    out["Percentile10"] = pct(10);
    out["Percentile90"] = pct(90);
    out["InterquartileRange"] = pct(75) - pct(25);

    std::vector<double> trimmed;
    for (double x : v)
        if (x >= out["Percentile10"] && x <= out["Percentile90"]) trimmed.push_back(x);
    double tsum = 0.0;
    for (double x : trimmed) tsum += x;
    const double tmean = tsum / static_cast<double>(trimmed.size());
    double tmad = 0.0;
    for (double x : trimmed) tmad += std::abs(x - tmean);
    out["RobustMeanAbsoluteDeviation"] = tmad / static_cast<double>(trimmed.size());

    std::map<int, int> hist;
    const double mn = sorted.front(), mx = sorted.back();
    for (double x : v) {
        int b = static_cast<int>((x - mn) / (mx - mn) * 32.0);
        if (b >= 32) b = 31;
        ++hist[b];
    }
    double entropy = 0.0;
    for (const auto& [_, c] : hist) {
        const double p = c / n;
        entropy -= p * std::log(p);
    }
    out["Entropy"] = entropy;
    return out;
}

} // namespace

TEST_CASE("first order features agree with an independent re-implementation") {
    const RoiPatch p = test_util::random_patch(4, 4, 4, 123);
    const auto f = first_order_features(p);
    const auto expected = first_order_oracle(p.voxels);
    REQUIRE(f.size() == expected.size());
    for (const auto& [name, value] : f)
        REQUIRE(value == doctest::Approx(expected.at(name)).epsilon(1e-9).scale(1.0));
}

TEST_CASE("glcm hand table on [1,1,2,2] along +x") {
    const LevelGrid g = row_grid({1, 1, 2, 2}, 2);
    const auto f = glcm_features(g, {{1, 0, 0}}, 1);
    CHECK(get(f, "Contrast") == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(get(f, "JointEnergy") == doctest::Approx(10.0 / 36.0).epsilon(1e-12));
    CHECK(get(f, "MaximumProbability") == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(get(f, "InverseDifferenceMoment") == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(get(f, "Correlation") == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(get(f, "ClusterShade") == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(get(f, "ClusterProminence") == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("glcm degenerate grids") {
    LevelGrid constant;
    constant.dims = {3, 3, 3};
    constant.n_levels = 4;
    constant.levels.assign(27, 2);
    const auto f = glcm_features(constant);
    CHECK(get(f, "MaximumProbability") == 1.0);
    CHECK(get(f, "Contrast") == 0.0);
    CHECK(get(f, "JointEntropy") == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    LevelGrid tiny;
    tiny.dims = {1, 1, 1};
    tiny.n_levels = 2;
    tiny.levels = {1};
    CHECK_THROWS_AS(glcm_features(tiny), AnalysisError);
}

TEST_CASE("checkerboard contrast is maximal along axis directions") {
    LevelGrid board;
    board.dims = {4, 4, 4};
    board.n_levels = 2;
    board.levels.resize(64);
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                board.levels[static_cast<std::size_t>(x + 4 * (y + 4 * z))] =
                    (x + y + z) % 2 ? 2 : 1;
    const auto f = glcm_features(
        board, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, 1);
    CHECK(get(f, "Contrast") == doctest::Approx(1.0).epsilon(1e-12)); // (n_levels - 1)^2
}

TEST_CASE("glrlm hand table on [1,1,2,2,2] along +x") {
    const LevelGrid g = row_grid({1, 1, 2, 2, 2}, 2);
    const auto f = glrlm_features(g, {{1, 0, 0}});
    CHECK(get(f, "ShortRunEmphasis") == doctest::Approx((0.25 + 1.0 / 9.0) / 2.0).epsilon(1e-12));
    CHECK(get(f, "ShortRunLowGrayLevelEmphasis") ==
          doctest::Approx((1.0 / 4.0 + 1.0 / 36.0) / 2.0).epsilon(1e-12));
    CHECK(get(f, "LongRunEmphasis") == doctest::Approx((4.0 + 9.0) / 2.0).epsilon(1e-12));
    CHECK(get(f, "GrayLevelNonUniformity") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(get(f, "RunLengthNonUniformity") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(get(f, "RunPercentage") == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("glrlm degenerate rows") {
    const LevelGrid constant = row_grid({3, 3, 3, 3, 3, 3}, 4);
    const auto f = glrlm_features(constant, {{1, 0, 0}});
    CHECK(get(f, "LongRunEmphasis") == doctest::Approx(36.0).epsilon(1e-12)); // L^2

    const LevelGrid alternating = row_grid({1, 2, 1, 2, 1}, 2);
    const auto a = glrlm_features(alternating, {{1, 0, 0}});
    CHECK(get(a, "RunPercentage") == 1.0);
}

TEST_CASE("texture features are invariant under axis relabeling") {
    // transpose x and y; the full 13-direction set maps onto itself
    const RoiPatch p = test_util::random_patch(4, 4, 4, 321);
    RoiPatch t = p;
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) t.at(y, x, z) = p.at(x, y, z);

    const LevelGrid gp = discretize(p, 8);
    const LevelGrid gt = discretize(t, 8);
    const auto fp = glcm_features(gp);
    const auto ft = glcm_features(gt);
    for (std::size_t i = 0; i < fp.size(); ++i)
        CHECK(fp[i].second == doctest::Approx(ft[i].second).epsilon(1e-9).scale(1.0));
    const auto rp = glrlm_features(gp);
    const auto rt = glrlm_features(gt);
    for (std::size_t i = 0; i < rp.size(); ++i)
        CHECK(rp[i].second == doctest::Approx(rt[i].second).epsilon(1e-9).scale(1.0));
}

TEST_CASE("glcm probabilities per direction sum to one") {
    // indirectly: a two-level grid where every feature stays finite and
    // JointEnergy <= MaximumProbability bound holds
    const RoiPatch p = test_util::random_patch(3, 3, 3, 55);
    const LevelGrid g = discretize(p, 4);
    const auto f = glcm_features(g);
    CHECK(get(f, "JointEnergy") <= get(f, "MaximumProbability") + 1e-12);
    CHECK(get(f, "MaximumProbability") <= 1.0);
}

TEST_CASE("shape features") {
    const auto cube = shape_features({2, 2, 2}, {1, 1, 1});
    CHECK(get(cube, "VoxelVolume") == 8.0);
    CHECK(get(cube, "SurfaceArea") == 24.0);
    CHECK(get(cube, "SurfaceVolumeRatio") == 3.0);

    const auto single = shape_features({1, 1, 1}, {1, 1, 1});
    CHECK(get(single, "VoxelVolume") == 1.0);
    CHECK(get(single, "SurfaceArea") == 6.0);

    // coordinate-PCA oracle for a 4x2x2 block at unit spacing
    const auto stick = shape_features({4, 2, 2}, {1, 1, 1});
    const double l1 = (16.0 - 1.0) / 12.0, l2 = (4.0 - 1.0) / 12.0;
    CHECK(get(stick, "Elongation") == doctest::Approx(std::sqrt(l2 / l1)).epsilon(1e-12));
    CHECK(get(stick, "Flatness") == doctest::Approx(std::sqrt(l2 / l1)).epsilon(1e-12));
}

TEST_CASE("shape PCA matches an explicit coordinate covariance oracle") {
    const std::array<int, 3> dims{4, 2, 2};
    const std::array<double, 3> spacing{1.5, 0.5, 2.0};
    // explicit covariance eigenvalues of the voxel-center cloud
    std::vector<std::array<double, 3>> coords;
    for (int z = 0; z < dims[2]; ++z)
        for (int y = 0; y < dims[1]; ++y)
            for (int x = 0; x < dims[0]; ++x)
                coords.push_back({x * spacing[0], y * spacing[1], z * spacing[2]});
    std::array<double, 3> mean{};
    for (const auto& c : coords)
        for (int a = 0; a < 3; ++a) mean[a] += c[a];
    for (int a = 0; a < 3; ++a) mean[a] /= static_cast<double>(coords.size());
    std::array<double, 3> var{};
    for (const auto& c : coords)
        for (int a = 0; a < 3; ++a) var[a] += (c[a] - mean[a]) * (c[a] - mean[a]);
    for (int a = 0; a < 3; ++a) var[a] /= static_cast<double>(coords.size());
    std::sort(var.begin(), var.end(), std::greater<>());

    const auto f = shape_features(dims, spacing);
    CHECK(get(f, "Elongation") == doctest::Approx(std::sqrt(var[1] / var[0])).epsilon(1e-12));
    CHECK(get(f, "Flatness") == doctest::Approx(std::sqrt(var[2] / var[0])).epsilon(1e-12));
}

TEST_CASE("extract_all produces a deterministic uniquely named finite row") {
    RoiPatch p = test_util::random_patch(6, 6, 6, 2718);
    p.subject_id = "s01";
    p.label = 1;
    const RadiomicsConfig config;
    const FeatureRow row = extract_all(p, config);

    CHECK(row.subject_id == "s01");
    CHECK(row.label == 1);
    CHECK(static_cast<int>(row.features.size()) == config.feature_count());

    std::set<std::string> names;
    for (const auto& [name, value] : row.features) {
        CHECK(std::isfinite(value));
        names.insert(name);
    }
    CHECK(names.size() == row.features.size());

    const FeatureRow again = extract_all(p, config);
    REQUIRE(again.features.size() == row.features.size());
    for (std::size_t i = 0; i < row.features.size(); ++i) {
        CHECK(again.features[i].first == row.features[i].first);
        CHECK(again.features[i].second == row.features[i].second);
    }
}

TEST_CASE("extract_all documented width formula") {
    RadiomicsConfig config; // 7 non-wavelet images + 8 subbands
    CHECK(config.image_count() == 15);
    CHECK(config.feature_count() == 15 * 30 + 5);

    RadiomicsConfig narrow;
    narrow.filters = {FilterKind::original, FilterKind::wavelet};
    narrow.log_sigmas = {};
    CHECK(narrow.image_count() == 9);
    CHECK(narrow.feature_count() == 9 * 30 + 5);
}

TEST_CASE("extract_all on a constant patch uses the documented degenerate values") {
    RoiPatch p;
    p.dims = {4, 4, 4};
    p.voxels.assign(64, 2.0);
    p.subject_id = "flat";
    RadiomicsConfig config;
    const FeatureRow row = extract_all(p, config);
    auto value = [&](const std::string& name) {
        for (const auto& [n, v] : row.features)
            if (n == name) return v;
        FAIL("missing ", name);
        return 0.0;
    };
    CHECK(value("original-firstorder-Entropy") == 0.0);
    CHECK(value("original-firstorder-Variance") == 0.0);
    CHECK(value("original-glcm-MaximumProbability") == 1.0);
    CHECK(value("original-shape-VoxelVolume") == 64.0);
}

TEST_CASE("feature names use the filter-family-Feature format") {
    RoiPatch p = test_util::random_patch(4, 4, 4, 5);
    RadiomicsConfig config;
    const FeatureRow row = extract_all(p, config);
    std::set<std::string> names;
    for (const auto& [n, _] : row.features) names.insert(n);
    CHECK(names.count("original-firstorder-Mean") == 1);
    CHECK(names.count("squareRoot-glcm-Contrast") == 1);
    CHECK(names.count("wavelet-HHL-glrlm-ShortRunLowGrayLevelEmphasis") == 1);
    CHECK(names.count("log-sigma-1-firstorder-Mean") == 1);
    CHECK(names.count("original-shape-VoxelVolume") == 1);
}
