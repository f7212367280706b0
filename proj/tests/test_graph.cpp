#include "pagc/error.hpp"
#include "pagc/graph.hpp"
#include "pagc/rng.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace pagc;

TEST_CASE("mutual information hand values") {
    const std::vector<double> u{0.1, 0.9};
    CHECK(mutual_information(u, u, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    const std::vector<double> c{0.5, 0.5, 0.5};
    const std::vector<double> v{0.1, 0.6, 0.9};
    CHECK(mutual_information(c, v, 4) == 0.0);

    // joint histogram: cells (0,0)x2, (1,1)x1
    const std::vector<double> a{0.1, 0.2, 0.9};
    const std::vector<double> b{0.2, 0.1, 0.8};
    const double expected = -(2.0 / 3.0) * std::log(2.0 / 3.0) - (1.0 / 3.0) * std::log(1.0 / 3.0);
    CHECK(mutual_information(a, b, 2) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.636514).epsilon(1e-6));
}

TEST_CASE("mutual information input validation") {
    const std::vector<double> u{0.1, 0.9};
    const std::vector<double> w{0.1, 0.9, 0.5};
    CHECK_THROWS_AS(mutual_information(u, w, 2), InputError);
    CHECK_THROWS_AS(mutual_information(u, u, 1), InputError);
    const std::vector<double> bad{0.1, 1.5};
    CHECK_THROWS_AS(mutual_information(u, bad, 2), InputError);
    const std::vector<double> single{0.5};
    CHECK_THROWS_AS(mutual_information(single, single, 2), InputError);
}

TEST_CASE("mutual information is exactly symmetric and matches the oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> u(16), v(16);
        for (auto& x : u) x = rng.uniform();
        for (auto& x : v) x = rng.uniform();
        const double ab = mutual_information(u, v, 16);
        const double ba = mutual_information(v, u, 16);
        REQUIRE(ab == ba); // bit-exact
        REQUIRE(ab == doctest::Approx(oracles::mutual_information(u, v, 16)).epsilon(1e-12));
        // self-MI dominates cross-MI under identical binning
        REQUIRE(mutual_information(u, u, 16) >= ab);
    }
}

TEST_CASE("value exactly 1 falls into the top bin") {
    const std::vector<double> u{0.0, 1.0};
    CHECK(mutual_information(u, u, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

namespace {

RoiPatch patch_from_columns(int nx, int ny, const std::vector<std::vector<double>>& cols) {
    RoiPatch patch;
    const int nz = static_cast<int>(cols[0].size());
    patch.dims = {nx, ny, nz};
    patch.voxels.resize(patch.voxel_count());
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x)
            for (int z = 0; z < nz; ++z)
                patch.at(x, y, z) = cols[static_cast<std::size_t>(x + nx * y)][static_cast<std::size_t>(z)];
    return patch;
}

} // namespace

TEST_CASE("build_graph degenerate rules") {
    // identical non-constant columns: every raw MI equal and positive
    const std::vector<double> col{0.1, 0.9, 0.3, 0.7};
    const RoiPatch same = patch_from_columns(2, 2, {col, col, col, col});
    const PixelArrayGraph g = build_graph(same, 4, 0.5);
    CHECK(g.n_total == 4);
    CHECK(g.edges.size() == 6);
    for (const auto& e : g.edges) CHECK(e.w == 1.0);
    CHECK(g.m_min == g.m_max);

    // single candidate pair: min == max, weight 1
    const RoiPatch pair = patch_from_columns(1, 2, {{0.1, 0.9}, {0.9, 0.1}});
    const PixelArrayGraph g1 = build_graph(pair, 2, 0.5);
    REQUIRE(g1.edges.size() == 1);
    CHECK(g1.edges[0].w == 1.0);

    // constant columns: every raw MI is zero, edge set empty
    const RoiPatch flat = patch_from_columns(1, 2, {{0.5, 0.5}, {0.5, 0.5}});
    const PixelArrayGraph g0 = build_graph(flat, 2, 0.5);
    CHECK(g0.edges.empty());
}

TEST_CASE("build_graph validation") {
    const RoiPatch patch = test_util::random_unit_patch(2, 2, 4, 5);
    CHECK_THROWS_AS(build_graph(patch, 16, 1.5), InputError);
    RoiPatch shallow = test_util::random_unit_patch(2, 2, 1, 5);
    CHECK_THROWS_AS(build_graph(shallow, 16, 0.5), InputError);
    RoiPatch unnormalized = patch;
    unnormalized.voxels[0] = 2.0;
    CHECK_THROWS_AS(build_graph(unnormalized, 16, 0.5), InputError);
}

TEST_CASE("build_graph matches the exhaustive pair oracle") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        const RoiPatch patch = test_util::random_unit_patch(2, 2, 8, seed);
        const PixelArrayGraph g = build_graph(patch, 4, 0.5);
        const auto expected = oracles::pixel_array_graph(patch, 4, 0.5);
        REQUIRE(g.edges.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            REQUIRE(g.edges[i].u == expected[i].u);
            REQUIRE(g.edges[i].v == expected[i].v);
            REQUIRE(g.edges[i].w == doctest::Approx(expected[i].w).epsilon(1e-12));
        }
        // max-MI pair survives with weight 1, min-MI pair dropped
        if (g.m_max > g.m_min) {
            const bool has_unit_weight =
                std::any_of(g.edges.begin(), g.edges.end(), [](const GraphEdge& e) {
                    return e.w == 1.0;
                });
            CHECK(has_unit_weight);
            CHECK(g.edges.size() < 6u);
        }
    }
}

TEST_CASE("edge set and weights are invariant to the MI log base") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const RoiPatch patch = test_util::random_unit_patch(3, 2, 8, 1000 + seed);
        const PixelArrayGraph g = build_graph(patch, 8, 0.5);
        const auto log2_edges = oracles::pixel_array_graph(patch, 8, 0.5, /*use_log2=*/true);
        REQUIRE(g.edges.size() == log2_edges.size());
        for (std::size_t i = 0; i < log2_edges.size(); ++i) {
            REQUIRE(g.edges[i].u == log2_edges[i].u);
            REQUIRE(g.edges[i].v == log2_edges[i].v);
            REQUIRE(g.edges[i].w == doctest::Approx(log2_edges[i].w).epsilon(1e-12));
        }
    }
}

TEST_CASE("whole graph is invariant under positive intensity scaling") {
    RoiPatch raw = test_util::random_patch(3, 3, 8, 77);
    RoiPatch scaled = raw;
    for (double& v : scaled.voxels) v *= 3.7;
    const PixelArrayGraph a = build_graph(normalize_max(raw), 16, 0.5);
    const PixelArrayGraph b = build_graph(normalize_max(scaled), 16, 0.5);
    REQUIRE(a.edges.size() == b.edges.size());
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        CHECK(a.edges[i].u == b.edges[i].u);
        CHECK(a.edges[i].v == b.edges[i].v);
        CHECK(a.edges[i].w == doctest::Approx(b.edges[i].w).epsilon(1e-12));
    }
}

TEST_CASE("graph_summary") {
    PixelArrayGraph g;
    g.n_total = 4;
    SUBCASE("complete graph, all weights 1") {
        for (int u = 0; u < 4; ++u)
            for (int v = u + 1; v < 4; ++v) g.edges.push_back({u, v, 1.0});
        const GraphSummary s = graph_summary(g);
        CHECK(s.num_edges == 6);
        CHECK(s.num_active_nodes == 4);
        CHECK(s.avg_edge_weight == 1.0);
        CHECK(graph_connected(g));
    }
    SUBCASE("empty edge set") {
        const GraphSummary s = graph_summary(g);
        CHECK(s.num_edges == 0);
        CHECK(s.num_active_nodes == 0);
        CHECK(s.avg_edge_weight == 0.0);
        CHECK(!graph_connected(g));
    }
    SUBCASE("two components over active nodes") {
        g.edges.push_back({0, 1, 0.8});
        g.edges.push_back({2, 3, 0.9});
        CHECK(!graph_connected(g));
        const GraphSummary s = graph_summary(g);
        CHECK(s.num_active_nodes == 4);
        CHECK(s.avg_edge_weight == doctest::Approx(0.85).epsilon(1e-12));
    }
}

TEST_CASE("summary matches an oracle recount on a seeded graph") {
    const RoiPatch patch = test_util::random_unit_patch(2, 2, 8, 3);
    const PixelArrayGraph g = build_graph(patch, 4, 0.5);
    const auto expected = oracles::pixel_array_graph(patch, 4, 0.5);
    const GraphSummary s = graph_summary(g);
    CHECK(s.num_edges == static_cast<long long>(expected.size()));
    std::set<int> active;
    double sum = 0.0;
    for (const auto& e : expected) {
        active.insert(e.u);
        active.insert(e.v);
        sum += e.w;
    }
    CHECK(s.num_active_nodes == static_cast<int>(active.size()));
    if (!expected.empty())
        CHECK(s.avg_edge_weight ==
              doctest::Approx(sum / static_cast<double>(expected.size())).epsilon(1e-12));
}

TEST_CASE("node relabeling leaves summary statistics unchanged") {
    const RoiPatch patch = test_util::random_unit_patch(2, 3, 8, 15);
    const PixelArrayGraph g = build_graph(patch, 8, 0.5);
    const GraphSummary s = graph_summary(g);

    Rng rng(55);
    std::vector<int> perm(static_cast<std::size_t>(g.n_total));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    rng.shuffle(perm);

    PixelArrayGraph relabeled = g;
    for (auto& e : relabeled.edges) {
        int u = perm[static_cast<std::size_t>(e.u)];
        int v = perm[static_cast<std::size_t>(e.v)];
        e.u = std::min(u, v);
        e.v = std::max(u, v);
    }
    const GraphSummary t = graph_summary(relabeled);
    CHECK(s.num_edges == t.num_edges);
    CHECK(s.num_active_nodes == t.num_active_nodes);
    CHECK(s.avg_edge_weight == doctest::Approx(t.avg_edge_weight).epsilon(1e-12));
}

TEST_CASE("graph csv round trip") {
    test_util::TempDir dir("graph_csv");
    const RoiPatch patch = test_util::random_unit_patch(2, 2, 8, 8);
    const PixelArrayGraph g = build_graph(patch, 4, 0.5);
    write_graph_csv(g, dir.str("g.csv"));
    const PixelArrayGraph back = read_graph_csv(dir.str("g.csv"), g.n_total);
    REQUIRE(back.edges.size() == g.edges.size());
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        CHECK(back.edges[i].u == g.edges[i].u);
        CHECK(back.edges[i].v == g.edges[i].v);
        CHECK(back.edges[i].w == g.edges[i].w); // exact via round-trip formatting
    }
}
