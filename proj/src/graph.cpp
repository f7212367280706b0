#include "pagc/graph.hpp"

#include "pagc/csv.hpp"
#include "pagc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pagc {

namespace {

inline int bin_of(double x, int bins) {
    int b = static_cast<int>(x * bins);
    return b >= bins ? bins - 1 : b; // value exactly 1 -> top bin
}

double mi_ordered(std::span<const double> u, std::span<const double> v, int bins) {
    const std::size_t n = u.size();
    std::vector<int> joint(static_cast<std::size_t>(bins) * bins, 0);
    std::vector<int> mu(bins, 0), mv(bins, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int bu = bin_of(u[i], bins);
        const int bv = bin_of(v[i], bins);
        ++joint[static_cast<std::size_t>(bu) * bins + bv];
        ++mu[bu];
        ++mv[bv];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double mi = 0.0;
    for (int i = 0; i < bins; ++i) {
        if (mu[i] == 0) continue;
        for (int j = 0; j < bins; ++j) {
            const int c = joint[static_cast<std::size_t>(i) * bins + j];
            if (c == 0) continue;
            const double p = c * inv_n;
            mi += p * std::log(p / (mu[i] * inv_n * (mv[j] * inv_n)));
        }
    }
    return mi < 0.0 ? 0.0 : mi;
}

} // namespace

double mutual_information(std::span<const double> u, std::span<const double> v, int bins) {
    if (u.size() != v.size()) throw InputError("mutual_information: length mismatch");
    if (u.size() < 2) throw InputError("mutual_information: sequences need at least 2 samples");
    if (bins < 2) throw InputError("mutual_information: bins must be >= 2");
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] >= 0.0 && u[i] <= 1.0) || !(v[i] >= 0.0 && v[i] <= 1.0))
            throw InputError("mutual_information: values outside [0,1]");
    }
    // Canonical argument order makes mi(u,v) == mi(v,u) bit-exact.
    if (std::lexicographical_compare(v.begin(), v.end(), u.begin(), u.end()))
        return mi_ordered(v, u, bins);
    return mi_ordered(u, v, bins);
}

PixelArrayGraph build_graph(const RoiPatch& patch, int bins, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw InputError("build_graph: threshold outside [0,1]");
    if (patch.dims[2] < 2) throw InputError("build_graph: need at least 2 z samples");
    for (double v : patch.voxels)
        if (!(v >= 0.0 && v <= 1.0))
            throw InputError("build_graph: patch is not max-normalized");

    const int nx = patch.dims[0], ny = patch.dims[1], nz = patch.dims[2];
    const int n = nx * ny;

    // Gather the z-array of every node once; node index = x + nx*y.
    std::vector<std::vector<double>> columns(static_cast<std::size_t>(n));
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            auto& col = columns[static_cast<std::size_t>(x) + static_cast<std::size_t>(nx) * y];
            col.resize(static_cast<std::size_t>(nz));
            for (int z = 0; z < nz; ++z) col[static_cast<std::size_t>(z)] = patch.at(x, y, z);
        }

    PixelArrayGraph g;
    g.n_total = n;
    g.bins = bins;

    const std::size_t n_pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
    if (n_pairs == 0) return g;

    std::vector<double> raw(n_pairs);
    std::size_t k = 0;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            raw[k++] = mutual_information(columns[static_cast<std::size_t>(u)],
                                          columns[static_cast<std::size_t>(v)], bins);

    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    g.m_min = *lo_it;
    g.m_max = *hi_it;

    if (g.m_max == g.m_min) {
        if (g.m_max > 0.0) {
            // all candidate pairs equally informative: complete graph, weight 1
            g.edges.reserve(n_pairs);
            for (int u = 0; u < n; ++u)
                for (int v = u + 1; v < n; ++v) g.edges.push_back({u, v, 1.0});
        }
        return g;
    }

    const double range = g.m_max - g.m_min;
    k = 0;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
            const double w = (raw[k++] - g.m_min) / range;
            if (w >= threshold - kEdgeThresholdEpsilon) g.edges.push_back({u, v, w});
        }
    return g;
}

GraphSummary graph_summary(const PixelArrayGraph& g) {
    GraphSummary s;
    s.num_edges = static_cast<long long>(g.edges.size());
    std::vector<char> active(static_cast<std::size_t>(g.n_total), 0);
    double sum = 0.0;
    for (const auto& e : g.edges) {
        active[static_cast<std::size_t>(e.u)] = 1;
        active[static_cast<std::size_t>(e.v)] = 1;
        sum += e.w;
    }
    s.num_active_nodes = static_cast<int>(std::count(active.begin(), active.end(), 1));
    s.avg_edge_weight = g.edges.empty() ? 0.0 : sum / static_cast<double>(g.edges.size());
    return s;
}

bool graph_connected(const PixelArrayGraph& g) {
    if (g.edges.empty()) return false;
    std::vector<int> parent(static_cast<std::size_t>(g.n_total));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    };
    for (const auto& e : g.edges) parent[static_cast<std::size_t>(find(e.u))] = find(e.v);

    std::vector<char> active(static_cast<std::size_t>(g.n_total), 0);
    for (const auto& e : g.edges) {
        active[static_cast<std::size_t>(e.u)] = 1;
        active[static_cast<std::size_t>(e.v)] = 1;
    }
    int root = -1;
    for (int i = 0; i < g.n_total; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        const int r = find(i);
        if (root < 0) root = r;
        else if (r != root) return false;
    }
    return true;
}

void write_graph_csv(const PixelArrayGraph& g, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"u", "v", "w"});
    for (const auto& e : g.edges)
        rows.push_back({csv::format_int(e.u), csv::format_int(e.v), csv::format_double(e.w)});
    csv::write_file(path, rows);
}

PixelArrayGraph read_graph_csv(const std::string& path, int n_total) {
    const auto rows = csv::read_file(path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"u", "v", "w"})
        throw InputError("bad graph csv header: " + path);
    PixelArrayGraph g;
    g.n_total = n_total;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 3) throw InputError("bad graph csv row in " + path);
        GraphEdge e;
        e.u = static_cast<int>(csv::parse_int(rows[i][0]));
        e.v = static_cast<int>(csv::parse_int(rows[i][1]));
        e.w = csv::parse_double(rows[i][2]);
        if (e.u < 0 || e.v <= e.u || e.v >= n_total)
            throw InputError("bad edge endpoints in " + path);
        g.edges.push_back(e);
    }
    return g;
}

} // namespace pagc
