#include "pagc/spectral.hpp"

#include "pagc/error.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace pagc {

AdjacencyMatrix adjacency(const PixelArrayGraph& g) {
    AdjacencyMatrix a;
    a.n = g.n_total;
    a.values.assign(static_cast<std::size_t>(a.n) * a.n, 0.0);
    for (const auto& e : g.edges) {
        a.values[static_cast<std::size_t>(e.u) * a.n + e.v] = e.w;
        a.values[static_cast<std::size_t>(e.v) * a.n + e.u] = e.w;
    }
    return a;
}

EigenPairs eigendecompose(const AdjacencyMatrix& a) {
    const int n = a.n;
    if (n <= 0) throw InputError("eigendecompose: empty matrix");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(a.at(i, j) - a.at(j, i)) > 1e-12)
                throw InputError("eigendecompose: matrix is not symmetric");

    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = a.at(i, j);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
        throw AnalysisError("eigendecompose: solver did not converge");

    // Solver returns ascending order; emit descending with sign fix.
    EigenPairs out;
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors.resize(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        const int src = n - 1 - r;
        out.values[static_cast<std::size_t>(r)] = solver.eigenvalues()(src);
        auto& vec = out.vectors[static_cast<std::size_t>(r)];
        vec.resize(static_cast<std::size_t>(n));
        int pivot = 0;
        double best = -1.0;
        for (int i = 0; i < n; ++i) {
            vec[static_cast<std::size_t>(i)] = solver.eigenvectors()(i, src);
            const double mag = std::abs(vec[static_cast<std::size_t>(i)]);
            if (mag > best) { // strict: ties keep the lowest index
                best = mag;
                pivot = i;
            }
        }
        if (vec[static_cast<std::size_t>(pivot)] < 0.0)
            for (double& x : vec) x = -x;
    }
    return out;
}

SpectralFeatureVector spectral_features(const AdjacencyMatrix& a, int k) {
    if (k <= 0) throw InputError("spectral_features: k must be positive");
    if (k > a.n)
        throw InputError("insufficient nodes: need " + std::to_string(k) + " eigenvectors but graph has " +
                         std::to_string(a.n) + " nodes");
    const EigenPairs pairs = eigendecompose(a);
    SpectralFeatureVector f;
    f.k = k;
    f.n = a.n;
    f.eigenvalues.assign(pairs.values.begin(), pairs.values.begin() + k);
    f.features.reserve(static_cast<std::size_t>(k) * a.n);
    for (int r = 0; r < k; ++r)
        f.features.insert(f.features.end(), pairs.vectors[static_cast<std::size_t>(r)].begin(),
                          pairs.vectors[static_cast<std::size_t>(r)].end());
    return f;
}

std::vector<std::string> spectral_feature_names(int k, int n) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(k) * n);
    for (int r = 1; r <= k; ++r)
        for (int j = 0; j < n; ++j)
            names.push_back("eig" + std::to_string(r) + "_node" + std::to_string(j));
    return names;
}

} // namespace pagc
