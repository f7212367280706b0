#pragma once

#include "pagc/graph.hpp"

#include <string>
#include <vector>

namespace pagc {

/// Dense symmetric adjacency with zero diagonal. Isolated nodes stay as
/// zero rows/columns so every subject in a region yields the same feature
/// dimension.
struct AdjacencyMatrix {
    int n = 0;
    std::vector<double> values; // row-major n*n

    double at(int i, int j) const {
        return values[static_cast<std::size_t>(i) * n + j];
    }
};

struct EigenPairs {
    std::vector<double> values;               // descending algebraic order
    std::vector<std::vector<double>> vectors; // unit 2-norm, sign-fixed
};

inline constexpr int kDefaultTopEigenvectors = 8;

AdjacencyMatrix adjacency(const PixelArrayGraph& g);

// Full symmetric eigendecomposition. Eigenvalues are sorted by algebraic
// value descending; each eigenvector has unit 2-norm and is sign-fixed so
// its largest-magnitude entry (lowest index on ties) is positive. Throws on
// non-symmetric input (tolerance 1e-12).
EigenPairs eigendecompose(const AdjacencyMatrix& a);

/// Flattened top-k eigenvectors: all n entries of v1, then v2, ...
struct SpectralFeatureVector {
    int k = 0;
    int n = 0;
    std::vector<double> eigenvalues; // k values, descending
    std::vector<double> features;    // k*n values
};

SpectralFeatureVector spectral_features(const AdjacencyMatrix& a, int k = kDefaultTopEigenvectors);

// Column names for the flattened features: eig1_node0, eig1_node1, ...
std::vector<std::string> spectral_feature_names(int k, int n);

} // namespace pagc
