#pragma once

#include "pagc/volume.hpp"

#include <span>
#include <string>
#include <vector>

namespace pagc {

/// Weighted undirected edge; u < v always, w is the min-max normalized
/// mutual information.
struct GraphEdge {
    int u = 0;
    int v = 0;
    double w = 0.0;
};

/// Pixel-array graph of one ROI patch. Nodes are the x*y z-direction
/// intensity arrays; only edges surviving the threshold are stored, but
/// n_total keeps the full node count so downstream feature dimensions stay
/// fixed across subjects.
struct PixelArrayGraph {
    int n_total = 0;
    std::vector<GraphEdge> edges;
    int bins = 0;
    double m_min = 0.0; // raw MI extremes over all candidate pairs
    double m_max = 0.0;
};

struct GraphSummary {
    long long num_edges = 0;
    int num_active_nodes = 0; // degree >= 1
    double avg_edge_weight = 0.0;
};

inline constexpr int kDefaultMiBins = 16;
inline constexpr double kDefaultEdgeThreshold = 0.5;

// Normalized weights can sit exactly on the threshold in exact arithmetic
// (histogram MIs are sums over rational probabilities), where rounding noise
// would otherwise decide edge membership. Weights within this margin of the
// threshold count as meeting it, keeping the edge set stable under
// reformulations that only change rounding (log base, accumulation order).
inline constexpr double kEdgeThresholdEpsilon = 1e-12;

// Histogram estimate of the mutual information between two sequences in
// [0,1]: equal-width joint histogram over [0,1]^2, probabilities are
// counts/length, natural logarithm, empty cells contribute nothing, and the
// value 1 falls in the top bin. Arguments are ordered canonically before
// accumulation so the result is exactly symmetric.
double mutual_information(std::span<const double> u, std::span<const double> v, int bins);

// Builds the pixel-array graph of a max-normalized patch: raw MI for every
// unordered node pair, per-graph min-max normalization, then edges below the
// threshold are removed. Degenerate rule: if all raw MIs are equal and
// positive every edge is kept with weight 1; if all are zero the edge set is
// empty. Node index = x + dims[0]*y.
PixelArrayGraph build_graph(const RoiPatch& patch, int bins = kDefaultMiBins,
                            double threshold = kDefaultEdgeThreshold);

GraphSummary graph_summary(const PixelArrayGraph& g);

// Whether all active (degree >= 1) nodes fall in one connected component.
// Diagnostic only: thresholding does not guarantee connectivity.
bool graph_connected(const PixelArrayGraph& g);

// Edge-list CSV (u,v,w) with header.
void write_graph_csv(const PixelArrayGraph& g, const std::string& path);
PixelArrayGraph read_graph_csv(const std::string& path, int n_total);

} // namespace pagc
