#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "polnet/graph.hpp"

namespace polnet {

struct ExtractionConfig {
    std::vector<double> init_proportions{0.20, 0.25, 0.30};
    int seeds = 20;  // random restarts per proportion
    int max_iterations = 50;
    double overlap_threshold = 0.75;
    // retention floor on the aggregate score; 5.0 sits near the 99th
    // percentile of the score of a null vertex set, so chance clusters are
    // dropped while planted structure scores an order of magnitude higher
    double min_score = 5.0;
};

struct PolarityReport {
    int year = 0;
    int n_communities = 0;
    double pct_assigned = 0.0;
    double pct_bridges = 0.0;
};

struct NodeRole {
    bool is_bridge = false;
    // vertices sharing the sole community; set only for single-community members
    std::optional<std::set<int>> partners;
};

/// Significance score of a vertex-layer set: per layer, the within-set edge
/// surplus over the fixed-degree null expectation, standardized by the null
/// standard deviation and clipped at zero, then aggregated as
/// (sum of clipped z)^2 / |L|. The vertex-size normalization constant is 1:
/// the z-standardization already makes sets of different sizes comparable.
double vertex_layer_score(const std::vector<int>& vertex_set, const std::vector<int>& layer_set,
                          const MultilayerGraph& g);

/// Greedy multilayer extraction: from random vertex subsets at each
/// configured proportion, alternate best-improving vertex toggles and layer
/// toggles until a local maximum, then deduplicate by vertex-set Jaccard
/// overlap keeping the higher score. Deterministic given the seed.
CommunitySet extract(const MultilayerGraph& g, const ExtractionConfig& cfg, std::uint64_t seed);

/// Serial reference for the restart loop; extract() runs the same restarts
/// in parallel when threads > 1 and yields identical results.
CommunitySet extract_with_threads(const MultilayerGraph& g, const ExtractionConfig& cfg,
                                  std::uint64_t seed, int threads);

PolarityReport polarity_metrics(const CommunitySet& cs, const std::vector<EntityId>& system_vertices);

/// Membership-count roles per vertex index of the CommunitySet.
std::map<int, NodeRole> node_roles(const CommunitySet& cs);

}  // namespace polnet
