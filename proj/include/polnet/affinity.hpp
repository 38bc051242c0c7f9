#pragma once

#include <map>

#include "polnet/matrix.hpp"

namespace polnet {

/// Scalar ideal points, one per entity-year.
struct IdealPointTable {
    std::map<int, std::map<EntityId, double>> by_year;
};

/// Absolute-difference distances between the year's ideal points, mapped to
/// similarities S = 1 - D/max(D). Requires >= 2 entities in the year.
SymMatrix ideal_similarity_matrix(const IdealPointTable& points, int year);

/// Mutual k-nearest-neighbor sparsification: edge (i,j) iff each endpoint
/// ranks the other within its k most similar positive-similarity neighbors.
/// Ties at the k-th rank break lexicographically on entity id.
BitAdjacency mutual_knn(const SymMatrix& s, int k);

}  // namespace polnet
