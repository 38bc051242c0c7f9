#pragma once

#include <unordered_map>
#include <vector>

#include "polnet/embed.hpp"
#include "polnet/matrix.hpp"

namespace polnet {

/// Sparse word-mass distribution on the embedding vocabulary; masses are
/// positive and sum to 1.
struct BowVector {
    DocId id;
    std::vector<std::pair<int, double>> weights;  // (token index, mass), sorted by token

    bool empty() const { return weights.empty(); }
};

/// Normalized term frequencies of one tokenized document.
BowVector make_bow(const DocId& id, const std::vector<int>& doc);

/// Euclidean distances between token vectors, memoized per pair.
class CostOracle {
public:
    explicit CostOracle(const EmbeddingSpace& space) : space_(&space) {}

    double cost(int i, int j) const;
    const EmbeddingSpace& space() const { return *space_; }

private:
    const EmbeddingSpace* space_;
    mutable std::unordered_map<std::uint64_t, double> cache_;
};

enum class RwmdMode { OneSided, SymmetricMax };

/// Relaxed transport distance: with one marginal constraint dropped, the
/// optimum sends each word's whole mass to its cheapest target, so the
/// one-sided value is sum_i d_i min_j c(i,j). SymmetricMax takes the larger
/// of the two one-sided values and stays a lower bound on the exact
/// distance.
double rwmd(const BowVector& a, const BowVector& b, const CostOracle& costs,
            RwmdMode mode = RwmdMode::SymmetricMax);

/// Exact transportation optimum with both marginals enforced, solved by
/// successive shortest paths. Desk-scale oracle: combined support must stay
/// within 50 tokens.
double wmd_exact(const BowVector& a, const BowVector& b, const CostOracle& costs);

/// Pairwise distances mapped to similarities S = 1 - D/max(D) with zero
/// diagonal. A degenerate year (all distances zero) yields all-ones off the
/// diagonal and a note. labels[i] names document i.
SymMatrix speech_similarity_matrix(const std::vector<BowVector>& docs,
                                   const std::vector<EntityId>& labels, const CostOracle& costs,
                                   RwmdMode mode = RwmdMode::SymmetricMax,
                                   std::vector<std::string>* notes = nullptr, int threads = 1);

/// Serial and OpenMP variants of the distance-matrix kernel; both fill the
/// strict upper triangle of a symmetric matrix. The serial form is the
/// reference the parallel one is tested against.
SymMatrix pairwise_rwmd_serial(const std::vector<BowVector>& docs, const std::vector<EntityId>& labels,
                               const CostOracle& costs, RwmdMode mode);
SymMatrix pairwise_rwmd_parallel(const std::vector<BowVector>& docs, const std::vector<EntityId>& labels,
                                 const CostOracle& costs, RwmdMode mode, int threads);

}  // namespace polnet
