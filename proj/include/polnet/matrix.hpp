#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "polnet/graph.hpp"

namespace polnet {

/// Dense symmetric matrix with entity labels. Writes mirror across the
/// diagonal; the diagonal itself is writable (similarity matrices keep it
/// at zero, covariate matrices may not use it at all).
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::vector<EntityId> labels)
        : labels_(std::move(labels)), m_(labels_.size() * labels_.size(), 0.0) {}

    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<EntityId>& labels() const { return labels_; }

    double at(int i, int j) const { return m_[idx(i, j)]; }

    void set(int i, int j, double v) {
        m_[idx(i, j)] = v;
        m_[idx(j, i)] = v;
    }

    int index_of(const EntityId& id) const {
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i] == id) return static_cast<int>(i);
        }
        return -1;
    }

    /// Largest off-diagonal entry.
    double max_off_diagonal() const {
        double best = -std::numeric_limits<double>::infinity();
        const int n = size();
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) best = std::max(best, at(i, j));
        }
        return best;
    }

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * labels_.size() + j; }

    std::vector<EntityId> labels_;
    std::vector<double> m_;
};

/// Converts a symmetric distance matrix to similarities
/// S = 1 - D / max(D), with the diagonal forced to zero. A degenerate
/// all-zero distance matrix maps to all-ones off the diagonal; the caller
/// can detect that case via max_off_diagonal() == 0 beforehand.
SymMatrix distances_to_similarity(const SymMatrix& distances);

}  // namespace polnet
