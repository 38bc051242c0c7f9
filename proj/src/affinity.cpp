#include "polnet/affinity.hpp"

#include <algorithm>
#include <cmath>

namespace polnet {

SymMatrix distances_to_similarity(const SymMatrix& distances) {
    const int n = distances.size();
    SymMatrix s(distances.labels());
    const double dmax = distances.max_off_diagonal();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double v = dmax > 0.0 ? 1.0 - distances.at(i, j) / dmax : 1.0;
            s.set(i, j, v);
        }
    }
    return s;
}

SymMatrix ideal_similarity_matrix(const IdealPointTable& points, int year) {
    auto it = points.by_year.find(year);
    if (it == points.by_year.end() || it->second.size() < 2) {
        throw std::invalid_argument("ideal_similarity_matrix: need >= 2 entities in year " +
                                    std::to_string(year));
    }
    std::vector<EntityId> labels;
    std::vector<double> x;
    for (const auto& [id, v] : it->second) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("ideal point for '" + id + "' in " + std::to_string(year) +
                                        " is not finite");
        }
        labels.push_back(id);
        x.push_back(v);
    }
    SymMatrix d(labels);
    const int n = d.size();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) d.set(i, j, std::abs(x[i] - x[j]));
    }
    return distances_to_similarity(d);
}

BitAdjacency mutual_knn(const SymMatrix& s, int k) {
    const int n = s.size();
    if (k < 1 || k >= n) throw std::invalid_argument("mutual_knn: need 1 <= k < |V|");
    const auto& labels = s.labels();

    // top-k candidate set per vertex, ordered by (similarity desc, id asc)
    std::vector<std::vector<int>> topk(n);
    for (int i = 0; i < n; ++i) {
        std::vector<int> cand;
        for (int j = 0; j < n; ++j) {
            if (j != i && s.at(i, j) > 0.0) cand.push_back(j);
        }
        std::sort(cand.begin(), cand.end(), [&](int a, int b) {
            if (s.at(i, a) != s.at(i, b)) return s.at(i, a) > s.at(i, b);
            return labels[a] < labels[b];
        });
        if (static_cast<int>(cand.size()) > k) cand.resize(k);
        std::sort(cand.begin(), cand.end());
        topk[i] = std::move(cand);
    }

    BitAdjacency adj(n);
    for (int i = 0; i < n; ++i) {
        for (int j : topk[i]) {
            if (j > i && std::binary_search(topk[j].begin(), topk[j].end(), i)) {
                adj.set(i, j, true);
            }
        }
    }
    return adj;
}

}  // namespace polnet
