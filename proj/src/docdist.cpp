#include "polnet/docdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polnet {

BowVector make_bow(const DocId& id, const std::vector<int>& doc) {
    BowVector bow;
    bow.id = id;
    std::map<int, long> counts;
    for (int t : doc) ++counts[t];
    const double total = static_cast<double>(doc.size());
    for (const auto& [tok, c] : counts) {
        bow.weights.emplace_back(tok, static_cast<double>(c) / total);
    }
    return bow;
}

double CostOracle::cost(int i, int j) const {
    if (i == j) return 0.0;
    const std::uint64_t key = CooccurrenceMatrix::key(i, j);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto a = space_->vec(i);
    auto b = space_->vec(j);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    const double c = std::sqrt(s);
    cache_.emplace(key, c);
    return c;
}

namespace {

double one_sided(const BowVector& from, const BowVector& to, const CostOracle& costs) {
    double total = 0.0;
    for (const auto& [i, mass] : from.weights) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [j, unused] : to.weights) {
            best = std::min(best, costs.cost(i, j));
            if (best == 0.0) break;
        }
        total += mass * best;
    }
    return total;
}

}  // namespace

double rwmd(const BowVector& a, const BowVector& b, const CostOracle& costs, RwmdMode mode) {
    if (a.empty() || b.empty()) throw std::invalid_argument("rwmd: empty document");
    const double ab = one_sided(a, b, costs);
    if (mode == RwmdMode::OneSided) return ab;
    return std::max(ab, one_sided(b, a, costs));
}

double wmd_exact(const BowVector& a, const BowVector& b, const CostOracle& costs) {
    if (a.empty() || b.empty()) throw std::invalid_argument("wmd_exact: empty document");
    const int n = static_cast<int>(a.weights.size());
    const int m = static_cast<int>(b.weights.size());
    if (n + m > 50) {
        throw std::invalid_argument("wmd_exact: combined vocabulary exceeds the 50-token oracle limit");
    }

    // transportation problem solved by successive shortest paths with
    // Johnson potentials; supplies/demands are the word masses
    std::vector<double> supply(n), demand(m);
    for (int i = 0; i < n; ++i) supply[i] = a.weights[i].second;
    for (int j = 0; j < m; ++j) demand[j] = b.weights[j].second;

    std::vector<std::vector<double>> c(n, std::vector<double>(m));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) c[i][j] = costs.cost(a.weights[i].first, b.weights[j].first);
    }

    std::vector<std::vector<double>> flow(n, std::vector<double>(m, 0.0));
    std::vector<double> pot_u(n, 0.0), pot_v(m, 0.0);
    const double eps = 1e-12;
    const double inf = std::numeric_limits<double>::infinity();

    while (true) {
        int src = -1;
        for (int i = 0; i < n; ++i) {
            if (supply[i] > eps) {
                src = i;
                break;
            }
        }
        if (src < 0) break;

        // Dijkstra over the bipartite residual graph from src
        std::vector<double> dist_u(n, inf), dist_v(m, inf);
        std::vector<int> pred_v(m, -1);  // supply node on the path into demand j
        std::vector<int> pred_u(n, -1);  // demand node on the path into supply i
        std::vector<bool> done_u(n, false), done_v(m, false);
        dist_u[src] = 0.0;
        while (true) {
            int bu = -1, bv = -1;
            double best = inf;
            for (int i = 0; i < n; ++i) {
                if (!done_u[i] && dist_u[i] < best) {
                    best = dist_u[i];
                    bu = i;
                    bv = -1;
                }
            }
            for (int j = 0; j < m; ++j) {
                if (!done_v[j] && dist_v[j] < best) {
                    best = dist_v[j];
                    bv = j;
                    bu = -1;
                }
            }
            if (bu < 0 && bv < 0) break;
            if (bu >= 0) {
                done_u[bu] = true;
                for (int j = 0; j < m; ++j) {
                    const double rc = c[bu][j] - pot_u[bu] - pot_v[j];
                    if (!done_v[j] && dist_u[bu] + rc < dist_v[j]) {
                        dist_v[j] = dist_u[bu] + rc;
                        pred_v[j] = bu;
                    }
                }
            } else {
                done_v[bv] = true;
                for (int i = 0; i < n; ++i) {
                    // residual arc back to supply i exists while flow > 0
                    if (!done_u[i] && flow[i][bv] > eps) {
                        const double rc = -(c[i][bv] - pot_u[i] - pot_v[bv]);
                        if (dist_v[bv] + rc < dist_u[i]) {
                            dist_u[i] = dist_v[bv] + rc;
                            pred_u[i] = bv;
                        }
                    }
                }
            }
        }

        // nearest demand with remaining capacity
        int sink = -1;
        double dsink = inf;
        for (int j = 0; j < m; ++j) {
            if (demand[j] > eps && dist_v[j] < dsink) {
                dsink = dist_v[j];
                sink = j;
            }
        }
        if (sink < 0) break;  // only rounding dust remains

        // bottleneck along the alternating path
        double push = std::min(supply[src], demand[sink]);
        {
            int j = sink;
            while (true) {
                int i = pred_v[j];
                if (i == src) break;
                j = pred_u[i];
                push = std::min(push, flow[i][j]);
            }
        }
        {
            int j = sink;
            while (true) {
                int i = pred_v[j];
                flow[i][j] += push;
                if (i == src) break;
                int jprev = pred_u[i];
                flow[i][jprev] -= push;
                j = jprev;
            }
        }
        supply[src] -= push;
        demand[sink] -= push;

        // Johnson update capped at the sink distance keeps reduced costs >= 0
        for (int i = 0; i < n; ++i) pot_u[i] += std::min(dist_u[i], dsink);
        for (int j = 0; j < m; ++j) pot_v[j] += std::min(dist_v[j], dsink);
    }

    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) total += flow[i][j] * c[i][j];
    }
    return total;
}

SymMatrix pairwise_rwmd_serial(const std::vector<BowVector>& docs, const std::vector<EntityId>& labels,
                               const CostOracle& costs, RwmdMode mode) {
    SymMatrix d(labels);
    const int n = static_cast<int>(docs.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) d.set(i, j, rwmd(docs[i], docs[j], costs, mode));
    }
    return d;
}

SymMatrix pairwise_rwmd_parallel(const std::vector<BowVector>& docs, const std::vector<EntityId>& labels,
                                 const CostOracle& costs, RwmdMode mode, int threads) {
    SymMatrix d(labels);
    const int n = static_cast<int>(docs.size());
    std::vector<std::pair<int, int>> dyads;
    dyads.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) dyads.emplace_back(i, j);
    }
    const long total = static_cast<long>(dyads.size());
    std::vector<double> out(dyads.size());
#ifdef _OPENMP
#pragma omp parallel num_threads(std::max(1, threads))
    {
        // per-thread oracle: the memo cache is not shared across threads
        CostOracle local(costs.space());
#pragma omp for schedule(dynamic, 4)
        for (long k = 0; k < total; ++k) {
            const auto& [i, j] = dyads[k];
            out[k] = rwmd(docs[i], docs[j], local, mode);
        }
    }
#else
    for (long k = 0; k < total; ++k) {
        const auto& [i, j] = dyads[k];
        out[k] = rwmd(docs[i], docs[j], costs, mode);
    }
#endif
    for (long k = 0; k < total; ++k) d.set(dyads[k].first, dyads[k].second, out[k]);
    return d;
}

SymMatrix speech_similarity_matrix(const std::vector<BowVector>& docs,
                                   const std::vector<EntityId>& labels, const CostOracle& costs,
                                   RwmdMode mode, std::vector<std::string>* notes, int threads) {
    if (docs.size() < 2) throw std::invalid_argument("speech_similarity_matrix: need >= 2 documents");
    if (docs.size() != labels.size()) {
        throw std::invalid_argument("speech_similarity_matrix: labels/docs size mismatch");
    }
    SymMatrix d = threads > 1 ? pairwise_rwmd_parallel(docs, labels, costs, mode, threads)
                              : pairwise_rwmd_serial(docs, labels, costs, mode);
    if (d.max_off_diagonal() == 0.0 && notes) {
        notes->push_back("speech similarity: all pairwise distances are zero; off-diagonal similarities forced to 1");
    }
    return distances_to_similarity(d);
}

}  // namespace polnet
