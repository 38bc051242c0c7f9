#include "polnet/extract.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polnet/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polnet {

namespace {

constexpr double kVarianceFloor = 1e-12;

/// Per-layer null moments for the current vertex set, updated incrementally
/// as vertices toggle. p_ij = min(1, d_i d_j / 2m) under the Chung-Lu
/// approximation of the fixed-degree null.
class ScoreState {
public:
    explicit ScoreState(const MultilayerGraph& g) : g_(&g) {
        const int k = g.n_layers();
        const int n = g.n_vertices();
        deg_.resize(k);
        two_m_.resize(k);
        for (int l = 0; l < k; ++l) {
            deg_[l].resize(n);
            for (int i = 0; i < n; ++i) deg_[l][i] = g.layers()[l].adj.degree(i);
            two_m_[l] = 0.0;
            for (int i = 0; i < n; ++i) two_m_[l] += deg_[l][i];
        }
        obs_.assign(k, 0.0);
        exp_.assign(k, 0.0);
        var_.assign(k, 0.0);
        in_b_.assign(n, 0);
        b_.clear();
    }

    void reset(const std::vector<int>& vertex_set) {
        std::fill(obs_.begin(), obs_.end(), 0.0);
        std::fill(exp_.begin(), exp_.end(), 0.0);
        std::fill(var_.begin(), var_.end(), 0.0);
        std::fill(in_b_.begin(), in_b_.end(), 0);
        b_.clear();
        for (int v : vertex_set) add_vertex(v);
    }

    void add_vertex(int v) {
        apply(v, +1);
        in_b_[v] = 1;
        b_.push_back(v);
    }

    void remove_vertex(int v) {
        apply(v, -1);
        in_b_[v] = 0;
        b_.erase(std::find(b_.begin(), b_.end(), v));
    }

    bool contains(int v) const { return in_b_[v] != 0; }
    int b_size() const { return static_cast<int>(b_.size()); }
    const std::vector<int>& members() const { return b_; }

    double layer_z(int l) const { return z_of(obs_[l], exp_[l], var_[l]); }

    /// z of layer l if vertex v were toggled.
    double layer_z_toggled(int l, int v) const {
        const int sign = in_b_[v] ? -1 : +1;
        double d_obs = 0.0, d_exp = 0.0, d_var = 0.0;
        pair_deltas(l, v, d_obs, d_exp, d_var);
        return z_of(obs_[l] + sign * d_obs, exp_[l] + sign * d_exp, var_[l] + sign * d_var);
    }

    static double z_of(double obs, double expd, double var) {
        if (var < kVarianceFloor) return 0.0;
        return (obs - expd) / std::sqrt(var);
    }

private:
    void apply(int v, int sign) {
        const int k = g_->n_layers();
        for (int l = 0; l < k; ++l) {
            double d_obs = 0.0, d_exp = 0.0, d_var = 0.0;
            pair_deltas(l, v, d_obs, d_exp, d_var);
            obs_[l] += sign * d_obs;
            exp_[l] += sign * d_exp;
            var_[l] += sign * d_var;
        }
    }

    // contributions of pairs (v, i) for i in B \ {v}
    void pair_deltas(int l, int v, double& d_obs, double& d_exp, double& d_var) const {
        const auto& adj = g_->layers()[l].adj;
        const double dv = deg_[l][v];
        const double tm = two_m_[l];
        for (int i : b_) {
            if (i == v) continue;
            if (adj.at(v, i)) d_obs += 1.0;
            if (tm > 0.0) {
                const double p = std::min(1.0, dv * deg_[l][i] / tm);
                d_exp += p;
                d_var += p * (1.0 - p);
            }
        }
    }

    const MultilayerGraph* g_;
    std::vector<std::vector<int>> deg_;
    std::vector<double> two_m_;
    std::vector<double> obs_, exp_, var_;
    std::vector<char> in_b_;
    std::vector<int> b_;
};

double aggregate(const std::vector<double>& zs) {
    if (zs.empty()) return 0.0;
    double s = 0.0;
    for (double z : zs) s += std::max(0.0, z);
    return s * s / static_cast<double>(zs.size());
}

struct Candidate {
    std::vector<int> vertices;
    std::vector<int> layers;
    double score = 0.0;
};

Candidate greedy_from(const MultilayerGraph& g, const std::vector<int>& init, int max_iterations) {
    const int n = g.n_vertices();
    const int k = g.n_layers();
    ScoreState state(g);
    state.reset(init);

    std::vector<char> in_l(k, 1);  // start from all layers
    int l_size = k;

    auto current_score = [&]() {
        std::vector<double> zs;
        for (int l = 0; l < k; ++l) {
            if (in_l[l]) zs.push_back(state.layer_z(l));
        }
        return aggregate(zs);
    };

    double score = current_score();
    for (int iter = 0; iter < max_iterations; ++iter) {
        bool moved = false;

        // vertex phase: best single toggle, repeated
        while (true) {
            int best_v = -1;
            double best_score = score;
            for (int v = 0; v < n; ++v) {
                if (state.contains(v) && state.b_size() <= 2) continue;
                std::vector<double> zs;
                for (int l = 0; l < k; ++l) {
                    if (in_l[l]) zs.push_back(state.layer_z_toggled(l, v));
                }
                const double s = aggregate(zs);
                if (s > best_score) {
                    best_score = s;
                    best_v = v;
                }
            }
            if (best_v < 0) break;
            if (state.contains(best_v))
                state.remove_vertex(best_v);
            else
                state.add_vertex(best_v);
            score = best_score;
            moved = true;
        }

        // layer phase: best single toggle, repeated
        while (true) {
            int best_l = -1;
            double best_score = score;
            for (int l = 0; l < k; ++l) {
                if (in_l[l] && l_size <= 1) continue;
                in_l[l] ^= 1;
                std::vector<double> zs;
                for (int l2 = 0; l2 < k; ++l2) {
                    if (in_l[l2]) zs.push_back(state.layer_z(l2));
                }
                in_l[l] ^= 1;
                const double s = aggregate(zs);
                if (s > best_score) {
                    best_score = s;
                    best_l = l;
                }
            }
            if (best_l < 0) break;
            in_l[best_l] ^= 1;
            l_size += in_l[best_l] ? 1 : -1;
            score = best_score;
            moved = true;
        }

        if (!moved) break;
    }

    Candidate c;
    c.vertices = state.members();
    std::sort(c.vertices.begin(), c.vertices.end());
    for (int l = 0; l < k; ++l) {
        if (in_l[l]) c.layers.push_back(l);
    }
    c.score = score;
    return c;
}

double jaccard(const std::vector<int>& a, const std::vector<int>& b) {
    std::size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<int> random_subset(int n, int count, Rng& rng) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < count; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

}  // namespace

double vertex_layer_score(const std::vector<int>& vertex_set, const std::vector<int>& layer_set,
                          const MultilayerGraph& g) {
    if (vertex_set.size() < 2) throw std::invalid_argument("vertex_layer_score: need >= 2 vertices");
    if (layer_set.empty()) throw std::invalid_argument("vertex_layer_score: need >= 1 layer");
    for (int v : vertex_set) {
        if (v < 0 || v >= g.n_vertices()) throw std::invalid_argument("vertex_layer_score: vertex outside graph");
    }
    for (int l : layer_set) {
        if (l < 0 || l >= g.n_layers()) throw std::invalid_argument("vertex_layer_score: layer outside graph");
    }
    ScoreState state(g);
    state.reset(vertex_set);
    std::vector<double> zs;
    zs.reserve(layer_set.size());
    for (int l : layer_set) zs.push_back(state.layer_z(l));
    return aggregate(zs);
}

CommunitySet extract(const MultilayerGraph& g, const ExtractionConfig& cfg, std::uint64_t seed) {
    return extract_with_threads(g, cfg, seed, 1);
}

CommunitySet extract_with_threads(const MultilayerGraph& g, const ExtractionConfig& cfg,
                                  std::uint64_t seed, int threads) {
    for (double p : cfg.init_proportions) {
        if (p <= 0.0 || p > 1.0) throw std::invalid_argument("extract: init proportions must lie in (0,1]");
    }
    if (cfg.max_iterations < 1) throw std::invalid_argument("extract: max_iterations must be >= 1");

    std::vector<std::string> layer_names;
    for (const auto& l : g.layers()) layer_names.push_back(l.name);

    const int n = g.n_vertices();
    if (n < 2 || g.n_layers() == 0) {
        return CommunitySet(g.year(), g.vertices(), layer_names, {});
    }

    const int n_props = static_cast<int>(cfg.init_proportions.size());
    const long n_runs = static_cast<long>(n_props) * cfg.seeds;
    std::vector<Candidate> results(n_runs);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, threads)) if (threads > 1)
#endif
    for (long run = 0; run < n_runs; ++run) {
        const int prop_idx = static_cast<int>(run / cfg.seeds);
        const int restart = static_cast<int>(run % cfg.seeds);
        Rng rng(Rng::derive(seed, {static_cast<std::uint64_t>(prop_idx), static_cast<std::uint64_t>(restart)}));
        const int count = std::min(n, std::max(2, static_cast<int>(std::lround(cfg.init_proportions[prop_idx] * n))));
        std::vector<int> init = random_subset(n, count, rng);
        results[run] = greedy_from(g, init, cfg.max_iterations);
    }

    // deduplicate: best score first, drop candidates overlapping an accepted one
    std::vector<const Candidate*> order;
    for (const auto& c : results) {
        if (c.score > 0.0 && c.score >= cfg.min_score && c.vertices.size() >= 2) order.push_back(&c);
    }
    std::sort(order.begin(), order.end(), [](const Candidate* a, const Candidate* b) {
        if (a->score != b->score) return a->score > b->score;
        if (a->vertices != b->vertices) return a->vertices < b->vertices;
        return a->layers < b->layers;
    });

    std::vector<Community> kept;
    for (const Candidate* c : order) {
        bool dominated = false;
        for (const auto& acc : kept) {
            if (jaccard(c->vertices, acc.vertices) > cfg.overlap_threshold) {
                dominated = true;
                break;
            }
        }
        if (!dominated) kept.push_back(Community{c->vertices, c->layers, c->score});
    }
    return CommunitySet(g.year(), g.vertices(), layer_names, std::move(kept));
}

PolarityReport polarity_metrics(const CommunitySet& cs, const std::vector<EntityId>& system_vertices) {
    PolarityReport rep;
    rep.year = cs.year();
    rep.n_communities = static_cast<int>(cs.communities().size());
    if (system_vertices.empty()) return rep;

    std::map<EntityId, int> member_count;
    for (const auto& c : cs.communities()) {
        for (int v : c.vertices) ++member_count[cs.vertices()[v]];
    }
    for (const auto& [id, unused] : member_count) {
        if (std::find(system_vertices.begin(), system_vertices.end(), id) == system_vertices.end()) {
            throw std::invalid_argument("polarity_metrics: community member '" + id +
                                        "' missing from system vertex list");
        }
    }
    int assigned = 0, bridges = 0;
    for (const auto& id : system_vertices) {
        auto it = member_count.find(id);
        if (it == member_count.end()) continue;
        ++assigned;
        if (it->second >= 2) ++bridges;
    }
    rep.pct_assigned = static_cast<double>(assigned) / static_cast<double>(system_vertices.size());
    rep.pct_bridges = static_cast<double>(bridges) / static_cast<double>(system_vertices.size());
    return rep;
}

std::map<int, NodeRole> node_roles(const CommunitySet& cs) {
    std::map<int, int> count;
    std::map<int, int> sole_community;
    for (std::size_t ci = 0; ci < cs.communities().size(); ++ci) {
        for (int v : cs.communities()[ci].vertices) {
            ++count[v];
            sole_community[v] = static_cast<int>(ci);
        }
    }
    std::map<int, NodeRole> roles;
    for (const auto& [v, c] : count) {
        NodeRole role;
        role.is_bridge = c >= 2;
        if (c == 1) {
            std::set<int> partners;
            for (int u : cs.communities()[sole_community[v]].vertices) {
                if (u != v && count.at(u) == 1) partners.insert(u);
            }
            role.partners = std::move(partners);
        }
        roles[v] = std::move(role);
    }
    return roles;
}

}  // namespace polnet
