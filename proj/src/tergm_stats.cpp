#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polnet/tergm.hpp"

namespace polnet {

std::string Term::label() const {
    switch (kind) {
        case TermKind::Edges: return "edges";
        case TermKind::AltTwoStars: return raw_two_stars ? "two-stars" : "alt-2-stars";
        case TermKind::FourCycles: return "4-cycles";
        case TermKind::Gwesp: return "gwesp";
        case TermKind::Memory: return "memory";
        case TermKind::EdgeCov: return "edgecov." + cov;
        case TermKind::JointNodal: return "jointnodal." + cov;
        case TermKind::RatioNodal: return "rationodal." + cov;
        case TermKind::BridgeNodal: return "bridgenodal." + cov;
    }
    return "?";
}

int ModelSpec::index_of(const std::string& label) const {
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (terms[k].label() == label) return static_cast<int>(k);
    }
    return -1;
}

void ModelSpec::validate() const {
    bool has_edges = false;
    std::vector<std::string> labels;
    for (const auto& t : terms) {
        if (t.kind == TermKind::Edges) has_edges = true;
        labels.push_back(t.label());
    }
    if (!has_edges) throw std::invalid_argument("model spec: the edges term is required");
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
        throw std::invalid_argument("model spec: duplicate term");
    }
}

namespace {

double gwesp_weight(int shared, double decay) {
    // decay 0 reduces to 1[shared >= 1]
    return std::exp(decay) * (1.0 - std::pow(1.0 - std::exp(-decay), shared));
}

double alt_kstar_vertex(int degree, double lambda) {
    // sum_{k=2}^{d} (-1)^k C(d,k)/lambda^{k-2}, closed form
    return lambda * lambda *
           (std::pow(1.0 - 1.0 / lambda, degree) - 1.0 + static_cast<double>(degree) / lambda);
}

// row i with bit j cleared, into a caller buffer
void masked_row(const BitAdjacency& net, int i, int j, std::vector<std::uint64_t>& buf) {
    const int w = net.words();
    buf.assign(net.row(i), net.row(i) + w);
    buf[j / 64] &= ~(1ULL << (j % 64));
}

int popcount_and(const std::uint64_t* a, const std::uint64_t* b, int words) {
    int c = 0;
    for (int w = 0; w < words; ++w) c += __builtin_popcountll(a[w] & b[w]);
    return c;
}

}  // namespace

TermEvaluator::TermEvaluator(const YearSlice& cov, const SymMatrix* prev, const ModelSpec& spec)
    : cov_(&cov), prev_(prev), spec_(&spec) {
    spec.validate();
    const int n = static_cast<int>(cov.vertices.size());
    for (const auto& t : spec.terms) {
        const SymMatrix* dptr = nullptr;
        const std::vector<double>* nptr = nullptr;
        switch (t.kind) {
            case TermKind::Memory:
                if (!prev_) throw std::invalid_argument("memory term needs the previous-year network");
                if (prev_->size() != n) throw std::invalid_argument("previous-year matrix misaligned");
                break;
            case TermKind::EdgeCov: {
                auto it = cov.dyadic.find(t.cov);
                if (it == cov.dyadic.end()) {
                    throw std::invalid_argument("missing dyadic covariate '" + t.cov + "' in year " +
                                                std::to_string(cov.year));
                }
                if (it->second.size() != n) throw std::invalid_argument("covariate '" + t.cov + "' misaligned");
                dptr = &it->second;
                break;
            }
            case TermKind::JointNodal:
            case TermKind::RatioNodal:
            case TermKind::BridgeNodal: {
                auto it = cov.nodal.find(t.cov);
                if (it == cov.nodal.end()) {
                    throw std::invalid_argument("missing nodal covariate '" + t.cov + "' in year " +
                                                std::to_string(cov.year));
                }
                if (static_cast<int>(it->second.size()) != n) {
                    throw std::invalid_argument("covariate '" + t.cov + "' misaligned");
                }
                nptr = &it->second;
                break;
            }
            default:
                break;
        }
        dyadic_ptr_.push_back(dptr);
        nodal_ptr_.push_back(nptr);
    }
}

bool TermEvaluator::dyad_usable(int i, int j) const {
    for (std::size_t k = 0; k < spec_->terms.size(); ++k) {
        const Term& t = spec_->terms[k];
        switch (t.kind) {
            case TermKind::Memory:
                if (std::isnan(prev_->at(i, j))) return false;
                break;
            case TermKind::EdgeCov:
                if (std::isnan(dyadic_ptr_[k]->at(i, j))) return false;
                break;
            case TermKind::JointNodal:
                if (std::isnan((*nodal_ptr_[k])[i]) || std::isnan((*nodal_ptr_[k])[j])) return false;
                break;
            case TermKind::RatioNodal: {
                const double a = (*nodal_ptr_[k])[i];
                const double b = (*nodal_ptr_[k])[j];
                if (std::isnan(a) || std::isnan(b) || a <= 0.0 || b <= 0.0) return false;
                break;
            }
            case TermKind::BridgeNodal:
                if (std::isnan((*nodal_ptr_[k])[i]) || std::isnan((*nodal_ptr_[k])[j])) return false;
                break;
            default:
                break;
        }
    }
    return true;
}

std::vector<double> TermEvaluator::statistics(const BitAdjacency& net) const {
    const int n = net.size();
    std::vector<double> out(spec_->terms.size(), 0.0);

    std::vector<int> deg(n);
    for (int i = 0; i < n; ++i) deg[i] = net.degree(i);

    for (std::size_t k = 0; k < spec_->terms.size(); ++k) {
        const Term& t = spec_->terms[k];
        double s = 0.0;
        switch (t.kind) {
            case TermKind::Edges:
                s = static_cast<double>(net.edge_count());
                break;
            case TermKind::AltTwoStars:
                for (int i = 0; i < n; ++i) {
                    s += t.raw_two_stars ? 0.5 * deg[i] * (deg[i] - 1)
                                         : alt_kstar_vertex(deg[i], t.lambda);
                }
                break;
            case TermKind::FourCycles:
                for (int i = 0; i < n; ++i) {
                    for (int j = i + 1; j < n; ++j) {
                        const double c = net.common_neighbors(i, j);
                        s += c * (c - 1) / 2.0;
                    }
                }
                s /= 2.0;
                break;
            case TermKind::Gwesp:
                for (int i = 0; i < n; ++i) {
                    for (int j : net.neighbors(i)) {
                        if (j > i) s += gwesp_weight(net.common_neighbors(i, j), t.decay);
                    }
                }
                break;
            case TermKind::Memory:
                for (int i = 0; i < n; ++i) {
                    for (int j : net.neighbors(i)) {
                        if (j > i && !std::isnan(prev_->at(i, j))) s += prev_->at(i, j);
                    }
                }
                break;
            case TermKind::EdgeCov:
                for (int i = 0; i < n; ++i) {
                    for (int j : net.neighbors(i)) {
                        if (j > i && !std::isnan(dyadic_ptr_[k]->at(i, j))) s += dyadic_ptr_[k]->at(i, j);
                    }
                }
                break;
            case TermKind::JointNodal: {
                const auto& x = *nodal_ptr_[k];
                for (int i = 0; i < n; ++i) {
                    for (int j : net.neighbors(i)) {
                        if (j > i && !std::isnan(x[i]) && !std::isnan(x[j]) && x[i] >= t.threshold &&
                            x[j] >= t.threshold) {
                            s += 1.0;
                        }
                    }
                }
                break;
            }
            case TermKind::RatioNodal: {
                const auto& x = *nodal_ptr_[k];
                for (int i = 0; i < n; ++i) {
                    for (int j : net.neighbors(i)) {
                        if (j > i && !std::isnan(x[i]) && !std::isnan(x[j]) && x[i] > 0.0 && x[j] > 0.0) {
                            s += std::log10(std::max(x[i], x[j]) / std::min(x[i], x[j]));
                        }
                    }
                }
                break;
            }
            case TermKind::BridgeNodal: {
                const auto& x = *nodal_ptr_[k];
                for (int i = 0; i < n; ++i) {
                    for (int j : net.neighbors(i)) {
                        if (j > i && !std::isnan(x[i]) && !std::isnan(x[j])) s += x[i] + x[j];
                    }
                }
                break;
            }
        }
        out[k] = s;
    }
    return out;
}

void TermEvaluator::change(const BitAdjacency& net, int i, int j, std::span<double> out) const {
    if (i == j) throw std::invalid_argument("change: dyad endpoints must differ");
    const bool present = net.at(i, j);
    const int di0 = net.degree(i) - (present ? 1 : 0);
    const int dj0 = net.degree(j) - (present ? 1 : 0);

    // rows with the toggled edge masked out; shared by the structural terms
    thread_local std::vector<std::uint64_t> rowi0, rowj0;
    bool rows_ready = false;
    auto ensure_rows = [&]() {
        if (!rows_ready) {
            masked_row(net, i, j, rowi0);
            masked_row(net, j, i, rowj0);
            rows_ready = true;
        }
    };

    for (std::size_t k = 0; k < spec_->terms.size(); ++k) {
        const Term& t = spec_->terms[k];
        double d = 0.0;
        switch (t.kind) {
            case TermKind::Edges:
                d = 1.0;
                break;
            case TermKind::AltTwoStars:
                if (t.raw_two_stars) {
                    d = static_cast<double>(di0 + dj0);
                } else {
                    d = t.lambda * (2.0 - std::pow(1.0 - 1.0 / t.lambda, di0) -
                                    std::pow(1.0 - 1.0 / t.lambda, dj0));
                }
                break;
            case TermKind::FourCycles: {
                ensure_rows();
                const int words = net.words();
                long paths = 0;
                for (int w = 0; w < words; ++w) {
                    std::uint64_t bits = rowi0[w];
                    while (bits) {
                        const int b = __builtin_ctzll(bits);
                        bits &= bits - 1;
                        const int kv = w * 64 + b;
                        paths += popcount_and(net.row(kv), rowj0.data(), words);
                    }
                }
                d = static_cast<double>(paths);
                break;
            }
            case TermKind::Gwesp: {
                ensure_rows();
                const int words = net.words();
                const int esp_ij = popcount_and(rowi0.data(), rowj0.data(), words);
                d = gwesp_weight(esp_ij, t.decay);
                for (int w = 0; w < words; ++w) {
                    std::uint64_t bits = rowi0[w] & rowj0[w];
                    while (bits) {
                        const int b = __builtin_ctzll(bits);
                        bits &= bits - 1;
                        const int kv = w * 64 + b;
                        const int e_ik = popcount_and(rowi0.data(), net.row(kv), words);
                        const int e_jk = popcount_and(rowj0.data(), net.row(kv), words);
                        d += gwesp_weight(e_ik + 1, t.decay) - gwesp_weight(e_ik, t.decay);
                        d += gwesp_weight(e_jk + 1, t.decay) - gwesp_weight(e_jk, t.decay);
                    }
                }
                break;
            }
            case TermKind::Memory:
                d = prev_->at(i, j);
                break;
            case TermKind::EdgeCov:
                d = dyadic_ptr_[k]->at(i, j);
                break;
            case TermKind::JointNodal: {
                const auto& x = *nodal_ptr_[k];
                d = (x[i] >= t.threshold && x[j] >= t.threshold) ? 1.0 : 0.0;
                break;
            }
            case TermKind::RatioNodal: {
                const auto& x = *nodal_ptr_[k];
                d = std::log10(std::max(x[i], x[j]) / std::min(x[i], x[j]));
                break;
            }
            case TermKind::BridgeNodal: {
                const auto& x = *nodal_ptr_[k];
                d = x[i] + x[j];
                break;
            }
        }
        out[k] = d;
    }
}

std::vector<double> compute_statistics(const BitAdjacency& net, const YearSlice& cov,
                                       const SymMatrix* prev, const ModelSpec& spec) {
    return TermEvaluator(cov, prev, spec).statistics(net);
}

std::vector<double> change_statistic(const BitAdjacency& net, const YearSlice& cov,
                                     const SymMatrix* prev, const ModelSpec& spec, int i, int j) {
    std::vector<double> out(spec.terms.size());
    TermEvaluator(cov, prev, spec).change(net, i, j, out);
    return out;
}

PanelSeries derive_covariates(const std::vector<CommunitySet>& communities, const PanelSeries& base,
                              const std::string& prefix) {
    for (const auto& cs : communities) {
        if (!base.find(cs.year())) {
            throw std::invalid_argument("derive_covariates: community year " + std::to_string(cs.year()) +
                                        " missing from panel");
        }
    }
    PanelSeries out = base;
    for (auto& slice : out.years) {
        const int n = static_cast<int>(slice.vertices.size());
        SymMatrix tie(slice.vertices);
        SymMatrix joint(slice.vertices);
        std::vector<double> bridge(n, 0.0);

        const CommunitySet* cs = nullptr;
        for (const auto& c : communities) {
            if (c.year() == slice.year) {
                cs = &c;
                break;
            }
        }
        if (cs) {
            // map community vertex indices onto the slice ordering
            std::vector<int> remap(cs->vertices().size(), -1);
            for (std::size_t v = 0; v < cs->vertices().size(); ++v) {
                auto it = std::find(slice.vertices.begin(), slice.vertices.end(), cs->vertices()[v]);
                bool in_any = false;
                for (const auto& c : cs->communities()) {
                    if (std::find(c.vertices.begin(), c.vertices.end(), static_cast<int>(v)) !=
                        c.vertices.end()) {
                        in_any = true;
                        break;
                    }
                }
                if (it == slice.vertices.end()) {
                    if (in_any) {
                        throw std::invalid_argument("derive_covariates: community member '" +
                                                    cs->vertices()[v] + "' missing from panel year " +
                                                    std::to_string(slice.year));
                    }
                    continue;
                }
                remap[v] = static_cast<int>(it - slice.vertices.begin());
            }

            ProjectedGraph pg = project_communities(*cs);
            for (std::size_t a = 0; a < remap.size(); ++a) {
                for (std::size_t b = a + 1; b < remap.size(); ++b) {
                    if (remap[a] >= 0 && remap[b] >= 0) {
                        const int w = pg.weight(static_cast<int>(a), static_cast<int>(b));
                        if (w > 0) tie.set(remap[a], remap[b], w);
                    }
                }
            }

            auto roles = node_roles(*cs);
            for (const auto& [v, role] : roles) {
                if (remap[v] < 0) continue;
                if (role.is_bridge) bridge[remap[v]] = 1.0;
            }
            for (const auto& [v, role] : roles) {
                if (!role.partners || remap[v] < 0) continue;
                for (int u : *role.partners) {
                    if (remap[u] >= 0) joint.set(remap[v], remap[u], 1.0);
                }
            }
        }

        slice.dyadic[prefix + "community_tie"] = std::move(tie);
        slice.dyadic[prefix + "joint_member"] = std::move(joint);
        slice.nodal[prefix + "bridge"] = std::move(bridge);
    }
    return out;
}

double auc_pr(std::vector<std::pair<double, int>> scored) {
    long total_pos = 0;
    for (const auto& [s, y] : scored) total_pos += y;
    if (total_pos == 0 || scored.empty()) return 0.0;
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    double area = 0.0;
    double prev_recall = 0.0;
    long tp = 0, fp = 0;
    std::size_t k = 0;
    while (k < scored.size()) {
        const double threshold = scored[k].first;
        while (k < scored.size() && scored[k].first == threshold) {
            tp += scored[k].second;
            fp += 1 - scored[k].second;
            ++k;
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

std::vector<long> degree_histogram(const BitAdjacency& net) {
    std::vector<long> h(net.size(), 0);
    for (int i = 0; i < net.size(); ++i) ++h[net.degree(i)];
    return h;
}

std::vector<long> esp_histogram(const BitAdjacency& net) {
    const int n = net.size();
    std::vector<long> h(std::max(1, n - 1), 0);
    for (int i = 0; i < n; ++i) {
        for (int j : net.neighbors(i)) {
            if (j > i) ++h[net.common_neighbors(i, j)];
        }
    }
    return h;
}

double greedy_modularity(const BitAdjacency& net) {
    const int n = net.size();
    const double m = static_cast<double>(net.edge_count());
    if (m == 0.0) return 0.0;

    // community-level edge counts and degree fractions
    std::vector<std::vector<double>> e(n, std::vector<double>(n, 0.0));
    std::vector<double> a(n, 0.0);
    std::vector<bool> alive(n, true);
    for (int i = 0; i < n; ++i) {
        a[i] = net.degree(i) / (2.0 * m);
        for (int j : net.neighbors(i)) {
            if (j > i) e[i][j] = e[j][i] = 1.0 / m;
        }
    }
    std::vector<double> within(n, 0.0);

    while (true) {
        int bc = -1, bd = -1;
        double best = 0.0;
        for (int c = 0; c < n; ++c) {
            if (!alive[c]) continue;
            for (int d = c + 1; d < n; ++d) {
                if (!alive[d]) continue;
                const double dq = e[c][d] - 2.0 * a[c] * a[d];
                if (dq > best + 1e-15) {
                    best = dq;
                    bc = c;
                    bd = d;
                }
            }
        }
        if (bc < 0) break;
        within[bc] += within[bd] + e[bc][bd];
        a[bc] += a[bd];
        for (int x = 0; x < n; ++x) {
            if (alive[x] && x != bc && x != bd) e[bc][x] = e[x][bc] = e[bc][x] + e[bd][x];
        }
        alive[bd] = false;
    }

    double q = 0.0;
    for (int c = 0; c < n; ++c) {
        if (alive[c]) q += within[c] - a[c] * a[c];
    }
    return q;
}

}  // namespace polnet
