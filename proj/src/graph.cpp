#include "polnet/graph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace polnet {

int BitAdjacency::common_neighbors_excluding(int i, int j, int a, int b) const {
    int c = common_neighbors(i, j);
    // removing edge (a,b) removes a common neighbor of (i,j) only when one
    // endpoint equals i or j and the other is adjacent to both
    if ((i == a && at(j, b) && at(a, b)) || (i == b && at(j, a) && at(a, b))) --c;
    else if ((j == a && at(i, b) && at(a, b)) || (j == b && at(i, a) && at(a, b))) --c;
    return c;
}

MultilayerGraph::MultilayerGraph(int year, std::vector<EntityId> vertices, std::vector<Layer> layers)
    : year_(year), vertices_(std::move(vertices)), layers_(std::move(layers)) {
    const int n = static_cast<int>(vertices_.size());
    std::set<std::string> names;
    for (const auto& l : layers_) {
        if (l.adj.size() != n) {
            throw std::invalid_argument("layer '" + l.name + "' has " + std::to_string(l.adj.size()) +
                                        " vertices, expected " + std::to_string(n));
        }
        if (!names.insert(l.name).second) {
            throw std::invalid_argument("duplicate layer name '" + l.name + "'");
        }
        for (int i = 0; i < n; ++i) {
            if (l.adj.at(i, i)) throw std::invalid_argument("self-loop in layer '" + l.name + "'");
        }
    }
}

int MultilayerGraph::vertex_index(const EntityId& id) const {
    auto it = std::find(vertices_.begin(), vertices_.end(), id);
    return it == vertices_.end() ? -1 : static_cast<int>(it - vertices_.begin());
}

int MultilayerGraph::layer_index(const std::string& name) const {
    for (int i = 0; i < n_layers(); ++i) {
        if (layers_[i].name == name) return i;
    }
    return -1;
}

GraphSequence::GraphSequence(std::vector<MultilayerGraph> graphs) : graphs_(std::move(graphs)) {
    for (std::size_t i = 1; i < graphs_.size(); ++i) {
        if (graphs_[i].year() != graphs_[i - 1].year() + 1) {
            throw std::invalid_argument("graph years must be strictly increasing and contiguous: " +
                                        std::to_string(graphs_[i - 1].year()) + " followed by " +
                                        std::to_string(graphs_[i].year()));
        }
    }
}

const MultilayerGraph* GraphSequence::find(int year) const {
    for (const auto& g : graphs_) {
        if (g.year() == year) return &g;
    }
    return nullptr;
}

CommunitySet::CommunitySet(int year, std::vector<EntityId> vertices, std::vector<std::string> layer_names,
                           std::vector<Community> communities)
    : year_(year),
      vertices_(std::move(vertices)),
      layer_names_(std::move(layer_names)),
      communities_(std::move(communities)) {
    const int n = static_cast<int>(vertices_.size());
    const int k = static_cast<int>(layer_names_.size());
    for (const auto& c : communities_) {
        if (c.vertices.size() < 2) throw std::invalid_argument("community with fewer than 2 vertices");
        if (c.layers.empty()) throw std::invalid_argument("community with empty layer set");
        for (int v : c.vertices) {
            if (v < 0 || v >= n) throw std::invalid_argument("community vertex index out of range");
        }
        for (int l : c.layers) {
            if (l < 0 || l >= k) throw std::invalid_argument("community layer index out of range");
        }
    }
}

ProjectedGraph::ProjectedGraph(int year, std::vector<EntityId> vertices)
    : year_(year), vertices_(std::move(vertices)),
      weights_(vertices_.size() * vertices_.size(), 0) {}

void ProjectedGraph::add_pair(int i, int j) {
    if (i == j) return;
    const std::size_t n = vertices_.size();
    ++weights_[static_cast<std::size_t>(i) * n + j];
    ++weights_[static_cast<std::size_t>(j) * n + i];
}

NamedAdjacency build_window_layer(const std::vector<TreatyEvent>& events, int target_year,
                                  int window_length, const std::string& layer_name,
                                  const std::vector<EntityId>* roster) {
    if (window_length < 1) throw std::invalid_argument("window_length must be >= 1");
    const int lo = target_year - window_length + 1;

    std::vector<const TreatyEvent*> in_window;
    for (const auto& e : events) {
        if (e.a.empty() || e.b.empty()) throw std::invalid_argument("empty entity identifier in event");
        if (e.year < lo || e.year > target_year) continue;
        if (e.a == e.b) continue;
        in_window.push_back(&e);
    }

    std::vector<EntityId> vertices;
    if (roster) {
        vertices = *roster;
        std::sort(vertices.begin(), vertices.end());
        vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
    } else {
        std::set<EntityId> vs;
        for (const auto* e : in_window) {
            vs.insert(e->a);
            vs.insert(e->b);
        }
        vertices.assign(vs.begin(), vs.end());
    }

    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < vertices.size(); ++i) index[vertices[i]] = static_cast<int>(i);

    BitAdjacency adj(static_cast<int>(vertices.size()));
    for (const auto* e : in_window) {
        auto ia = index.find(e->a);
        auto ib = index.find(e->b);
        if (ia == index.end() || ib == index.end()) continue;  // outside roster
        adj.set(ia->second, ib->second, true);
    }
    return NamedAdjacency{layer_name, std::move(vertices), std::move(adj)};
}

MultilayerGraph align_layers(int year, const std::vector<NamedAdjacency>& layers, AlignPolicy policy) {
    if (layers.empty()) throw std::invalid_argument("align_layers: need at least one layer");

    std::set<EntityId> merged(layers[0].vertices.begin(), layers[0].vertices.end());
    for (std::size_t li = 1; li < layers.size(); ++li) {
        std::set<EntityId> cur(layers[li].vertices.begin(), layers[li].vertices.end());
        if (policy == AlignPolicy::Union) {
            merged.insert(cur.begin(), cur.end());
        } else {
            std::set<EntityId> both;
            std::set_intersection(merged.begin(), merged.end(), cur.begin(), cur.end(),
                                  std::inserter(both, both.begin()));
            merged.swap(both);
        }
    }
    if (policy == AlignPolicy::Intersection && merged.empty()) {
        throw std::invalid_argument("align_layers: empty vertex set after intersection");
    }

    std::vector<EntityId> vertices(merged.begin(), merged.end());
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < vertices.size(); ++i) index[vertices[i]] = static_cast<int>(i);

    std::vector<Layer> out;
    out.reserve(layers.size());
    for (const auto& src : layers) {
        BitAdjacency adj(static_cast<int>(vertices.size()));
        // map source indices into the merged ordering
        std::vector<int> remap(src.vertices.size(), -1);
        for (std::size_t i = 0; i < src.vertices.size(); ++i) {
            auto it = index.find(src.vertices[i]);
            if (it != index.end()) remap[i] = it->second;
        }
        const int ns = static_cast<int>(src.vertices.size());
        for (int i = 0; i < ns; ++i) {
            if (remap[i] < 0) continue;
            for (int j : src.adj.neighbors(i)) {
                if (j > i && remap[j] >= 0) adj.set(remap[i], remap[j], true);
            }
        }
        out.push_back(Layer{src.name, std::move(adj)});
    }
    return MultilayerGraph(year, std::move(vertices), std::move(out));
}

ProjectedGraph project_communities(const CommunitySet& cs) {
    ProjectedGraph pg(cs.year(), cs.vertices());
    for (const auto& c : cs.communities()) {
        for (std::size_t a = 0; a < c.vertices.size(); ++a) {
            for (std::size_t b = a + 1; b < c.vertices.size(); ++b) {
                pg.add_pair(c.vertices[a], c.vertices[b]);
            }
        }
    }
    return pg;
}

}  // namespace polnet
