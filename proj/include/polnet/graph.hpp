#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace polnet {

using EntityId = std::string;

/// Symmetric binary adjacency with zero diagonal, stored as bit rows.
/// set() writes both triangles; the diagonal is never set.
class BitAdjacency {
public:
    BitAdjacency() : n_(0), words_(0) {}
    explicit BitAdjacency(int n) : n_(n), words_((n + 63) / 64), bits_(static_cast<std::size_t>(n) * words_, 0) {}

    int size() const { return n_; }

    bool at(int i, int j) const {
        return (bits_[row_off(i) + j / 64] >> (j % 64)) & 1ULL;
    }

    void set(int i, int j, bool v) {
        if (i == j) return;
        set_one(i, j, v);
        set_one(j, i, v);
    }

    int degree(int i) const {
        int d = 0;
        for (int w = 0; w < words_; ++w) d += __builtin_popcountll(bits_[row_off(i) + w]);
        return d;
    }

    long edge_count() const {
        long total = 0;
        for (int i = 0; i < n_; ++i) total += degree(i);
        return total / 2;
    }

    /// |N(i) ∩ N(j)|.
    int common_neighbors(int i, int j) const {
        int c = 0;
        for (int w = 0; w < words_; ++w) {
            c += __builtin_popcountll(bits_[row_off(i) + w] & bits_[row_off(j) + w]);
        }
        return c;
    }

    /// |N(i) ∩ N(j)| as if edge (a,b) were absent.
    int common_neighbors_excluding(int i, int j, int a, int b) const;

    std::vector<int> neighbors(int i) const {
        std::vector<int> out;
        for (int w = 0; w < words_; ++w) {
            std::uint64_t bitsw = bits_[row_off(i) + w];
            while (bitsw) {
                int b = __builtin_ctzll(bitsw);
                out.push_back(w * 64 + b);
                bitsw &= bitsw - 1;
            }
        }
        return out;
    }

    const std::uint64_t* row(int i) const { return bits_.data() + row_off(i); }
    int words() const { return words_; }

    bool operator==(const BitAdjacency& o) const = default;

private:
    std::size_t row_off(int i) const { return static_cast<std::size_t>(i) * words_; }

    void set_one(int i, int j, bool v) {
        std::uint64_t& w = bits_[row_off(i) + j / 64];
        const std::uint64_t mask = 1ULL << (j % 64);
        if (v)
            w |= mask;
        else
            w &= ~mask;
    }

    int n_;
    int words_;
    std::vector<std::uint64_t> bits_;
};

/// One adjacency together with the entity labels of its rows.
struct NamedAdjacency {
    std::string name;
    std::vector<EntityId> vertices;
    BitAdjacency adj;
};

struct Layer {
    std::string name;
    BitAdjacency adj;
};

/// One year's multilayer graph: k binary layers over a single aligned
/// vertex ordering. Construction validates symmetry, zero diagonal and
/// unique layer names.
class MultilayerGraph {
public:
    MultilayerGraph(int year, std::vector<EntityId> vertices, std::vector<Layer> layers);

    int year() const { return year_; }
    const std::vector<EntityId>& vertices() const { return vertices_; }
    const std::vector<Layer>& layers() const { return layers_; }
    int n_vertices() const { return static_cast<int>(vertices_.size()); }
    int n_layers() const { return static_cast<int>(layers_.size()); }
    int vertex_index(const EntityId& id) const;  // -1 if absent
    int layer_index(const std::string& name) const;

private:
    int year_;
    std::vector<EntityId> vertices_;
    std::vector<Layer> layers_;
};

/// Year-indexed sequence. Years must be strictly increasing and contiguous.
class GraphSequence {
public:
    GraphSequence() = default;
    explicit GraphSequence(std::vector<MultilayerGraph> graphs);

    const std::vector<MultilayerGraph>& graphs() const { return graphs_; }
    const MultilayerGraph* find(int year) const;

private:
    std::vector<MultilayerGraph> graphs_;
};

/// One detected community: vertex subset, layer subset and its score.
/// Indices refer to the source graph's vertex/layer order.
struct Community {
    std::vector<int> vertices;  // sorted, >= 2 members
    std::vector<int> layers;    // sorted, non-empty
    double score = 0.0;
};

class CommunitySet {
public:
    CommunitySet() = default;
    CommunitySet(int year, std::vector<EntityId> vertices, std::vector<std::string> layer_names,
                 std::vector<Community> communities);

    int year() const { return year_; }
    const std::vector<EntityId>& vertices() const { return vertices_; }
    const std::vector<std::string>& layer_names() const { return layer_names_; }
    const std::vector<Community>& communities() const { return communities_; }

private:
    int year_ = 0;
    std::vector<EntityId> vertices_;
    std::vector<std::string> layer_names_;
    std::vector<Community> communities_;
};

/// Single-mode projection: weight(i,j) = number of communities containing
/// both i and j.
class ProjectedGraph {
public:
    ProjectedGraph(int year, std::vector<EntityId> vertices);

    int year() const { return year_; }
    const std::vector<EntityId>& vertices() const { return vertices_; }
    int weight(int i, int j) const { return weights_[static_cast<std::size_t>(i) * vertices_.size() + j]; }
    void add_pair(int i, int j);

private:
    int year_;
    std::vector<EntityId> vertices_;
    std::vector<int> weights_;
};

struct TreatyEvent {
    EntityId a;
    EntityId b;
    int year = 0;
    std::string layer;
};

enum class AlignPolicy { Union, Intersection };

/// Moving-window layer: edge (a,b) iff some event falls in
/// [target_year - window_length + 1, target_year]. Later events and
/// self-events are ignored; duplicate pairs collapse.
NamedAdjacency build_window_layer(const std::vector<TreatyEvent>& events, int target_year,
                                  int window_length, const std::string& layer_name = "",
                                  const std::vector<EntityId>* roster = nullptr);

/// Applies one vertex ordering (sorted union or intersection of the input
/// vertex sets) to all layers. Union fills missing vertices as isolates.
MultilayerGraph align_layers(int year, const std::vector<NamedAdjacency>& layers, AlignPolicy policy);

ProjectedGraph project_communities(const CommunitySet& cs);

}  // namespace polnet
