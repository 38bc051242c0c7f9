#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "polnet/graph.hpp"
#include "polnet/rng.hpp"

using namespace polnet;

namespace {

std::vector<TreatyEvent> random_events(int count, std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<EntityId> pool = {"ARG", "BRA", "CHL", "DEU", "EGY", "FRA", "GBR", "IND"};
    std::vector<TreatyEvent> events;
    for (int i = 0; i < count; ++i) {
        TreatyEvent e;
        e.a = pool[rng.uniform_int(pool.size())];
        e.b = pool[rng.uniform_int(pool.size())];
        e.year = 1960 + static_cast<int>(rng.uniform_int(31));
        e.layer = "science";
        events.push_back(e);
    }
    return events;
}

}  // namespace

TEST_CASE("window layer keeps events inside the inclusive ten-year window") {
    std::vector<TreatyEvent> events = {{"AAA", "BBB", 1965, "l"}};
    auto layer = build_window_layer(events, 1974, 10);
    REQUIRE(layer.vertices.size() == 2);
    CHECK(layer.adj.at(0, 1));

    events[0].year = 1964;
    auto out = build_window_layer(events, 1974, 10);
    CHECK(out.adj.edge_count() == 0);  // 1964 is outside [1965, 1974]
}

TEST_CASE("window layer ignores later events and self events, collapses duplicates") {
    std::vector<TreatyEvent> events = {
        {"AAA", "BBB", 1980, "l"},  // future relative to target
        {"CCC", "CCC", 1974, "l"},
        {"AAA", "CCC", 1973, "l"},
        {"CCC", "AAA", 1974, "l"},  // duplicate pair, other order
    };
    auto layer = build_window_layer(events, 1974, 10);
    CHECK(layer.adj.edge_count() == 1);
    const int a = static_cast<int>(std::find(layer.vertices.begin(), layer.vertices.end(), "AAA") -
                                   layer.vertices.begin());
    const int c = static_cast<int>(std::find(layer.vertices.begin(), layer.vertices.end(), "CCC") -
                                   layer.vertices.begin());
    CHECK(layer.adj.at(a, c));
}

TEST_CASE("window layer equals the per-dyad brute-force scan on random events") {
    auto events = random_events(200, 99);
    for (int target = 1960; target <= 1990; ++target) {
        auto layer = build_window_layer(events, target, 10);
        // oracle: dyad connected iff some event with both entities falls in window
        std::map<EntityId, int> index;
        for (std::size_t i = 0; i < layer.vertices.size(); ++i) index[layer.vertices[i]] = static_cast<int>(i);
        std::set<std::pair<EntityId, EntityId>> expected;
        for (const auto& e : events) {
            if (e.a == e.b || e.year > target || e.year < target - 9) continue;
            expected.insert({std::min(e.a, e.b), std::max(e.a, e.b)});
        }
        long count = 0;
        for (const auto& [a, b] : expected) {
            REQUIRE(index.count(a));
            REQUIRE(index.count(b));
            CHECK(layer.adj.at(index[a], index[b]));
            ++count;
        }
        CHECK(layer.adj.edge_count() == count);
    }
}

TEST_CASE("window construction is order-independent and idempotent") {
    auto events = random_events(120, 3);
    auto base = build_window_layer(events, 1975, 10);
    Rng rng(17);
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
        for (std::size_t k = events.size(); k > 1; --k) {
            std::swap(events[k - 1], events[rng.uniform_int(k)]);
        }
        auto again = build_window_layer(events, 1975, 10);
        CHECK(again.vertices == base.vertices);
        CHECK(again.adj == base.adj);
    }
}

TEST_CASE("every constructed layer is symmetric with zero diagonal") {
    auto events = random_events(150, 5);
    auto layer = build_window_layer(events, 1980, 10);
    for (int i = 0; i < layer.adj.size(); ++i) {
        CHECK_FALSE(layer.adj.at(i, i));
        for (int j = 0; j < layer.adj.size(); ++j) CHECK(layer.adj.at(i, j) == layer.adj.at(j, i));
    }
}

TEST_CASE("align_layers union fills missing vertices as isolates") {
    BitAdjacency ab(2);
    ab.set(0, 1, true);
    BitAdjacency bc(2);
    bc.set(0, 1, true);
    NamedAdjacency l1{"x", {"AAA", "BBB"}, ab};
    NamedAdjacency l2{"y", {"BBB", "CCC"}, bc};
    auto g = align_layers(1980, {l1, l2}, AlignPolicy::Union);
    CHECK(g.vertices() == std::vector<EntityId>{"AAA", "BBB", "CCC"});
    CHECK(g.layers()[0].adj.at(0, 1));        // AAA-BBB survives in layer x
    CHECK(g.layers()[0].adj.degree(2) == 0);  // CCC isolate in layer x
    CHECK(g.layers()[1].adj.at(1, 2));        // BBB-CCC in layer y
}

TEST_CASE("align_layers with identical vertex sets is the identity") {
    Rng rng(7);
    std::vector<EntityId> ids = {"AAA", "BBB", "CCC", "DDD"};
    BitAdjacency adj(4);
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            if (rng.bernoulli(0.5)) adj.set(i, j, true);
        }
    }
    auto g = align_layers(1980, {NamedAdjacency{"a", ids, adj}, NamedAdjacency{"b", ids, adj}},
                          AlignPolicy::Intersection);
    CHECK(g.vertices() == ids);
    CHECK(g.layers()[0].adj == adj);
    CHECK(g.layers()[1].adj == adj);
}

TEST_CASE("align_layers union vertex set equals the set-union oracle") {
    Rng rng(23);
    const std::vector<EntityId> pool = {"AAA", "BBB", "CCC", "DDD", "EEE", "FFF", "GGG"};
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<NamedAdjacency> layers;
        std::set<EntityId> oracle;
        for (int l = 0; l < 3; ++l) {
            std::set<EntityId> pick;
            while (pick.size() < 2) pick.insert(pool[rng.uniform_int(pool.size())]);
            for (const auto& id : pool) {
                if (rng.bernoulli(0.4)) pick.insert(id);
            }
            std::vector<EntityId> ids(pick.begin(), pick.end());
            layers.push_back(NamedAdjacency{"l" + std::to_string(l), ids,
                                            BitAdjacency(static_cast<int>(ids.size()))});
            oracle.insert(ids.begin(), ids.end());
        }
        auto g = align_layers(1980, layers, AlignPolicy::Union);
        CHECK(g.vertices() == std::vector<EntityId>(oracle.begin(), oracle.end()));
    }
}

TEST_CASE("align_layers rejects an empty intersection") {
    NamedAdjacency l1{"x", {"AAA"}, BitAdjacency(1)};
    NamedAdjacency l2{"y", {"BBB"}, BitAdjacency(1)};
    CHECK_THROWS_AS(align_layers(1980, {l1, l2}, AlignPolicy::Intersection), std::invalid_argument);
}

TEST_CASE("project_communities counts shared memberships") {
    std::vector<EntityId> ids = {"AAA", "BBB", "CCC", "DDD"};
    CommunitySet cs(1980, ids, {"l"}, {Community{{0, 1, 2}, {0}, 1.0}, Community{{0, 1}, {0}, 1.0}});
    auto pg = project_communities(cs);
    CHECK(pg.weight(0, 1) == 2);
    CHECK(pg.weight(0, 2) == 1);
    CHECK(pg.weight(1, 2) == 1);
    // DDD sits in no community: zero row
    for (int j = 0; j < 4; ++j) CHECK(pg.weight(3, j) == 0);
    for (int i = 0; i < 4; ++i) CHECK(pg.weight(i, i) == 0);
}

TEST_CASE("project_communities equals the pairwise-count oracle and is monotone") {
    Rng rng(41);
    std::vector<EntityId> ids;
    for (int i = 0; i < 15; ++i) ids.push_back("V" + std::to_string(i));
    std::vector<Community> comms;
    for (int c = 0; c < 20; ++c) {
        std::set<int> members;
        while (members.size() < 2 + rng.uniform_int(5)) {
            members.insert(static_cast<int>(rng.uniform_int(15)));
        }
        comms.push_back(Community{{members.begin(), members.end()}, {0}, 1.0});

        CommunitySet cs(1980, ids, {"l"}, comms);
        auto pg = project_communities(cs);
        for (int i = 0; i < 15; ++i) {
            for (int j = 0; j < 15; ++j) {
                int expected = 0;
                for (const auto& cm : comms) {
                    const bool has_i = std::binary_search(cm.vertices.begin(), cm.vertices.end(), i);
                    const bool has_j = std::binary_search(cm.vertices.begin(), cm.vertices.end(), j);
                    if (i != j && has_i && has_j) ++expected;
                }
                CHECK(pg.weight(i, j) == expected);
            }
        }
        if (c > 0) {
            // adding a community never decreases any weight
            CommunitySet prev(1980, ids, {"l"}, {comms.begin(), comms.end() - 1});
            auto pg_prev = project_communities(prev);
            for (int i = 0; i < 15; ++i) {
                for (int j = 0; j < 15; ++j) CHECK(pg.weight(i, j) >= pg_prev.weight(i, j));
            }
        }
    }
}

TEST_CASE("multilayer graph construction validates its invariants") {
    BitAdjacency a(2);
    a.set(0, 1, true);
    CHECK_THROWS(MultilayerGraph(1980, {"AAA", "BBB"}, {Layer{"x", a}, Layer{"x", a}}));
    CHECK_THROWS(MultilayerGraph(1980, {"AAA"}, {Layer{"x", a}}));
}

TEST_CASE("graph sequences must be contiguous") {
    auto mk = [](int year) {
        return MultilayerGraph(year, {"AAA", "BBB"}, {Layer{"x", BitAdjacency(2)}});
    };
    std::vector<MultilayerGraph> ok;
    ok.push_back(mk(1970));
    ok.push_back(mk(1971));
    CHECK_NOTHROW(GraphSequence{ok});
    std::vector<MultilayerGraph> gap;
    gap.push_back(mk(1970));
    gap.push_back(mk(1972));
    CHECK_THROWS(GraphSequence{gap});
}
