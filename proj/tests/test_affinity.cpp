#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "polnet/affinity.hpp"
#include "polnet/rng.hpp"

using namespace polnet;

namespace {

SymMatrix random_similarity(int n, std::uint64_t seed, bool strictly_positive = true) {
    std::vector<EntityId> ids;
    for (int i = 0; i < n; ++i) ids.push_back("V" + std::to_string(100 + i));
    SymMatrix s(ids);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double v = rng.uniform01();
            if (strictly_positive) v = 0.05 + 0.95 * v;
            s.set(i, j, v);
        }
    }
    return s;
}

// brute force: sort each row, intersect top-k sets
BitAdjacency mutual_knn_oracle(const SymMatrix& s, int k) {
    const int n = s.size();
    std::vector<std::set<int>> topk(n);
    for (int i = 0; i < n; ++i) {
        std::vector<int> cand;
        for (int j = 0; j < n; ++j) {
            if (j != i && s.at(i, j) > 0.0) cand.push_back(j);
        }
        std::sort(cand.begin(), cand.end(), [&](int a, int b) {
            if (s.at(i, a) != s.at(i, b)) return s.at(i, a) > s.at(i, b);
            return s.labels()[a] < s.labels()[b];
        });
        for (int r = 0; r < std::min<int>(k, static_cast<int>(cand.size())); ++r) topk[i].insert(cand[r]);
    }
    BitAdjacency adj(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (topk[i].count(j) && topk[j].count(i)) adj.set(i, j, true);
        }
    }
    return adj;
}

}  // namespace

TEST_CASE("ideal point distances match the published country pairs") {
    IdealPointTable t;
    t.by_year[1974] = {{"GRC", 0.68}, {"TUR", 0.42}, {"USA", 1.50}};
    auto s = ideal_similarity_matrix(t, 1974);
    // distances: GRC-TUR 0.26, GRC-USA 0.82, TUR-USA 1.08 (max)
    const int g = s.index_of("GRC"), tr = s.index_of("TUR"), us = s.index_of("USA");
    CHECK(s.at(g, tr) == doctest::Approx(1.0 - 0.26 / 1.08));
    CHECK(s.at(tr, us) == doctest::Approx(0.0));

    IdealPointTable t2;
    t2.by_year[1999] = {{"IND", -0.797}, {"PAK", -0.739}, {"USA", 1.0}};
    auto s2 = ideal_similarity_matrix(t2, 1999);
    const double dmax = 1.0 - (-0.797);
    CHECK(s2.at(s2.index_of("IND"), s2.index_of("PAK")) == doctest::Approx(1.0 - 0.058 / dmax));
}

TEST_CASE("equal ideal points give similarity one off the diagonal") {
    IdealPointTable t;
    t.by_year[1980] = {{"AAA", 0.3}, {"BBB", 0.3}, {"CCC", -0.4}};
    auto s = ideal_similarity_matrix(t, 1980);
    CHECK(s.at(s.index_of("AAA"), s.index_of("BBB")) == doctest::Approx(1.0));
    CHECK(s.at(0, 0) == 0.0);
}

TEST_CASE("singleton years are rejected") {
    IdealPointTable t;
    t.by_year[1980] = {{"AAA", 0.3}};
    CHECK_THROWS_AS(ideal_similarity_matrix(t, 1980), std::invalid_argument);
    CHECK_THROWS_AS(ideal_similarity_matrix(t, 1999), std::invalid_argument);
}

TEST_CASE("two vertices with k=1 form a single edge") {
    auto s = random_similarity(2, 1);
    auto adj = mutual_knn(s, 1);
    CHECK(adj.edge_count() == 1);
}

TEST_CASE("k = |V|-1 yields the complete graph on positive-similarity pairs") {
    auto s = random_similarity(8, 2);
    s.set(0, 1, 0.0);  // a zero-similarity pair never becomes an edge
    auto adj = mutual_knn(s, 7);
    CHECK_FALSE(adj.at(0, 1));
    long expected = 8 * 7 / 2 - 1;
    CHECK(adj.edge_count() == expected);
}

TEST_CASE("mutual knn equals the brute-force mutual-rank oracle") {
    for (int trial = 0; trial < 100; ++trial) {
        auto s = random_similarity(30, 500 + trial);
        CHECK(mutual_knn(s, 5) == mutual_knn_oracle(s, 5));
    }
}

TEST_CASE("mutual knn degree is bounded by k and edges grow with k") {
    auto s = random_similarity(25, 77);
    BitAdjacency prev(25);
    for (int k = 1; k < 25; ++k) {
        auto adj = mutual_knn(s, k);
        for (int i = 0; i < 25; ++i) CHECK(adj.degree(i) <= k);
        // monotone: edges at k stay present at k+1
        for (int i = 0; i < 25; ++i) {
            for (int j = i + 1; j < 25; ++j) {
                if (prev.at(i, j)) CHECK(adj.at(i, j));
            }
        }
        prev = adj;
    }
}

TEST_CASE("mutual knn is invariant under strictly increasing transforms") {
    auto s = random_similarity(20, 9);
    SymMatrix warped(s.labels());
    for (int i = 0; i < 20; ++i) {
        for (int j = i + 1; j < 20; ++j) warped.set(i, j, std::exp(3.0 * s.at(i, j)) + 1.0);
    }
    for (int k : {1, 3, 5, 10}) {
        CHECK(mutual_knn(s, k) == mutual_knn(warped, k));
    }
}

TEST_CASE("mutual knn validates k") {
    auto s = random_similarity(5, 4);
    CHECK_THROWS_AS(mutual_knn(s, 0), std::invalid_argument);
    CHECK_THROWS_AS(mutual_knn(s, 5), std::invalid_argument);
}
