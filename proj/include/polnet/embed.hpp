#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "polnet/graph.hpp"

namespace polnet {

struct DocId {
    EntityId entity;
    int year = 0;
    auto operator<=>(const DocId&) const = default;
};

struct RawDocument {
    DocId id;
    std::string text;
};

/// Stemmed, frequency-trimmed corpus with its vocabulary. Documents that
/// lose every token keep their slot and are flagged.
struct TokenizedCorpus {
    std::vector<DocId> ids;
    std::vector<std::vector<int>> docs;  // token indices into vocab
    std::vector<std::string> vocab;      // sorted
    std::vector<long> corpus_freq;
    std::vector<long> doc_freq;
    std::vector<bool> emptied;  // true when trimming removed every token

    int vocab_index(const std::string& token) const {
        auto it = std::lower_bound(vocab.begin(), vocab.end(), token);
        if (it == vocab.end() || *it != token) return -1;
        return static_cast<int>(it - vocab.begin());
    }
};

/// Sparse symmetric co-occurrence counts, keyed by canonical (lo, hi) pair.
struct CooccurrenceMatrix {
    int vocab_size = 0;
    std::unordered_map<std::uint64_t, double> entries;

    static std::uint64_t key(int i, int j) {
        if (i > j) std::swap(i, j);
        return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
    }

    double at(int i, int j) const {
        auto it = entries.find(key(i, j));
        return it == entries.end() ? 0.0 : it->second;
    }

    void add(int i, int j, double w) { entries[key(i, j)] += w; }
};

struct TrainMeta {
    double x_max = 15.0;
    int dimension = 50;
    int epochs = 0;
    double final_loss = 0.0;
};

/// Averaged main+context vectors, one per vocabulary token.
struct EmbeddingSpace {
    int dimension = 0;
    std::vector<std::string> vocab;  // sorted
    std::vector<double> vectors;     // vocab x dimension, row-major
    TrainMeta meta;

    std::span<const double> vec(int i) const {
        return {vectors.data() + static_cast<std::size_t>(i) * dimension,
                static_cast<std::size_t>(dimension)};
    }
    int vocab_index(const std::string& token) const {
        auto it = std::lower_bound(vocab.begin(), vocab.end(), token);
        if (it == vocab.end() || *it != token) return -1;
        return static_cast<int>(it - vocab.begin());
    }
};

struct TrainConfig {
    int dimension = 50;
    double x_max = 15.0;
    int epochs = 25;
    double weight_exponent = 0.75;
    double learning_rate = 0.05;
    bool use_bias = true;
    int threads = 1;  // determinism is guaranteed only at 1
};

struct ScoredToken {
    std::string token;
    double score;
};

/// Lowercases and splits into ASCII alphabetic runs; everything else is a
/// delimiter.
std::vector<std::string> tokenize(const std::string& text);

/// Lowercase, stem, and keep only tokens with corpus frequency >= min_count
/// and document frequency >= min_doc_frac * |documents|.
TokenizedCorpus preprocess(const std::vector<RawDocument>& raw_docs, long min_count = 5,
                           double min_doc_frac = 0.05);

/// Symmetric windowed counts with harmonic 1/offset weighting.
CooccurrenceMatrix count_cooccurrence(const TokenizedCorpus& corpus, int window = 5);

/// Weighted least-squares embedding fit by AdaGrad over the nonzero
/// co-occurrence entries; returns averaged main/context vectors.
EmbeddingSpace train_embeddings(const CooccurrenceMatrix& x, const std::vector<std::string>& vocab,
                                const TrainConfig& cfg, std::uint64_t seed,
                                std::vector<double>* loss_trace = nullptr);

std::vector<ScoredToken> nearest_neighbors(const EmbeddingSpace& space, const std::string& token, int k);

std::vector<ScoredToken> analogy(const EmbeddingSpace& space, const std::vector<std::string>& positive,
                                 const std::vector<std::string>& negative, int k);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// f(x) = (min(x, x_max)/x_max)^alpha.
double glove_weight(double x, double x_max, double alpha);

/// Loss and analytic gradients of one co-occurrence term,
/// 0.5 * f(p) * (u.v + bu + bv - log p)^2. Gradient spans may be null.
double glove_entry_loss_grad(std::span<const double> u, std::span<const double> v, double bu, double bv,
                             double p, double x_max, double alpha, bool use_bias,
                             std::span<double> grad_u, std::span<double> grad_v, double* grad_bu,
                             double* grad_bv);

}  // namespace polnet
