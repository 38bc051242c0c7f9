#include "polnet/embed.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "polnet/rng.hpp"
#include "polnet/stemmer.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polnet {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
        if (c >= 'a' && c <= 'z') {
            cur.push_back(static_cast<char>(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

TokenizedCorpus preprocess(const std::vector<RawDocument>& raw_docs, long min_count, double min_doc_frac) {
    if (raw_docs.empty()) throw std::invalid_argument("preprocess: empty corpus");
    if (min_doc_frac < 0.0 || min_doc_frac > 1.0) {
        throw std::invalid_argument("preprocess: min_doc_frac must be in [0,1]");
    }

    std::vector<std::vector<std::string>> stemmed(raw_docs.size());
    std::map<std::string, long> corpus_freq;
    std::map<std::string, long> doc_freq;
    for (std::size_t d = 0; d < raw_docs.size(); ++d) {
        std::set<std::string> seen;
        for (auto& tok : tokenize(raw_docs[d].text)) {
            std::string stem = porter_stem(tok);
            ++corpus_freq[stem];
            seen.insert(stem);
            stemmed[d].push_back(std::move(stem));
        }
        for (const auto& s : seen) ++doc_freq[s];
    }

    const double doc_threshold = min_doc_frac * static_cast<double>(raw_docs.size());
    TokenizedCorpus corpus;
    for (const auto& [tok, cf] : corpus_freq) {
        if (cf >= min_count && static_cast<double>(doc_freq[tok]) >= doc_threshold) {
            corpus.vocab.push_back(tok);
        }
    }
    corpus.corpus_freq.assign(corpus.vocab.size(), 0);
    corpus.doc_freq.assign(corpus.vocab.size(), 0);
    for (std::size_t i = 0; i < corpus.vocab.size(); ++i) {
        corpus.corpus_freq[i] = corpus_freq[corpus.vocab[i]];
        corpus.doc_freq[i] = doc_freq[corpus.vocab[i]];
    }

    corpus.ids.reserve(raw_docs.size());
    corpus.docs.resize(raw_docs.size());
    corpus.emptied.assign(raw_docs.size(), false);
    for (std::size_t d = 0; d < raw_docs.size(); ++d) {
        corpus.ids.push_back(raw_docs[d].id);
        for (const auto& s : stemmed[d]) {
            int idx = corpus.vocab_index(s);
            if (idx >= 0) corpus.docs[d].push_back(idx);
        }
        if (corpus.docs[d].empty() && !stemmed[d].empty()) corpus.emptied[d] = true;
    }
    return corpus;
}

CooccurrenceMatrix count_cooccurrence(const TokenizedCorpus& corpus, int window) {
    if (window < 1) throw std::invalid_argument("count_cooccurrence: window must be >= 1");
    CooccurrenceMatrix m;
    m.vocab_size = static_cast<int>(corpus.vocab.size());
    for (const auto& doc : corpus.docs) {
        const int n = static_cast<int>(doc.size());
        for (int i = 0; i < n; ++i) {
            const int hi = std::min(n, i + window + 1);
            for (int j = i + 1; j < hi; ++j) {
                m.add(doc[i], doc[j], 1.0 / static_cast<double>(j - i));
            }
        }
    }
    return m;
}

double glove_weight(double x, double x_max, double alpha) {
    if (x >= x_max) return 1.0;
    return std::pow(x / x_max, alpha);
}

double glove_entry_loss_grad(std::span<const double> u, std::span<const double> v, double bu, double bv,
                             double p, double x_max, double alpha, bool use_bias,
                             std::span<double> grad_u, std::span<double> grad_v, double* grad_bu,
                             double* grad_bv) {
    double dot = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) dot += u[k] * v[k];
    if (use_bias) dot += bu + bv;
    const double f = glove_weight(p, x_max, alpha);
    const double diff = dot - std::log(p);
    const double fdiff = f * diff;
    if (!grad_u.empty()) {
        for (std::size_t k = 0; k < u.size(); ++k) grad_u[k] = fdiff * v[k];
    }
    if (!grad_v.empty()) {
        for (std::size_t k = 0; k < v.size(); ++k) grad_v[k] = fdiff * u[k];
    }
    if (grad_bu) *grad_bu = use_bias ? fdiff : 0.0;
    if (grad_bv) *grad_bv = use_bias ? fdiff : 0.0;
    return 0.5 * fdiff * diff;
}

namespace {

struct GloveEntry {
    int i;
    int j;
    double p;
};

}  // namespace

EmbeddingSpace train_embeddings(const CooccurrenceMatrix& x, const std::vector<std::string>& vocab,
                                const TrainConfig& cfg, std::uint64_t seed,
                                std::vector<double>* loss_trace) {
    if (x.entries.empty()) throw std::invalid_argument("train_embeddings: empty co-occurrence matrix");
    const int w = static_cast<int>(vocab.size());
    const int d = cfg.dimension;
    if (w == 0 || d <= 0) throw std::invalid_argument("train_embeddings: bad dimensions");

    // training examples: both orientations of each off-diagonal entry
    std::vector<GloveEntry> entries;
    entries.reserve(x.entries.size() * 2);
    {
        // deterministic order independent of hash-map iteration
        std::vector<std::pair<std::uint64_t, double>> sorted(x.entries.begin(), x.entries.end());
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [key, p] : sorted) {
            const int i = static_cast<int>(key >> 32);
            const int j = static_cast<int>(key & 0xffffffffULL);
            if (i >= w || j >= w) throw std::invalid_argument("co-occurrence index outside vocabulary");
            if (p <= 0.0) throw std::invalid_argument("co-occurrence entries must be positive");
            entries.push_back({i, j, p});
            if (i != j) entries.push_back({j, i, p});
        }
    }

    Rng init_rng(Rng::derive(seed, {0}));
    const double span = 0.5 / d;
    std::vector<double> main_vec(static_cast<std::size_t>(w) * d);
    std::vector<double> ctx_vec(static_cast<std::size_t>(w) * d);
    std::vector<double> main_bias(w, 0.0), ctx_bias(w, 0.0);
    for (auto& val : main_vec) val = (init_rng.uniform01() * 2.0 - 1.0) * span;
    for (auto& val : ctx_vec) val = (init_rng.uniform01() * 2.0 - 1.0) * span;

    // AdaGrad accumulators start at 1 so the first update uses the base rate
    std::vector<double> g_main(static_cast<std::size_t>(w) * d, 1.0);
    std::vector<double> g_ctx(static_cast<std::size_t>(w) * d, 1.0);
    std::vector<double> g_mb(w, 1.0), g_cb(w, 1.0);

    std::vector<std::size_t> order(entries.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

    const double lr = cfg.learning_rate;
    double epoch_loss = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::derive(seed, {1, static_cast<std::uint64_t>(epoch)}));
        for (std::size_t k = order.size(); k > 1; --k) {
            std::swap(order[k - 1], order[shuffle_rng.uniform_int(k)]);
        }
        double total_loss = 0.0;
        const long n_entries = static_cast<long>(order.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : total_loss) num_threads(std::max(1, cfg.threads)) if (cfg.threads > 1)
#endif
        for (long kk = 0; kk < n_entries; ++kk) {
            const GloveEntry& e = entries[order[kk]];
            double* u = main_vec.data() + static_cast<std::size_t>(e.i) * d;
            double* v = ctx_vec.data() + static_cast<std::size_t>(e.j) * d;
            double dot = 0.0;
            for (int c = 0; c < d; ++c) dot += u[c] * v[c];
            if (cfg.use_bias) dot += main_bias[e.i] + ctx_bias[e.j];
            const double f = glove_weight(e.p, cfg.x_max, cfg.weight_exponent);
            const double diff = dot - std::log(e.p);
            const double fdiff = f * diff;
            total_loss += 0.5 * fdiff * diff;

            double* gu = g_main.data() + static_cast<std::size_t>(e.i) * d;
            double* gv = g_ctx.data() + static_cast<std::size_t>(e.j) * d;
            for (int c = 0; c < d; ++c) {
                const double du = fdiff * v[c];
                const double dv = fdiff * u[c];
                u[c] -= lr * du / std::sqrt(gu[c]);
                v[c] -= lr * dv / std::sqrt(gv[c]);
                gu[c] += du * du;
                gv[c] += dv * dv;
            }
            if (cfg.use_bias) {
                main_bias[e.i] -= lr * fdiff / std::sqrt(g_mb[e.i]);
                ctx_bias[e.j] -= lr * fdiff / std::sqrt(g_cb[e.j]);
                g_mb[e.i] += fdiff * fdiff;
                g_cb[e.j] += fdiff * fdiff;
            }
        }
        epoch_loss = total_loss / static_cast<double>(entries.size());
        if (!std::isfinite(epoch_loss)) {
            throw std::runtime_error("train_embeddings: non-finite loss at epoch " +
                                     std::to_string(epoch) + "; lower the learning rate");
        }
        if (loss_trace) loss_trace->push_back(epoch_loss);
    }

    EmbeddingSpace space;
    space.dimension = d;
    space.vocab = vocab;
    space.vectors.resize(static_cast<std::size_t>(w) * d);
    for (std::size_t k = 0; k < space.vectors.size(); ++k) {
        space.vectors[k] = 0.5 * (main_vec[k] + ctx_vec[k]);
    }
    space.meta = TrainMeta{cfg.x_max, d, cfg.epochs, epoch_loss};
    return space;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

std::vector<ScoredToken> rank_by_cosine(const EmbeddingSpace& space, const std::vector<double>& target,
                                        const std::set<int>& excluded, int k) {
    std::vector<ScoredToken> scored;
    const int w = static_cast<int>(space.vocab.size());
    for (int i = 0; i < w; ++i) {
        if (excluded.count(i)) continue;
        scored.push_back({space.vocab[i], cosine_similarity(space.vec(i), target)});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredToken& a, const ScoredToken& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.token < b.token;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(k);
    return scored;
}

}  // namespace

std::vector<ScoredToken> nearest_neighbors(const EmbeddingSpace& space, const std::string& token, int k) {
    const int q = space.vocab_index(token);
    if (q < 0) throw std::invalid_argument("nearest_neighbors: unknown token '" + token + "'");
    if (k >= static_cast<int>(space.vocab.size())) {
        throw std::invalid_argument("nearest_neighbors: k must be smaller than the vocabulary");
    }
    auto qv = space.vec(q);
    return rank_by_cosine(space, std::vector<double>(qv.begin(), qv.end()), {q}, k);
}

std::vector<ScoredToken> analogy(const EmbeddingSpace& space, const std::vector<std::string>& positive,
                                 const std::vector<std::string>& negative, int k) {
    if (positive.empty() && negative.empty()) {
        throw std::invalid_argument("analogy: need at least one query token");
    }
    std::vector<double> target(space.dimension, 0.0);
    std::set<int> excluded;
    for (const auto& t : positive) {
        int i = space.vocab_index(t);
        if (i < 0) throw std::invalid_argument("analogy: unknown token '" + t + "'");
        excluded.insert(i);
        auto v = space.vec(i);
        for (int c = 0; c < space.dimension; ++c) target[c] += v[c];
    }
    for (const auto& t : negative) {
        int i = space.vocab_index(t);
        if (i < 0) throw std::invalid_argument("analogy: unknown token '" + t + "'");
        excluded.insert(i);
        auto v = space.vec(i);
        for (int c = 0; c < space.dimension; ++c) target[c] -= v[c];
    }
    return rank_by_cosine(space, target, excluded, k);
}

}  // namespace polnet
