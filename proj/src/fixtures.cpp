#include "polnet/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "polnet/csv.hpp"
#include "polnet/io.hpp"
#include "polnet/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace polnet {

namespace {

std::vector<EntityId> make_entities(int n) {
    std::vector<EntityId> out;
    for (int i = 0; i < n; ++i) {
        std::string id = "AAA";
        id[2] = static_cast<char>('A' + i % 26);
        id[1] = static_cast<char>('A' + (i / 26) % 26);
        out.push_back(id);
    }
    return out;
}

const std::vector<std::string>& cluster_vocab(int cluster) {
    static const std::vector<std::string> security = {
        "weapon", "nuclear", "disarm",  "missile", "treaty",  "deter",   "arsenal", "warhead",
        "bomb",   "militar", "conflict", "border",  "troop",   "invade",  "ceasefire", "hostil",
        "defens", "attack",  "secur",   "war"};
    static const std::vector<std::string> economy = {
        "trade",  "market", "export",  "tariff", "invest", "develop", "economi", "monetari",
        "debt",   "credit", "industri", "growth", "import", "commod",  "finance", "bank",
        "budget", "labor",  "capital", "fiscal"};
    static const std::vector<std::string> environment = {
        "climat", "pollut", "ecolog", "forest", "ocean",  "emiss",  "energi", "water",
        "specie", "carbon", "wast",   "degrad", "sustain", "habitat", "drought", "flood"};
    switch (cluster % 3) {
        case 0: return security;
        case 1: return economy;
        default: return environment;
    }
}

const std::vector<std::string>& shared_vocab() {
    static const std::vector<std::string> shared = {
        "nation", "govern", "council", "assembl", "deleg", "resolut", "member", "intern",
        "peopl",  "state",  "world",   "organ",   "charter", "session", "presid", "general"};
    return shared;
}

struct FixtureSpec {
    std::string kind;
    int n_entities = 25;
    int span_first = 1970;
    int span_last = 1990;
    std::vector<std::string> layers = {"science", "military", "commodities", "fisheries", "telecom"};

    // planted multilayer structure (planted-communities)
    int n_blocks = 1;
    int block_size = 10;
    int block_layer_count = 2;
    double p_in = 0.9;
    double noise_p = 0.05;

    // bloc-driven treaty rates (known-ergm-panel)
    double treaty_in_rate = 0.04;
    double treaty_out_rate = 0.008;

    // conflict onset model
    double coef_edges = -4.0;
    double coef_contig = 2.5;
    double coef_memory = 2.0;
    double contig_p = 0.15;

    // corpus
    int tokens_per_doc = 60;
    double shared_frac = 0.3;

    int bootstrap_reps = 2000;
    int predict_window = 5;
    int gof_sims = 50;
};

FixtureSpec parse_spec(const std::string& kind, const json& params) {
    FixtureSpec s;
    s.kind = kind;
    if (kind == "planted-communities") {
        // the block must hold a minority of each dense layer's edges or the
        // degree-preserving null absorbs it; 100 vertices at noise 0.05
        // leaves the block an order of magnitude above chance structure
        s.n_entities = 100;
        s.span_first = 1975;
        s.span_last = 1981;
        s.layers = {"science", "military", "commodities", "fisheries"};
    } else if (kind == "known-ergm-panel") {
        s.n_entities = 25;
    } else if (kind == "clustered-corpus") {
        s.n_entities = 16;
        s.span_first = 1970;
        s.span_last = 1976;
    } else {
        throw std::invalid_argument("generate_fixture: unknown kind '" + kind + "'");
    }
    s.n_entities = params.value("n_entities", s.n_entities);
    s.span_first = params.value("span_first", s.span_first);
    s.span_last = params.value("span_last", s.span_last);
    s.n_blocks = params.value("n_blocks", s.n_blocks);
    s.block_size = params.value("block_size", s.block_size);
    s.block_layer_count = params.value("block_layers", s.block_layer_count);
    s.p_in = params.value("p_in", s.p_in);
    s.noise_p = params.value("noise_p", s.noise_p);
    s.coef_edges = params.value("coef_edges", s.coef_edges);
    s.coef_contig = params.value("coef_contig", s.coef_contig);
    s.coef_memory = params.value("coef_memory", s.coef_memory);
    s.contig_p = params.value("contig_p", s.contig_p);
    s.tokens_per_doc = params.value("tokens_per_doc", s.tokens_per_doc);
    s.bootstrap_reps = params.value("bootstrap_reps", s.bootstrap_reps);
    s.predict_window = params.value("predict_window", s.predict_window);
    s.gof_sims = params.value("gof_sims", s.gof_sims);
    if (s.n_blocks * s.block_size > s.n_entities) {
        throw std::invalid_argument("generate_fixture: blocks exceed the vertex count");
    }
    if (s.span_first > s.span_last) throw std::invalid_argument("generate_fixture: bad span");
    return s;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Term term(TermKind kind, const std::string& cov = "") {
    Term t;
    t.kind = kind;
    t.cov = cov;
    return t;
}

std::vector<ModelConfig> default_models(const FixtureSpec& s) {
    std::vector<Term> base = {term(TermKind::Edges),
                              term(TermKind::AltTwoStars),
                              term(TermKind::FourCycles),
                              term(TermKind::Gwesp),
                              term(TermKind::JointNodal, "democracy"),
                              term(TermKind::EdgeCov, "contiguity"),
                              term(TermKind::RatioNodal, "capability"),
                              term(TermKind::EdgeCov, "trade"),
                              term(TermKind::EdgeCov, "sigo"),
                              term(TermKind::EdgeCov, "eigo"),
                              term(TermKind::Memory)};
    ModelConfig baseline;
    baseline.name = "baseline";
    baseline.spec.terms = base;

    auto insert_after_edges = [&](std::vector<Term> terms, Term extra) {
        terms.insert(terms.begin() + 1, extra);
        return terms;
    };

    ModelConfig weak;
    weak.name = "weak";
    weak.community_prefix = "weak_";
    weak.spec.terms = insert_after_edges(base, term(TermKind::EdgeCov, "weak_community_tie"));

    ModelConfig strong;
    strong.name = "strong";
    strong.community_prefix = "strong_";
    strong.spec.terms = insert_after_edges(base, term(TermKind::EdgeCov, "strong_community_tie"));

    ModelConfig node_weak;
    node_weak.name = "node_weak";
    node_weak.community_prefix = "weak_";
    node_weak.node_filter = "voted_and_spoke";
    node_weak.spec.terms = insert_after_edges(
        insert_after_edges(base, term(TermKind::BridgeNodal, "weak_bridge")),
        term(TermKind::EdgeCov, "weak_joint_member"));

    ModelConfig node_strong;
    node_strong.name = "node_strong";
    node_strong.community_prefix = "strong_";
    node_strong.node_filter = "voted_and_spoke";
    node_strong.spec.terms = insert_after_edges(
        insert_after_edges(base, term(TermKind::BridgeNodal, "strong_bridge")),
        term(TermKind::EdgeCov, "strong_joint_member"));

    if (s.kind == "known-ergm-panel") return {baseline, weak, strong, node_weak, node_strong};
    // smaller fixtures keep the run light
    ModelConfig small;
    small.name = "baseline";
    small.spec.terms = {term(TermKind::Edges), term(TermKind::EdgeCov, "contiguity"),
                        term(TermKind::Memory)};
    ModelConfig small_strong;
    small_strong.name = "strong";
    small_strong.community_prefix = "strong_";
    small_strong.spec.terms = {term(TermKind::Edges), term(TermKind::EdgeCov, "strong_community_tie"),
                               term(TermKind::EdgeCov, "contiguity"), term(TermKind::Memory)};
    return {small, small_strong};
}

}  // namespace

void generate_fixture(const std::string& kind, const std::string& params_json, std::uint64_t seed,
                      const std::string& out_dir) {
    json params;
    try {
        params = params_json.empty() ? json::object() : json::parse(params_json);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("generate_fixture: params are not valid JSON: ") + e.what());
    }
    FixtureSpec s = parse_spec(kind, params);
    fs::create_directories(out_dir);
    const auto entities = make_entities(s.n_entities);
    const int n = s.n_entities;
    auto bloc_of = [&](int i) { return i < n / 2 ? 0 : 1; };

    // planted vertex-layer blocks; outside planted-communities they are empty
    std::vector<std::vector<int>> blocks;
    if (kind == "planted-communities") {
        for (int b = 0; b < s.n_blocks; ++b) {
            std::vector<int> members;
            for (int i = b * s.block_size; i < (b + 1) * s.block_size; ++i) members.push_back(i);
            blocks.push_back(members);
        }
    }

    // --- treaty events ------------------------------------------------
    std::vector<TreatyEvent> events;
    if (kind == "planted-communities") {
        // one adjacency drawn at the span start so every year's window sees
        // exactly the planted structure
        Rng rng(Rng::derive(seed, {1}));
        const int block_layers = std::min<int>(s.block_layer_count, static_cast<int>(s.layers.size()));
        for (std::size_t l = 0; l < s.layers.size(); ++l) {
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    bool planted = false;
                    if (static_cast<int>(l) < block_layers) {
                        for (const auto& blk : blocks) {
                            if (std::binary_search(blk.begin(), blk.end(), i) &&
                                std::binary_search(blk.begin(), blk.end(), j)) {
                                planted = true;
                                break;
                            }
                        }
                    }
                    const double p = planted ? s.p_in : s.noise_p;
                    if (rng.bernoulli(p)) {
                        events.push_back(TreatyEvent{entities[i], entities[j], s.span_first, s.layers[l]});
                    }
                }
            }
        }
    } else {
        Rng rng(Rng::derive(seed, {1}));
        for (int year = s.span_first - 9; year <= s.span_last; ++year) {
            for (std::size_t l = 0; l < s.layers.size(); ++l) {
                for (int i = 0; i < n; ++i) {
                    for (int j = i + 1; j < n; ++j) {
                        const double rate = bloc_of(i) == bloc_of(j) ? s.treaty_in_rate : s.treaty_out_rate;
                        if (rng.bernoulli(rate)) {
                            events.push_back(TreatyEvent{entities[i], entities[j], year, s.layers[l]});
                        }
                    }
                }
            }
        }
    }
    write_treaty_events(events, (fs::path(out_dir) / "treaty_events.csv").string());

    // --- ideal points ---------------------------------------------------
    {
        Rng rng(Rng::derive(seed, {2}));
        IdealPointTable table;
        std::vector<double> entity_offset(n);
        for (int i = 0; i < n; ++i) entity_offset[i] = 0.15 * rng.normal();
        for (int year = s.span_first; year <= s.span_last; ++year) {
            for (int i = 0; i < n; ++i) {
                const double mean = bloc_of(i) == 0 ? 0.8 : -0.8;
                table.by_year[year][entities[i]] = mean + entity_offset[i] + 0.1 * rng.normal();
            }
        }
        write_ideal_points(table, (fs::path(out_dir) / "ideal_points.csv").string());
    }

    // --- speeches -------------------------------------------------------
    {
        Rng rng(Rng::derive(seed, {3}));
        const std::string dir = (fs::path(out_dir) / "speeches").string();
        for (int year = s.span_first; year <= s.span_last; ++year) {
            const int session = year - s.span_first + 1;
            for (int i = 0; i < n; ++i) {
                const auto& own = cluster_vocab(bloc_of(i));
                const auto& shared = shared_vocab();
                std::string text;
                for (int t = 0; t < s.tokens_per_doc; ++t) {
                    const bool from_shared = rng.uniform01() < s.shared_frac;
                    const auto& pool = from_shared ? shared : own;
                    text += pool[rng.uniform_int(pool.size())];
                    text += (t + 1) % 12 == 0 ? ".\n" : " ";
                }
                write_corpus_file(dir, entities[i], session, year, text);
            }
        }
    }

    // --- conflict panel ---------------------------------------------------
    std::vector<std::vector<char>> contig(n, std::vector<char>(n, 0));
    {
        Rng rng(Rng::derive(seed, {4}));
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                contig[i][j] = contig[j][i] = rng.bernoulli(s.contig_p) ? 1 : 0;
            }
        }
    }
    {
        Rng rng(Rng::derive(seed, {5}));
        std::vector<ConflictRow> rows;
        std::vector<std::vector<char>> prev(n, std::vector<char>(n, 0));
        for (int year = s.span_first; year <= s.span_last; ++year) {
            std::vector<std::vector<char>> cur(n, std::vector<char>(n, 0));
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    const double eta =
                        s.coef_edges + s.coef_contig * contig[i][j] + s.coef_memory * prev[i][j];
                    if (rng.bernoulli(logistic(eta))) {
                        cur[i][j] = cur[j][i] = 1;
                        rows.push_back(ConflictRow{entities[i], entities[j], year,
                                                   rng.bernoulli(0.5) ? 5 : 4});
                    }
                }
            }
            // a few sub-threshold disputes that loaders must ignore
            for (int extra = 0; extra < 3; ++extra) {
                const int i = static_cast<int>(rng.uniform_int(n));
                const int j = static_cast<int>(rng.uniform_int(n));
                if (i == j) continue;
                rows.push_back(ConflictRow{entities[std::min(i, j)], entities[std::max(i, j)], year,
                                           1 + static_cast<int>(rng.uniform_int(3))});
            }
            prev = cur;
        }
        write_conflict_rows(rows, (fs::path(out_dir) / "conflict.csv").string());
    }

    // --- covariates -------------------------------------------------------
    {
        Rng rng(Rng::derive(seed, {6}));
        std::map<int, std::map<EntityId, double>> democracy, capability;
        std::vector<double> dem_base(n), cap_base(n);
        for (int i = 0; i < n; ++i) {
            dem_base[i] = bloc_of(i) == 0 ? 7.0 : 3.0;
            cap_base[i] = std::exp(rng.normal());
        }
        for (int year = s.span_first; year <= s.span_last; ++year) {
            for (int i = 0; i < n; ++i) {
                double d = dem_base[i] + std::round(2.0 * rng.normal());
                democracy[year][entities[i]] = std::clamp(d, 0.0, 10.0);
                capability[year][entities[i]] = cap_base[i] * std::exp(0.1 * rng.normal());
            }
        }
        write_nodal_covariate(democracy, (fs::path(out_dir) / "democracy.csv").string());
        write_nodal_covariate(capability, (fs::path(out_dir) / "capability.csv").string());

        std::map<int, std::vector<DyadValue>> contiguity, trade, sigo, eigo;
        for (int year = s.span_first; year <= s.span_last; ++year) {
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    contiguity[year].push_back(
                        DyadValue{entities[i], entities[j], static_cast<double>(contig[i][j])});
                    trade[year].push_back(DyadValue{entities[i], entities[j], 0.2 * rng.uniform01()});
                    sigo[year].push_back(
                        DyadValue{entities[i], entities[j], static_cast<double>(rng.uniform_int(15))});
                    eigo[year].push_back(
                        DyadValue{entities[i], entities[j], static_cast<double>(rng.uniform_int(30))});
                }
            }
        }
        write_dyadic_covariate(contiguity, (fs::path(out_dir) / "contiguity.csv").string());
        write_dyadic_covariate(trade, (fs::path(out_dir) / "trade.csv").string());
        write_dyadic_covariate(sigo, (fs::path(out_dir) / "sigo.csv").string());
        write_dyadic_covariate(eigo, (fs::path(out_dir) / "eigo.csv").string());
    }

    // --- roster -----------------------------------------------------------
    {
        std::string out = "entity\n";
        for (const auto& id : entities) out += id + "\n";
        write_text_file((fs::path(out_dir) / "roster.csv").string(), out);
    }

    // --- manifest -----------------------------------------------------------
    DatasetManifest m;
    m.base_dir = out_dir;
    m.span_first = s.span_first;
    m.span_last = s.span_last;
    m.treaty_events = "treaty_events.csv";
    m.ideal_points = "ideal_points.csv";
    m.speech_dir = "speeches";
    m.conflict = "conflict.csv";
    m.roster = "roster.csv";
    m.nodal_covariates = {{"democracy", "democracy.csv"}, {"capability", "capability.csv"}};
    m.dyadic_covariates = {{"contiguity", "contiguity.csv"},
                           {"trade", "trade.csv"},
                           {"sigo", "sigo.csv"},
                           {"eigo", "eigo.csv"}};
    m.embedding.dimension = 50;
    m.embedding.x_max = 15.0;
    m.embedding.epochs = 25;
    m.models = default_models(s);
    m.bootstrap_reps = s.bootstrap_reps;
    m.gof_sims = s.gof_sims;
    m.predict_window = s.predict_window;
    m.gof_model = m.models.front().name;
    m.predict_model = m.models.front().name;
    write_manifest(m, (fs::path(out_dir) / "manifest.json").string());

    // --- ground truth sidecar -------------------------------------------------
    json sidecar;
    sidecar["kind"] = kind;
    sidecar["seed"] = seed;
    sidecar["span"] = {{"first", s.span_first}, {"last", s.span_last}};
    sidecar["entities"] = entities;
    if (kind == "planted-communities") {
        json jblocks = json::array();
        for (const auto& blk : blocks) {
            json jb;
            json vs = json::array();
            for (int v : blk) vs.push_back(entities[v]);
            jb["vertices"] = vs;
            json ls = json::array();
            for (int l = 0; l < std::min<int>(s.block_layer_count, static_cast<int>(s.layers.size())); ++l) {
                ls.push_back(s.layers[l]);
            }
            jb["layers"] = ls;
            jblocks.push_back(jb);
        }
        sidecar["blocks"] = jblocks;
        sidecar["noise_p"] = s.noise_p;
        sidecar["p_in"] = s.p_in;
    } else if (kind == "known-ergm-panel") {
        sidecar["true_coefficients"] = {{"edges", s.coef_edges},
                                        {"edgecov.contiguity", s.coef_contig},
                                        {"memory", s.coef_memory}};
    } else if (kind == "clustered-corpus") {
        json clusters = json::array();
        json c0 = json::array();
        for (const auto& w : cluster_vocab(0)) c0.push_back(w);
        json c1 = json::array();
        for (const auto& w : cluster_vocab(1)) c1.push_back(w);
        clusters.push_back(c0);
        clusters.push_back(c1);
        sidecar["token_clusters"] = clusters;
        json sh = json::array();
        for (const auto& w : shared_vocab()) sh.push_back(w);
        sidecar["shared_tokens"] = sh;
    }
    write_text_file((fs::path(out_dir) / "sidecar.json").string(), sidecar.dump(2) + "\n");
}

}  // namespace polnet
