#include "polnet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "json.hpp"
#include "polnet/csv.hpp"
#include "polnet/io.hpp"
#include "polnet/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace polnet {

namespace {

struct Setting {
    EmbeddingSetting emb;
    int emb_idx = 0;
    double prop = 0.2;
    int prop_idx = 0;
};

std::string etag(const EmbeddingSetting& e) {
    return "d" + std::to_string(e.dimension) + "x" + std::to_string(static_cast<int>(std::lround(e.x_max)));
}

std::string ptag(double p) { return "p" + std::to_string(static_cast<int>(std::lround(p * 100))); }

std::string setting_tag(const Setting& s) { return etag(s.emb) + "_" + ptag(s.prop); }

class StaleStage : public std::runtime_error {
public:
    explicit StaleStage(const std::string& stage)
        : std::runtime_error("stage '" + stage + "' artifacts are missing or stale; run '" + stage +
                             "' first"),
          stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

const std::map<std::string, std::vector<std::string>>& stage_deps() {
    static const std::map<std::string, std::vector<std::string>> deps = {
        {"build-graphs", {}},
        {"embed", {}},
        {"distances", {"embed"}},
        {"detect", {"build-graphs", "distances"}},
        {"derive-covariates", {"detect"}},
        {"fit", {"derive-covariates"}},
        {"gof", {"fit"}},
        {"predict", {"derive-covariates"}},
        {"report", {"detect", "fit"}},
    };
    return deps;
}

class Pipeline {
public:
    Pipeline(const PipelineOptions& opts) : opts_(opts) {
        manifest_ = load_manifest(opts.manifest_path);
        manifest_hash_ = file_content_hash(opts.manifest_path);
        if (!opts.grid_path.empty()) {
            apply_grid(opts.grid_path);
            manifest_hash_ += "+" + file_content_hash(opts.grid_path);
        }
        if (opts.reps) manifest_.bootstrap_reps = *opts.reps;
        if (opts.gof_sims) manifest_.gof_sims = *opts.gof_sims;
        year_lo_ = opts.year_lo.value_or(manifest_.span_first);
        year_hi_ = opts.year_hi.value_or(manifest_.span_last);
        if (year_lo_ < manifest_.span_first || year_hi_ > manifest_.span_last || year_lo_ > year_hi_) {
            throw DataError("--years range [" + std::to_string(year_lo_) + "," + std::to_string(year_hi_) +
                            "] must lie inside the manifest span [" + std::to_string(manifest_.span_first) +
                            "," + std::to_string(manifest_.span_last) + "]");
        }
        fs::create_directories(opts_.out_dir);
        load_state();
        settings_.clear();
        for (std::size_t e = 0; e < manifest_.embedding_grid.size(); ++e) {
            for (std::size_t p = 0; p < manifest_.extraction.init_proportions.size(); ++p) {
                settings_.push_back(Setting{manifest_.embedding_grid[e], static_cast<int>(e),
                                            manifest_.extraction.init_proportions[p], static_cast<int>(p)});
            }
        }
    }

    void run_stage(const std::string& stage) {
        for (const auto& dep : stage_deps().at(stage)) {
            if (auto stale = find_stale(dep)) throw StaleStage(*stale);
        }
        const std::string cfg_hash = stage_config_hash(stage);
        if (!opts_.force && is_fresh(stage)) {
            log_stage(stage, "skip", cfg_hash, 0.0, {}, {});
            std::cout << stage << ": skipped (cached)\n";
            return;
        }
        const auto started = std::chrono::steady_clock::now();
        notes_.clear();
        std::vector<std::string> outputs = execute(stage);
        const double elapsed =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

        json recorded = json::object();
        for (const auto& path : outputs) recorded[rel(path)] = file_content_hash(path);
        state_["stages"][stage] = {{"config_hash", cfg_hash}, {"outputs", recorded}};
        save_state();
        log_stage(stage, "run", cfg_hash, elapsed, outputs, notes_);
        std::cout << stage << ": done (" << outputs.size() << " artifacts)\n";
    }

private:
    PipelineOptions opts_;
    DatasetManifest manifest_;
    std::string manifest_hash_;
    int year_lo_ = 0, year_hi_ = 0;
    std::vector<Setting> settings_;
    json state_;
    std::vector<std::string> notes_;

    std::string out(const std::string& rel_path) const {
        fs::path p = fs::path(opts_.out_dir) / rel_path;
        fs::create_directories(p.parent_path());
        return p.string();
    }

    std::string rel(const std::string& path) const {
        return fs::relative(path, opts_.out_dir).string();
    }

    void apply_grid(const std::string& path) {
        json g;
        try {
            g = json::parse(read_text_file(path));
        } catch (const json::exception& e) {
            throw DataError(path + ": grid file is not valid JSON: " + e.what());
        }
        if (g.contains("embedding_grid")) {
            manifest_.embedding_grid.clear();
            for (const auto& je : g["embedding_grid"]) {
                manifest_.embedding_grid.push_back(
                    EmbeddingSetting{je.value("dimension", manifest_.embedding.dimension),
                                     je.value("x_max", manifest_.embedding.x_max)});
            }
            if (manifest_.embedding_grid.empty()) throw DataError(path + ": empty embedding_grid");
        }
        if (g.contains("init_proportions")) {
            manifest_.extraction.init_proportions = g["init_proportions"].get<std::vector<double>>();
            if (manifest_.extraction.init_proportions.empty()) {
                throw DataError(path + ": empty init_proportions");
            }
        }
    }

    void load_state() {
        const std::string path = out("state.json");
        if (fs::exists(path)) {
            try {
                state_ = json::parse(read_text_file(path));
            } catch (...) {
                state_ = json::object();
            }
        }
        if (!state_.contains("stages")) state_["stages"] = json::object();
    }

    void save_state() { write_text_file(out("state.json"), state_.dump(2) + "\n"); }

    std::string stage_config_hash(const std::string& stage) {
        std::string key = manifest_hash_ + "|" + stage + "|" + std::to_string(year_lo_) + ":" +
                          std::to_string(year_hi_) + "|" + std::to_string(opts_.seed);
        if (stage == "fit") key += "|reps=" + std::to_string(manifest_.bootstrap_reps);
        if (stage == "gof") key += "|sims=" + std::to_string(manifest_.gof_sims);
        for (const auto& dep : stage_deps().at(stage)) {
            key += "|" + dep + "=";
            if (state_["stages"].contains(dep)) {
                for (const auto& [p, h] : state_["stages"][dep]["outputs"].items()) {
                    key += h.get<std::string>();
                }
            }
        }
        return string_hash(key);
    }

    bool is_fresh(const std::string& stage) {
        if (!state_["stages"].contains(stage)) return false;
        for (const auto& dep : stage_deps().at(stage)) {
            if (!is_fresh(dep)) return false;
        }
        const auto& entry = state_["stages"][stage];
        if (entry["config_hash"].get<std::string>() != stage_config_hash(stage)) return false;
        for (const auto& [p, h] : entry["outputs"].items()) {
            const std::string full = (fs::path(opts_.out_dir) / p).string();
            if (!fs::exists(full) || file_content_hash(full) != h.get<std::string>()) return false;
        }
        return true;
    }

    std::optional<std::string> find_stale(const std::string& stage) {
        for (const auto& dep : stage_deps().at(stage)) {
            if (auto inner = find_stale(dep)) return inner;
        }
        if (!is_fresh(stage)) return stage;
        return std::nullopt;
    }

    void log_stage(const std::string& stage, const std::string& action, const std::string& cfg_hash,
                   double elapsed_ms, const std::vector<std::string>& outputs,
                   const std::vector<std::string>& notes) {
        json line;
        line["stage"] = stage;
        line["action"] = action;
        line["seed"] = opts_.seed;
        line["config_hash"] = cfg_hash;
        line["elapsed_ms"] = elapsed_ms;
        line["timestamp"] = static_cast<long>(std::chrono::duration_cast<std::chrono::seconds>(
                                                  std::chrono::system_clock::now().time_since_epoch())
                                                  .count());
        json outs = json::array();
        for (const auto& o : outputs) outs.push_back({{"path", rel(o)}, {"hash", file_content_hash(o)}});
        line["outputs"] = outs;
        line["notes"] = notes;
        std::ofstream log(out("runlog.jsonl"), std::ios::app);
        log << line.dump() << "\n";
    }

    std::vector<std::string> execute(const std::string& stage) {
        if (stage == "build-graphs") return stage_build_graphs();
        if (stage == "embed") return stage_embed();
        if (stage == "distances") return stage_distances();
        if (stage == "detect") return stage_detect();
        if (stage == "derive-covariates") return stage_derive_covariates();
        if (stage == "fit") return stage_fit();
        if (stage == "gof") return stage_gof();
        if (stage == "predict") return stage_predict();
        if (stage == "report") return stage_report();
        throw DataError("unknown stage '" + stage + "'");
    }

    // ----- corpus helpers -------------------------------------------------

    std::vector<RawDocument> corpus_in_span() const {
        auto docs = load_corpus_dir(manifest_.resolve(manifest_.speech_dir));
        std::vector<RawDocument> kept;
        for (auto& d : docs) {
            if (d.id.year >= manifest_.span_first && d.id.year <= manifest_.span_last) {
                kept.push_back(std::move(d));
            }
        }
        std::sort(kept.begin(), kept.end(),
                  [](const RawDocument& a, const RawDocument& b) { return a.id < b.id; });
        return kept;
    }

    std::string embed_path(const Setting& s, std::optional<int> year) const {
        std::string name = "embed/embeddings_" + etag(s.emb);
        if (year) name += "_" + std::to_string(*year);
        return name + ".txt";
    }

    // ----- stages -----------------------------------------------------------

    std::vector<std::string> stage_build_graphs() {
        auto events = load_treaty_events(manifest_.resolve(manifest_.treaty_events), &manifest_.layer_map);
        std::set<std::string> layer_names;
        for (const auto& e : events) layer_names.insert(e.layer);
        for (const auto& [code, name] : manifest_.layer_map) layer_names.insert(name);

        std::map<std::string, std::vector<TreatyEvent>> by_layer;
        for (const auto& e : events) by_layer[e.layer].push_back(e);

        std::vector<MultilayerGraph> graphs;
        for (int year = year_lo_; year <= year_hi_; ++year) {
            std::vector<NamedAdjacency> layers;
            for (const auto& name : layer_names) {
                auto it = by_layer.find(name);
                static const std::vector<TreatyEvent> kEmpty;
                layers.push_back(build_window_layer(it == by_layer.end() ? kEmpty : it->second, year,
                                                    manifest_.window_length, name));
            }
            graphs.push_back(align_layers(year, layers, AlignPolicy::Union));
        }
        const std::string path = out("graphs/strong.csv");
        write_edgelists(graphs, path);
        return {path};
    }

    std::vector<std::string> stage_embed() {
        auto raw = corpus_in_span();
        std::vector<std::string> outputs;
        for (std::size_t e = 0; e < manifest_.embedding_grid.size(); ++e) {
            Setting s;
            s.emb = manifest_.embedding_grid[e];
            s.emb_idx = static_cast<int>(e);
            TrainConfig cfg = manifest_.embedding;
            cfg.dimension = s.emb.dimension;
            cfg.x_max = s.emb.x_max;
            cfg.threads = opts_.threads;

            if (manifest_.per_year_embeddings) {
                for (int year = year_lo_; year <= year_hi_; ++year) {
                    std::vector<RawDocument> year_docs;
                    for (const auto& d : raw) {
                        if (d.id.year == year) year_docs.push_back(d);
                    }
                    if (year_docs.empty()) continue;
                    auto corpus = preprocess(year_docs, manifest_.min_count, manifest_.min_doc_frac);
                    auto x = count_cooccurrence(corpus, manifest_.cooccurrence_window);
                    auto space = train_embeddings(x, corpus.vocab, cfg,
                                                  Rng::derive(opts_.seed, {10, e, static_cast<std::uint64_t>(year)}));
                    const std::string path = out(embed_path(s, year));
                    write_embeddings(space, path);
                    outputs.push_back(path);
                }
            } else {
                auto corpus = preprocess(raw, manifest_.min_count, manifest_.min_doc_frac);
                for (std::size_t d = 0; d < corpus.emptied.size(); ++d) {
                    if (corpus.emptied[d]) {
                        notes_.push_back("document " + corpus.ids[d].entity + "/" +
                                         std::to_string(corpus.ids[d].year) + " lost every token in trimming");
                    }
                }
                auto x = count_cooccurrence(corpus, manifest_.cooccurrence_window);
                auto space = train_embeddings(x, corpus.vocab, cfg, Rng::derive(opts_.seed, {10, e}));
                const std::string path = out(embed_path(s, std::nullopt));
                write_embeddings(space, path);
                outputs.push_back(path);
                json meta = {{"dimension", space.meta.dimension},
                             {"x_max", space.meta.x_max},
                             {"epochs", space.meta.epochs},
                             {"final_loss", space.meta.final_loss},
                             {"vocabulary", space.vocab.size()}};
                const std::string meta_path = out("embed/meta_" + etag(s.emb) + ".json");
                write_text_file(meta_path, meta.dump(2) + "\n");
                outputs.push_back(meta_path);
            }
        }
        return outputs;
    }

    std::vector<std::string> stage_distances() {
        std::vector<std::string> outputs;
        const RwmdMode mode =
            manifest_.rwmd_mode == "one-sided" ? RwmdMode::OneSided : RwmdMode::SymmetricMax;

        // vote similarities from ideal points
        auto ideal = load_ideal_points(manifest_.resolve(manifest_.ideal_points));
        for (int year = year_lo_; year <= year_hi_; ++year) {
            auto it = ideal.by_year.find(year);
            if (it == ideal.by_year.end() || it->second.size() < 2) {
                notes_.push_back("year " + std::to_string(year) + ": fewer than 2 ideal points, vote layer skipped");
                continue;
            }
            const std::string path = out("distances/vote_sim_" + std::to_string(year) + ".csv");
            write_similarity_csv(ideal_similarity_matrix(ideal, year), path);
            outputs.push_back(path);
        }

        // speech similarities per embedding setting
        auto raw = corpus_in_span();
        std::optional<TokenizedCorpus> global_corpus;
        if (!manifest_.per_year_embeddings) {
            global_corpus = preprocess(raw, manifest_.min_count, manifest_.min_doc_frac);
        }
        for (std::size_t e = 0; e < manifest_.embedding_grid.size(); ++e) {
            Setting s;
            s.emb = manifest_.embedding_grid[e];
            s.emb_idx = static_cast<int>(e);
            std::optional<EmbeddingSpace> global_space;
            if (!manifest_.per_year_embeddings) {
                global_space = load_embeddings(out(embed_path(s, std::nullopt)));
            }
            for (int year = year_lo_; year <= year_hi_; ++year) {
                const TokenizedCorpus* corpus = nullptr;
                const EmbeddingSpace* space = nullptr;
                TokenizedCorpus year_corpus;
                EmbeddingSpace year_space;
                if (manifest_.per_year_embeddings) {
                    std::vector<RawDocument> year_docs;
                    for (const auto& d : raw) {
                        if (d.id.year == year) year_docs.push_back(d);
                    }
                    if (year_docs.empty()) continue;
                    year_corpus = preprocess(year_docs, manifest_.min_count, manifest_.min_doc_frac);
                    year_space = load_embeddings(out(embed_path(s, year)));
                    corpus = &year_corpus;
                    space = &year_space;
                } else {
                    corpus = &*global_corpus;
                    space = &*global_space;
                }

                std::vector<BowVector> bows;
                std::vector<EntityId> labels;
                for (std::size_t d = 0; d < corpus->ids.size(); ++d) {
                    if (corpus->ids[d].year != year) continue;
                    if (corpus->docs[d].empty()) {
                        notes_.push_back("year " + std::to_string(year) + ": empty document for " +
                                         corpus->ids[d].entity + " skipped in distances");
                        continue;
                    }
                    bows.push_back(make_bow(corpus->ids[d], corpus->docs[d]));
                    labels.push_back(corpus->ids[d].entity);
                }
                if (bows.size() < 2) {
                    notes_.push_back("year " + std::to_string(year) + ": fewer than 2 speeches, layer skipped");
                    continue;
                }
                CostOracle costs(*space);
                auto sim = speech_similarity_matrix(bows, labels, costs, mode, &notes_, opts_.threads);
                const std::string path =
                    out("distances/speech_sim_" + etag(s.emb) + "_" + std::to_string(year) + ".csv");
                write_similarity_csv(sim, path);
                outputs.push_back(path);
            }
        }
        return outputs;
    }

    CommunitySet empty_communities(int year) const {
        return CommunitySet(year, {}, {}, {});
    }

    std::vector<std::string> stage_detect() {
        std::vector<std::string> outputs;
        auto graphs = load_edgelists(out("graphs/strong.csv"));

        const auto& props = manifest_.extraction.init_proportions;
        // strong communities per init proportion
        for (std::size_t p = 0; p < props.size(); ++p) {
            ExtractionConfig cfg = manifest_.extraction;
            cfg.init_proportions = {props[p]};
            std::vector<CommunitySet> sets;
            for (int year = year_lo_; year <= year_hi_; ++year) {
                const MultilayerGraph* g = nullptr;
                for (const auto& gg : graphs) {
                    if (gg.year() == year) g = &gg;
                }
                if (!g) {
                    sets.push_back(empty_communities(year));
                    continue;
                }
                sets.push_back(extract_with_threads(
                    *g, cfg, Rng::derive(opts_.seed, {1, static_cast<std::uint64_t>(year), p}),
                    opts_.threads));
            }
            const std::string path = out("detect/communities_strong_" + ptag(props[p]) + ".json");
            write_communities(sets, path);
            outputs.push_back(path);
        }

        // weak communities per embedding setting x proportion
        for (std::size_t e = 0; e < manifest_.embedding_grid.size(); ++e) {
            const std::string et = etag(manifest_.embedding_grid[e]);
            for (std::size_t p = 0; p < props.size(); ++p) {
                ExtractionConfig cfg = manifest_.extraction;
                cfg.init_proportions = {props[p]};
                std::vector<CommunitySet> sets;
                for (int year = year_lo_; year <= year_hi_; ++year) {
                    std::vector<NamedAdjacency> layers;
                    const std::string vote_path = out("distances/vote_sim_" + std::to_string(year) + ".csv");
                    if (fs::exists(vote_path)) {
                        SymMatrix sim = load_similarity_csv(vote_path);
                        layers.push_back(
                            NamedAdjacency{"votes", sim.labels(), mutual_knn(sim, knn_for(sim.size()))});
                    }
                    const std::string speech_path =
                        out("distances/speech_sim_" + et + "_" + std::to_string(year) + ".csv");
                    if (fs::exists(speech_path)) {
                        SymMatrix sim = load_similarity_csv(speech_path);
                        layers.push_back(
                            NamedAdjacency{"speeches", sim.labels(), mutual_knn(sim, knn_for(sim.size()))});
                    }
                    if (layers.empty()) {
                        sets.push_back(empty_communities(year));
                        continue;
                    }
                    MultilayerGraph weak = align_layers(year, layers, AlignPolicy::Union);
                    sets.push_back(extract_with_threads(
                        weak, cfg, Rng::derive(opts_.seed, {2, static_cast<std::uint64_t>(year), p, e}),
                        opts_.threads));
                }
                const std::string path =
                    out("detect/communities_weak_" + et + "_" + ptag(props[p]) + ".json");
                write_communities(sets, path);
                outputs.push_back(path);
            }
        }
        return outputs;
    }

    int knn_for(int n_vertices) const { return std::min(manifest_.knn_k, std::max(1, n_vertices - 1)); }

    // panel over [lo-1, hi] so memory terms have their lag year
    PanelSeries build_base_panel() const {
        std::vector<EntityId> roster;
        if (!manifest_.roster.empty()) {
            CsvReader reader(manifest_.resolve(manifest_.roster), {"entity"});
            while (auto row = reader.next()) roster.push_back((*row)[0]);
        } else {
            std::set<EntityId> ids;
            for (const auto& r : load_conflict_rows(manifest_.resolve(manifest_.conflict))) {
                ids.insert(r.a);
                ids.insert(r.b);
            }
            roster.assign(ids.begin(), ids.end());
        }
        std::sort(roster.begin(), roster.end());
        roster.erase(std::unique(roster.begin(), roster.end()), roster.end());

        auto conflict = load_conflict_rows(manifest_.resolve(manifest_.conflict));
        std::map<std::string, std::map<int, std::map<EntityId, double>>> nodal;
        for (const auto& [name, path] : manifest_.nodal_covariates) {
            nodal[name] = load_nodal_covariate(manifest_.resolve(path));
        }
        std::map<std::string, std::map<int, std::vector<DyadValue>>> dyadic;
        for (const auto& [name, path] : manifest_.dyadic_covariates) {
            dyadic[name] = load_dyadic_covariate(manifest_.resolve(path));
        }

        std::map<EntityId, int> index;
        for (std::size_t i = 0; i < roster.size(); ++i) index[roster[i]] = static_cast<int>(i);
        const int n = static_cast<int>(roster.size());
        const double nan = std::numeric_limits<double>::quiet_NaN();

        PanelSeries panel;
        const int panel_lo = std::max(manifest_.span_first, year_lo_ - 1);
        for (int year = panel_lo; year <= year_hi_; ++year) {
            YearSlice slice;
            slice.year = year;
            slice.vertices = roster;
            slice.outcome = BitAdjacency(n);
            for (const auto& r : conflict) {
                if (r.year != year || r.hostility < 4 || r.a == r.b) continue;
                auto ia = index.find(r.a);
                auto ib = index.find(r.b);
                if (ia != index.end() && ib != index.end()) slice.outcome.set(ia->second, ib->second, true);
            }
            for (const auto& [name, by_year] : dyadic) {
                SymMatrix m(roster);
                for (int i = 0; i < n; ++i) {
                    for (int j = i + 1; j < n; ++j) m.set(i, j, nan);
                }
                auto it = by_year.find(year);
                if (it != by_year.end()) {
                    for (const auto& dv : it->second) {
                        auto ia = index.find(dv.a);
                        auto ib = index.find(dv.b);
                        if (ia != index.end() && ib != index.end() && ia->second != ib->second) {
                            m.set(ia->second, ib->second, dv.value);
                        }
                    }
                }
                slice.dyadic[name] = std::move(m);
            }
            for (const auto& [name, by_year] : nodal) {
                std::vector<double> v(n, nan);
                auto it = by_year.find(year);
                if (it != by_year.end()) {
                    for (const auto& [id, val] : it->second) {
                        auto ii = index.find(id);
                        if (ii != index.end()) v[ii->second] = val;
                    }
                }
                slice.nodal[name] = std::move(v);
            }
            panel.years.push_back(std::move(slice));
        }
        return panel;
    }

    std::vector<std::string> stage_derive_covariates() {
        std::vector<std::string> outputs;
        PanelSeries base = build_base_panel();
        const auto& props = manifest_.extraction.init_proportions;

        auto emit = [&](const std::vector<CommunitySet>& sets, const std::string& prefix,
                        const std::string& tag) {
            PanelSeries derived = derive_covariates(sets, base, prefix);
            std::map<int, std::vector<DyadValue>> tie, joint;
            std::map<int, std::map<EntityId, double>> bridge;
            for (const auto& slice : derived.years) {
                const auto& tie_m = slice.dyadic.at(prefix + "community_tie");
                const auto& joint_m = slice.dyadic.at(prefix + "joint_member");
                const auto& bridge_v = slice.nodal.at(prefix + "bridge");
                const int n = static_cast<int>(slice.vertices.size());
                for (int i = 0; i < n; ++i) {
                    for (int j = i + 1; j < n; ++j) {
                        tie[slice.year].push_back(
                            DyadValue{slice.vertices[i], slice.vertices[j], tie_m.at(i, j)});
                        joint[slice.year].push_back(
                            DyadValue{slice.vertices[i], slice.vertices[j], joint_m.at(i, j)});
                    }
                    bridge[slice.year][slice.vertices[i]] = bridge_v[i];
                }
            }
            const std::string tie_path = out("covariates/" + prefix + "community_tie_" + tag + ".csv");
            const std::string joint_path = out("covariates/" + prefix + "joint_member_" + tag + ".csv");
            const std::string bridge_path = out("covariates/" + prefix + "bridge_" + tag + ".csv");
            write_dyadic_covariate(tie, tie_path);
            write_dyadic_covariate(joint, joint_path);
            write_nodal_covariate(bridge, bridge_path);
            outputs.push_back(tie_path);
            outputs.push_back(joint_path);
            outputs.push_back(bridge_path);
        };

        for (std::size_t p = 0; p < props.size(); ++p) {
            auto sets = load_communities(out("detect/communities_strong_" + ptag(props[p]) + ".json"));
            emit(sets, "strong_", ptag(props[p]));
        }
        for (std::size_t e = 0; e < manifest_.embedding_grid.size(); ++e) {
            for (std::size_t p = 0; p < props.size(); ++p) {
                const std::string tag = etag(manifest_.embedding_grid[e]) + "_" + ptag(props[p]);
                auto sets = load_communities(out("detect/communities_weak_" + tag + ".json"));
                emit(sets, "weak_", tag);
            }
        }
        return outputs;
    }

    /// Base panel plus the derived community covariates of one setting.
    PanelSeries setting_panel(const Setting& s) const {
        PanelSeries panel = build_base_panel();
        auto add_dyadic = [&](const std::string& name, const std::string& path) {
            auto by_year = load_dyadic_covariate(path);
            for (auto& slice : panel.years) {
                SymMatrix m(slice.vertices);
                auto it = by_year.find(slice.year);
                if (it != by_year.end()) {
                    std::map<EntityId, int> index;
                    for (std::size_t i = 0; i < slice.vertices.size(); ++i) {
                        index[slice.vertices[i]] = static_cast<int>(i);
                    }
                    for (const auto& dv : it->second) {
                        auto ia = index.find(dv.a);
                        auto ib = index.find(dv.b);
                        if (ia != index.end() && ib != index.end() && ia->second != ib->second) {
                            m.set(ia->second, ib->second, dv.value);
                        }
                    }
                }
                slice.dyadic[name] = std::move(m);
            }
        };
        auto add_nodal = [&](const std::string& name, const std::string& path) {
            auto by_year = load_nodal_covariate(path);
            for (auto& slice : panel.years) {
                std::vector<double> v(slice.vertices.size(), 0.0);
                auto it = by_year.find(slice.year);
                if (it != by_year.end()) {
                    for (std::size_t i = 0; i < slice.vertices.size(); ++i) {
                        auto iv = it->second.find(slice.vertices[i]);
                        if (iv != it->second.end()) v[i] = iv->second;
                    }
                }
                slice.nodal[name] = std::move(v);
            }
        };
        const std::string pt = ptag(s.prop);
        const std::string wt = etag(s.emb) + "_" + pt;
        add_dyadic("strong_community_tie", out("covariates/strong_community_tie_" + pt + ".csv"));
        add_dyadic("strong_joint_member", out("covariates/strong_joint_member_" + pt + ".csv"));
        add_nodal("strong_bridge", out("covariates/strong_bridge_" + pt + ".csv"));
        add_dyadic("weak_community_tie", out("covariates/weak_community_tie_" + wt + ".csv"));
        add_dyadic("weak_joint_member", out("covariates/weak_joint_member_" + wt + ".csv"));
        add_nodal("weak_bridge", out("covariates/weak_bridge_" + wt + ".csv"));
        return panel;
    }

    /// Restricts every slice to entities that both voted and spoke that year.
    PanelSeries filter_active(const PanelSeries& panel) const {
        auto ideal = load_ideal_points(manifest_.resolve(manifest_.ideal_points));
        auto docs = load_corpus_dir(manifest_.resolve(manifest_.speech_dir));
        std::map<int, std::set<EntityId>> spoke;
        for (const auto& d : docs) spoke[d.id.year].insert(d.id.entity);

        PanelSeries out;
        for (const auto& slice : panel.years) {
            std::vector<int> keep;
            for (std::size_t i = 0; i < slice.vertices.size(); ++i) {
                const auto& id = slice.vertices[i];
                const bool voted = ideal.by_year.count(slice.year) &&
                                   ideal.by_year.at(slice.year).count(id);
                const bool spoke_y = spoke.count(slice.year) && spoke.at(slice.year).count(id);
                if (voted && spoke_y) keep.push_back(static_cast<int>(i));
            }
            YearSlice filtered;
            filtered.year = slice.year;
            for (int i : keep) filtered.vertices.push_back(slice.vertices[i]);
            const int nk = static_cast<int>(keep.size());
            filtered.outcome = BitAdjacency(nk);
            for (int i = 0; i < nk; ++i) {
                for (int j = i + 1; j < nk; ++j) {
                    if (slice.outcome.at(keep[i], keep[j])) filtered.outcome.set(i, j, true);
                }
            }
            for (const auto& [name, m] : slice.dyadic) {
                SymMatrix fm(filtered.vertices);
                for (int i = 0; i < nk; ++i) {
                    for (int j = i + 1; j < nk; ++j) fm.set(i, j, m.at(keep[i], keep[j]));
                }
                filtered.dyadic[name] = std::move(fm);
            }
            for (const auto& [name, v] : slice.nodal) {
                std::vector<double> fv(nk);
                for (int i = 0; i < nk; ++i) fv[i] = v[keep[i]];
                filtered.nodal[name] = std::move(fv);
            }
            out.years.push_back(std::move(filtered));
        }
        return out;
    }

    std::vector<std::string> stage_fit() {
        std::vector<std::string> outputs;
        struct TableRow {
            double estimate = 0.0, lo = 0.0, hi = 0.0;
        };
        std::map<std::string, std::vector<TergmFit>> fits_by_model;

        for (std::size_t si = 0; si < settings_.size(); ++si) {
            const Setting& s = settings_[si];
            PanelSeries panel = setting_panel(s);
            std::optional<PanelSeries> active;
            for (std::size_t mi = 0; mi < manifest_.models.size(); ++mi) {
                const ModelConfig& mc = manifest_.models[mi];
                const PanelSeries* target = &panel;
                if (mc.node_filter == "voted_and_spoke") {
                    if (!active) active = filter_active(panel);
                    target = &*active;
                }
                TergmFit fit = bootstrap_ci(*target, mc.spec, year_lo_, year_hi_,
                                            manifest_.bootstrap_reps,
                                            Rng::derive(opts_.seed, {3, mi, si}), opts_.threads);
                const std::string tag = setting_tag(s);
                const std::string fit_path = out("fit/fit_" + mc.name + "_" + tag + ".json");
                const std::string table_path = out("fit/table_" + mc.name + "_" + tag + ".csv");
                write_fit_json(fit, fit_path);
                write_coefficient_table(fit, table_path);
                outputs.push_back(fit_path);
                outputs.push_back(table_path);
                fits_by_model[mc.name].push_back(std::move(fit));
            }
        }

        // per-model mean across settings, the headline table
        for (const auto& mc : manifest_.models) {
            const auto& fits = fits_by_model[mc.name];
            std::string outstr = "term,estimate,ci_lo,ci_hi,significant\n";
            for (std::size_t k = 0; k < fits.front().labels.size(); ++k) {
                double est = 0.0, lo = 0.0, hi = 0.0;
                for (const auto& f : fits) {
                    est += f.coef[k];
                    lo += f.ci[k].first;
                    hi += f.ci[k].second;
                }
                est /= fits.size();
                lo /= fits.size();
                hi /= fits.size();
                const bool sig = lo > 0.0 || hi < 0.0;
                outstr += fits.front().labels[k] + "," + format_double(est) + "," + format_double(lo) +
                          "," + format_double(hi) + "," + (sig ? "1" : "0") + "\n";
            }
            const std::string path = out("fit/table_" + mc.name + "_mean.csv");
            write_text_file(path, outstr);
            outputs.push_back(path);
        }
        return outputs;
    }

    const ModelConfig& model_by_name(const std::string& name) const {
        for (const auto& mc : manifest_.models) {
            if (mc.name == name) return mc;
        }
        throw DataError("model '" + name + "' not defined in manifest");
    }

    std::vector<double> mean_coefficients(const std::string& model, std::vector<std::string>* labels) const {
        std::vector<double> coef;
        int count = 0;
        for (const auto& s : settings_) {
            const std::string path = out("fit/fit_" + model + "_" + setting_tag(s) + ".json");
            json j = json::parse(read_text_file(path));
            std::vector<double> est;
            std::vector<std::string> labs;
            for (const auto& t : j["terms"]) {
                est.push_back(t["estimate"].get<double>());
                labs.push_back(t["term"].get<std::string>());
            }
            if (coef.empty()) {
                coef.assign(est.size(), 0.0);
                if (labels) *labels = labs;
            }
            for (std::size_t k = 0; k < est.size(); ++k) coef[k] += est[k];
            ++count;
        }
        for (auto& c : coef) c /= count;
        return coef;
    }

    std::vector<std::string> stage_gof() {
        const ModelConfig& mc = model_by_name(manifest_.gof_model);
        std::vector<double> coef = mean_coefficients(mc.name, nullptr);
        PanelSeries panel = setting_panel(settings_.front());
        if (mc.node_filter == "voted_and_spoke") panel = filter_active(panel);
        GofReport report = gof(coef, panel, mc.spec, year_lo_, year_hi_, manifest_.gof_sims,
                               Rng::derive(opts_.seed, {4}), opts_.threads);
        const std::string deg = out("gof/gof_degree.csv");
        const std::string esp = out("gof/gof_esp.csv");
        const std::string mod = out("gof/gof_modularity.csv");
        write_gof_csv(report, deg, esp, mod);
        return {deg, esp, mod};
    }

    std::vector<std::string> stage_predict() {
        const ModelConfig& mc = model_by_name(manifest_.predict_model);
        PanelSeries panel = setting_panel(settings_.front());
        if (mc.node_filter == "voted_and_spoke") panel = filter_active(panel);
        auto rows = predict_aucpr(panel, mc.spec, manifest_.predict_window);
        for (const auto& r : rows) {
            if (r.skipped) {
                notes_.push_back("test year " + std::to_string(r.test_year) + " skipped: " + r.note);
            }
        }
        const std::string path = out("predict/predictions.csv");
        write_predictions_csv(rows, path);
        return {path};
    }

    std::vector<std::string> stage_report() {
        std::vector<std::string> outputs;

        // polarity series, averaged over the settings grid
        auto polarity_mean = [&](const std::vector<std::string>& files, const std::string& out_path) {
            std::map<int, std::vector<PolarityReport>> by_year;
            for (const auto& f : files) {
                for (const auto& cs : load_communities(f)) {
                    by_year[cs.year()].push_back(polarity_metrics(cs, cs.vertices()));
                }
            }
            std::string outstr = "year,n_communities,pct_assigned,pct_bridges\n";
            for (const auto& [year, rows] : by_year) {
                double nc = 0.0, pa = 0.0, pb = 0.0;
                for (const auto& r : rows) {
                    nc += r.n_communities;
                    pa += r.pct_assigned;
                    pb += r.pct_bridges;
                }
                const double den = static_cast<double>(rows.size());
                outstr += std::to_string(year) + "," + format_double(nc / den) + "," +
                          format_double(pa / den) + "," + format_double(pb / den) + "\n";
            }
            write_text_file(out_path, outstr);
            outputs.push_back(out_path);
        };

        std::vector<std::string> strong_files, weak_files;
        for (double p : manifest_.extraction.init_proportions) {
            strong_files.push_back(out("detect/communities_strong_" + ptag(p) + ".json"));
        }
        for (const auto& e : manifest_.embedding_grid) {
            for (double p : manifest_.extraction.init_proportions) {
                weak_files.push_back(out("detect/communities_weak_" + etag(e) + "_" + ptag(p) + ".json"));
            }
        }
        polarity_mean(weak_files, out("report/fig1b_weak_polarity.csv"));
        polarity_mean(strong_files, out("report/fig1c_strong_polarity.csv"));

        // coefficient tables: per-setting and mean, copied beside the figures
        for (const auto& mc : manifest_.models) {
            for (const auto& s : settings_) {
                const std::string src = out("fit/table_" + mc.name + "_" + setting_tag(s) + ".csv");
                const std::string dst = out("report/table_" + mc.name + "_" + setting_tag(s) + ".csv");
                write_text_file(dst, read_text_file(src));
                outputs.push_back(dst);
            }
            const std::string src = out("fit/table_" + mc.name + "_mean.csv");
            const std::string dst = out("report/table_" + mc.name + ".csv");
            write_text_file(dst, read_text_file(src));
            outputs.push_back(dst);
        }
        return outputs;
    }
};

}  // namespace

int run_pipeline(const std::string& subcommand, const PipelineOptions& opts) {
    try {
        Pipeline pipeline(opts);
        if (subcommand == "all") {
            for (const auto& stage : pipeline_stages()) pipeline.run_stage(stage);
        } else if (std::find(pipeline_stages().begin(), pipeline_stages().end(), subcommand) !=
                   pipeline_stages().end()) {
            pipeline.run_stage(subcommand);
        } else {
            std::cerr << "unknown subcommand '" << subcommand << "'\n";
            return 1;
        }
        return 0;
    } catch (const StaleStage& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace polnet
