#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polnet/affinity.hpp"
#include "polnet/docdist.hpp"
#include "polnet/embed.hpp"
#include "polnet/extract.hpp"
#include "polnet/graph.hpp"
#include "polnet/tergm.hpp"

namespace polnet {

struct EmbeddingSetting {
    int dimension = 50;
    double x_max = 15.0;
};

struct ModelConfig {
    std::string name;
    ModelSpec spec;
    std::string node_filter = "all";         // or "voted_and_spoke"
    std::string community_prefix = "";       // "weak_" or "strong_" for reporting
};

/// Validated run configuration. Loading reports every schema violation at
/// once rather than stopping at the first.
struct DatasetManifest {
    int format_version = 1;
    int span_first = 1970;
    int span_last = 1990;

    std::string base_dir;  // directory of the manifest file; paths resolve against it
    std::string treaty_events;
    std::string ideal_points;
    std::string speech_dir;
    std::string conflict;
    std::string roster;  // optional
    std::map<std::string, std::string> nodal_covariates;
    std::map<std::string, std::string> dyadic_covariates;
    std::map<std::string, std::string> layer_map;  // category code -> layer name

    int window_length = 10;
    int knn_k = 5;
    std::string rwmd_mode = "symmetric-max";  // or "one-sided"
    bool per_year_embeddings = false;

    TrainConfig embedding;
    long min_count = 5;
    double min_doc_frac = 0.05;
    int cooccurrence_window = 5;
    std::vector<EmbeddingSetting> embedding_grid;  // defaults to the single base setting

    ExtractionConfig extraction;
    std::vector<ModelConfig> models;
    int bootstrap_reps = 2000;
    int gof_sims = 50;
    int predict_window = 5;
    std::string gof_model;      // defaults to first model
    std::string predict_model;  // defaults to first model

    std::string resolve(const std::string& rel) const;
};

DatasetManifest load_manifest(const std::string& path);
void write_manifest(const DatasetManifest& manifest, const std::string& path);

/// `entity_a,entity_b,year,layer`; category codes translate through
/// layer_map when given (unmapped codes pass through).
std::vector<TreatyEvent> load_treaty_events(const std::string& path,
                                            const std::map<std::string, std::string>* layer_map = nullptr);
void write_treaty_events(const std::vector<TreatyEvent>& events, const std::string& path);

/// `entity,year,ideal_point`.
IdealPointTable load_ideal_points(const std::string& path);
void write_ideal_points(const IdealPointTable& table, const std::string& path);

struct ConflictRow {
    EntityId a;
    EntityId b;
    int year = 0;
    int hostility = 0;
};

/// `entity_a,entity_b,year,hostility_level` with levels in 1..5.
std::vector<ConflictRow> load_conflict_rows(const std::string& path);
void write_conflict_rows(const std::vector<ConflictRow>& rows, const std::string& path);

/// Undirected tie iff a row with hostility 4 or 5 matches the year. The
/// vertex set is the sorted union of entities in the file unless a roster
/// is supplied.
NamedAdjacency load_conflict_network(const std::string& path, int year,
                                     const std::vector<EntityId>* roster = nullptr);

/// `entity,year,value` keyed by year.
std::map<int, std::map<EntityId, double>> load_nodal_covariate(const std::string& path);
void write_nodal_covariate(const std::map<int, std::map<EntityId, double>>& values,
                           const std::string& path);

struct DyadValue {
    EntityId a;
    EntityId b;
    double value = 0.0;
};

/// `entity_a,entity_b,year,value` keyed by year.
std::map<int, std::vector<DyadValue>> load_dyadic_covariate(const std::string& path);
void write_dyadic_covariate(const std::map<int, std::vector<DyadValue>>& values,
                            const std::string& path);

/// Directory of `<ENTITY>_<SESSION>_<YEAR>.txt` files.
std::vector<RawDocument> load_corpus_dir(const std::string& dir);
void write_corpus_file(const std::string& dir, const EntityId& entity, int session, int year,
                       const std::string& text);

/// One token per line followed by its vector components, space separated.
void write_embeddings(const EmbeddingSpace& space, const std::string& path);
EmbeddingSpace load_embeddings(const std::string& path);

/// Square CSV with entity ids on the header row and first column.
void write_similarity_csv(const SymMatrix& m, const std::string& path);
SymMatrix load_similarity_csv(const std::string& path);

/// Sparse edge list `year,layer,entity_a,entity_b` for a run of years.
void write_edgelists(const std::vector<MultilayerGraph>& graphs, const std::string& path);
std::vector<MultilayerGraph> load_edgelists(const std::string& path);

void write_communities(const std::vector<CommunitySet>& sets, const std::string& path);
std::vector<CommunitySet> load_communities(const std::string& path);

/// `year,n_communities,pct_assigned,pct_bridges`.
void write_polarity_csv(const std::vector<PolarityReport>& rows, const std::string& path);
std::vector<PolarityReport> load_polarity_csv(const std::string& path);

void write_fit_json(const TergmFit& fit, const std::string& path);

/// `term,estimate,ci_lo,ci_hi,significant`.
void write_coefficient_table(const TergmFit& fit, const std::string& path);

void write_gof_csv(const GofReport& report, const std::string& degree_path,
                   const std::string& esp_path, const std::string& modularity_path);

/// `test_year,aucpr,baseline`; skipped years are omitted.
void write_predictions_csv(const std::vector<PredictRow>& rows, const std::string& path);

/// FNV-1a over the file bytes, hex-encoded; used for artifact staleness.
std::string file_content_hash(const std::string& path);
std::string string_hash(const std::string& bytes);

}  // namespace polnet
