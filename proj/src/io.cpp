#include "polnet/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"
#include "polnet/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace polnet {

namespace {

std::string term_kind_name(TermKind k) {
    switch (k) {
        case TermKind::Edges: return "edges";
        case TermKind::AltTwoStars: return "alt-2-stars";
        case TermKind::FourCycles: return "4-cycles";
        case TermKind::Gwesp: return "gwesp";
        case TermKind::Memory: return "memory";
        case TermKind::EdgeCov: return "edgecov";
        case TermKind::JointNodal: return "jointnodal";
        case TermKind::RatioNodal: return "rationodal";
        case TermKind::BridgeNodal: return "bridgenodal";
    }
    return "?";
}

std::optional<TermKind> term_kind_from(const std::string& s) {
    if (s == "edges") return TermKind::Edges;
    if (s == "alt-2-stars") return TermKind::AltTwoStars;
    if (s == "4-cycles") return TermKind::FourCycles;
    if (s == "gwesp") return TermKind::Gwesp;
    if (s == "memory") return TermKind::Memory;
    if (s == "edgecov") return TermKind::EdgeCov;
    if (s == "jointnodal") return TermKind::JointNodal;
    if (s == "rationodal") return TermKind::RatioNodal;
    if (s == "bridgenodal") return TermKind::BridgeNodal;
    return std::nullopt;
}

json term_to_json(const Term& t) {
    json j;
    j["kind"] = term_kind_name(t.kind);
    if (t.kind == TermKind::EdgeCov || t.kind == TermKind::JointNodal ||
        t.kind == TermKind::RatioNodal || t.kind == TermKind::BridgeNodal) {
        j["cov"] = t.cov;
    }
    if (t.kind == TermKind::Gwesp) j["decay"] = t.decay;
    if (t.kind == TermKind::AltTwoStars) {
        j["lambda"] = t.lambda;
        j["raw"] = t.raw_two_stars;
    }
    if (t.kind == TermKind::JointNodal) j["threshold"] = t.threshold;
    return j;
}

}  // namespace

std::string DatasetManifest::resolve(const std::string& rel) const {
    if (rel.empty() || rel.front() == '/') return rel;
    if (base_dir.empty()) return rel;
    return (fs::path(base_dir) / rel).string();
}

DatasetManifest load_manifest(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw DataError(path + ": manifest is not valid JSON: " + e.what());
    }

    DatasetManifest m;
    m.base_dir = fs::path(path).parent_path().string();
    std::vector<std::string> errors;
    auto fail = [&](const std::string& msg) { errors.push_back(msg); };

    if (!j.contains("format_version")) {
        fail("missing key 'format_version'");
    } else if (j["format_version"].get<int>() != 1) {
        fail("unsupported format_version " + j["format_version"].dump());
    }

    if (!j.contains("span") || !j["span"].contains("first") || !j["span"].contains("last")) {
        fail("missing key 'span' with 'first'/'last'");
    } else {
        m.span_first = j["span"]["first"].get<int>();
        m.span_last = j["span"]["last"].get<int>();
        if (m.span_first > m.span_last) fail("span.first exceeds span.last");
    }

    auto get_path = [&](const char* key, std::string& out, bool required) {
        if (!j.contains("paths") || !j["paths"].contains(key)) {
            if (required) fail(std::string("missing key 'paths.") + key + "'");
            return;
        }
        out = j["paths"][key].get<std::string>();
        std::string full = m.resolve(out);
        if (!fs::exists(full)) fail(std::string("paths.") + key + ": '" + full + "' is not readable");
    };
    get_path("treaty_events", m.treaty_events, true);
    get_path("ideal_points", m.ideal_points, true);
    get_path("speech_dir", m.speech_dir, true);
    get_path("conflict", m.conflict, true);
    get_path("roster", m.roster, false);

    if (j.contains("paths")) {
        if (j["paths"].contains("nodal_covariates")) {
            for (const auto& [name, p] : j["paths"]["nodal_covariates"].items()) {
                m.nodal_covariates[name] = p.get<std::string>();
                if (!fs::exists(m.resolve(p.get<std::string>()))) {
                    fail("paths.nodal_covariates." + name + ": '" + m.resolve(p.get<std::string>()) +
                         "' is not readable");
                }
            }
        }
        if (j["paths"].contains("dyadic_covariates")) {
            for (const auto& [name, p] : j["paths"]["dyadic_covariates"].items()) {
                m.dyadic_covariates[name] = p.get<std::string>();
                if (!fs::exists(m.resolve(p.get<std::string>()))) {
                    fail("paths.dyadic_covariates." + name + ": '" + m.resolve(p.get<std::string>()) +
                         "' is not readable");
                }
            }
        }
    }

    if (j.contains("layer_map")) {
        for (const auto& [code, name] : j["layer_map"].items()) m.layer_map[code] = name.get<std::string>();
    }

    m.window_length = j.value("window_length", 10);
    if (m.window_length < 1) fail("window_length must be >= 1");
    m.knn_k = j.value("knn_k", 5);
    if (m.knn_k < 1) fail("knn_k must be >= 1");
    m.rwmd_mode = j.value("rwmd_mode", std::string("symmetric-max"));
    if (m.rwmd_mode != "symmetric-max" && m.rwmd_mode != "one-sided") {
        fail("rwmd_mode must be 'symmetric-max' or 'one-sided'");
    }
    m.per_year_embeddings = j.value("per_year_embeddings", false);

    if (j.contains("embedding")) {
        const auto& e = j["embedding"];
        m.embedding.dimension = e.value("dimension", 50);
        m.embedding.x_max = e.value("x_max", 15.0);
        m.embedding.epochs = e.value("epochs", 25);
        m.embedding.weight_exponent = e.value("weight_exponent", 0.75);
        m.embedding.learning_rate = e.value("learning_rate", 0.05);
        m.embedding.use_bias = e.value("bias", true);
        m.min_count = e.value("min_count", 5);
        m.min_doc_frac = e.value("min_doc_frac", 0.05);
        m.cooccurrence_window = e.value("window", 5);
    }
    if (j.contains("embedding_grid")) {
        for (const auto& g : j["embedding_grid"]) {
            m.embedding_grid.push_back(
                EmbeddingSetting{g.value("dimension", m.embedding.dimension), g.value("x_max", m.embedding.x_max)});
        }
    }
    if (m.embedding_grid.empty()) {
        m.embedding_grid.push_back(EmbeddingSetting{m.embedding.dimension, m.embedding.x_max});
    }

    if (j.contains("extraction")) {
        const auto& e = j["extraction"];
        if (e.contains("init_proportions")) {
            m.extraction.init_proportions = e["init_proportions"].get<std::vector<double>>();
        }
        m.extraction.seeds = e.value("restarts", 20);
        m.extraction.max_iterations = e.value("max_iterations", 50);
        m.extraction.overlap_threshold = e.value("overlap_threshold", 0.75);
        m.extraction.min_score = e.value("min_score", 5.0);
    }
    for (double p : m.extraction.init_proportions) {
        if (p <= 0.0 || p > 1.0) fail("extraction.init_proportions entries must lie in (0,1]");
    }

    std::set<std::string> derived_dyadic = {"weak_community_tie", "strong_community_tie",
                                            "weak_joint_member", "strong_joint_member"};
    std::set<std::string> derived_nodal = {"weak_bridge", "strong_bridge"};
    if (j.contains("models")) {
        std::set<std::string> names;
        for (const auto& jm : j["models"]) {
            ModelConfig mc;
            mc.name = jm.value("name", std::string(""));
            if (mc.name.empty()) fail("model without a name");
            if (!names.insert(mc.name).second) fail("duplicate model name '" + mc.name + "'");
            mc.node_filter = jm.value("node_filter", std::string("all"));
            if (mc.node_filter != "all" && mc.node_filter != "voted_and_spoke") {
                fail("model '" + mc.name + "': node_filter must be 'all' or 'voted_and_spoke'");
            }
            mc.community_prefix = jm.value("community_prefix", std::string(""));
            if (jm.contains("terms")) {
                for (const auto& jt : jm["terms"]) {
                    Term t;
                    auto kind = term_kind_from(jt.value("kind", std::string("")));
                    if (!kind) {
                        fail("model '" + mc.name + "': unknown term kind '" + jt.value("kind", std::string("")) + "'");
                        continue;
                    }
                    t.kind = *kind;
                    t.cov = jt.value("cov", std::string(""));
                    t.decay = jt.value("decay", 0.0);
                    t.lambda = jt.value("lambda", 2.0);
                    t.raw_two_stars = jt.value("raw", false);
                    t.threshold = jt.value("threshold", 7.0);
                    if (t.kind == TermKind::EdgeCov && !m.dyadic_covariates.count(t.cov) &&
                        !derived_dyadic.count(t.cov)) {
                        fail("model '" + mc.name + "': edgecov covariate '" + t.cov + "' is not declared");
                    }
                    if ((t.kind == TermKind::JointNodal || t.kind == TermKind::RatioNodal ||
                         t.kind == TermKind::BridgeNodal) &&
                        !m.nodal_covariates.count(t.cov) && !derived_nodal.count(t.cov)) {
                        fail("model '" + mc.name + "': nodal covariate '" + t.cov + "' is not declared");
                    }
                    mc.spec.terms.push_back(t);
                }
            }
            try {
                mc.spec.validate();
            } catch (const std::exception& e) {
                fail("model '" + mc.name + "': " + e.what());
            }
            m.models.push_back(std::move(mc));
        }
    }

    m.bootstrap_reps = j.value("bootstrap_reps", 2000);
    if (m.bootstrap_reps < 2) fail("bootstrap_reps must be >= 2");
    m.gof_sims = j.value("gof_sims", 50);
    m.predict_window = j.value("predict_window", 5);
    m.gof_model = j.value("gof_model", m.models.empty() ? std::string("") : m.models.front().name);
    m.predict_model = j.value("predict_model", m.models.empty() ? std::string("") : m.models.front().name);
    auto model_exists = [&](const std::string& name) {
        for (const auto& mc : m.models) {
            if (mc.name == name) return true;
        }
        return false;
    };
    if (!m.models.empty() && !model_exists(m.gof_model)) fail("gof_model '" + m.gof_model + "' not defined");
    if (!m.models.empty() && !model_exists(m.predict_model)) {
        fail("predict_model '" + m.predict_model + "' not defined");
    }

    // span must fall inside the coverage of the per-year sources
    if (errors.empty()) {
        try {
            IdealPointTable ip = load_ideal_points(m.resolve(m.ideal_points));
            if (ip.by_year.empty() || ip.by_year.begin()->first > m.span_first ||
                ip.by_year.rbegin()->first < m.span_last) {
                fail("span [" + std::to_string(m.span_first) + "," + std::to_string(m.span_last) +
                     "] outside ideal_points coverage '" + m.ideal_points + "'");
            }
        } catch (const std::exception& e) {
            fail(std::string("ideal_points: ") + e.what());
        }
        try {
            auto docs = load_corpus_dir(m.resolve(m.speech_dir));
            std::set<int> years;
            for (const auto& d : docs) years.insert(d.id.year);
            for (int y = m.span_first; y <= m.span_last; ++y) {
                if (!years.count(y)) {
                    fail("span year " + std::to_string(y) + " has no speeches in '" + m.speech_dir + "'");
                    break;
                }
            }
        } catch (const std::exception& e) {
            fail(std::string("speech_dir: ") + e.what());
        }
    }

    if (!errors.empty()) {
        std::string msg = path + ": invalid manifest:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw DataError(msg);
    }
    return m;
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
    json j;
    j["format_version"] = m.format_version;
    j["span"] = {{"first", m.span_first}, {"last", m.span_last}};
    json paths;
    paths["treaty_events"] = m.treaty_events;
    paths["ideal_points"] = m.ideal_points;
    paths["speech_dir"] = m.speech_dir;
    paths["conflict"] = m.conflict;
    if (!m.roster.empty()) paths["roster"] = m.roster;
    if (!m.nodal_covariates.empty()) paths["nodal_covariates"] = m.nodal_covariates;
    if (!m.dyadic_covariates.empty()) paths["dyadic_covariates"] = m.dyadic_covariates;
    j["paths"] = paths;
    if (!m.layer_map.empty()) j["layer_map"] = m.layer_map;
    j["window_length"] = m.window_length;
    j["knn_k"] = m.knn_k;
    j["rwmd_mode"] = m.rwmd_mode;
    j["per_year_embeddings"] = m.per_year_embeddings;
    j["embedding"] = {{"dimension", m.embedding.dimension}, {"x_max", m.embedding.x_max},
                      {"epochs", m.embedding.epochs},       {"weight_exponent", m.embedding.weight_exponent},
                      {"learning_rate", m.embedding.learning_rate}, {"bias", m.embedding.use_bias},
                      {"min_count", m.min_count},           {"min_doc_frac", m.min_doc_frac},
                      {"window", m.cooccurrence_window}};
    json grid = json::array();
    for (const auto& g : m.embedding_grid) {
        grid.push_back({{"dimension", g.dimension}, {"x_max", g.x_max}});
    }
    j["embedding_grid"] = grid;
    j["extraction"] = {{"init_proportions", m.extraction.init_proportions},
                       {"restarts", m.extraction.seeds},
                       {"max_iterations", m.extraction.max_iterations},
                       {"overlap_threshold", m.extraction.overlap_threshold},
                       {"min_score", m.extraction.min_score}};
    json models = json::array();
    for (const auto& mc : m.models) {
        json jm;
        jm["name"] = mc.name;
        jm["node_filter"] = mc.node_filter;
        jm["community_prefix"] = mc.community_prefix;
        json terms = json::array();
        for (const auto& t : mc.spec.terms) terms.push_back(term_to_json(t));
        jm["terms"] = terms;
        models.push_back(jm);
    }
    j["models"] = models;
    j["bootstrap_reps"] = m.bootstrap_reps;
    j["gof_sims"] = m.gof_sims;
    j["predict_window"] = m.predict_window;
    if (!m.gof_model.empty()) j["gof_model"] = m.gof_model;
    if (!m.predict_model.empty()) j["predict_model"] = m.predict_model;
    write_text_file(path, j.dump(2) + "\n");
}

std::vector<TreatyEvent> load_treaty_events(const std::string& path,
                                            const std::map<std::string, std::string>* layer_map) {
    CsvReader reader(path, {"entity_a", "entity_b", "year", "layer"});
    std::vector<TreatyEvent> events;
    while (auto row = reader.next()) {
        TreatyEvent e;
        e.a = (*row)[0];
        e.b = (*row)[1];
        if (e.a.empty() || e.b.empty()) {
            throw DataError(path + ":" + std::to_string(reader.line_number()) + ": empty entity identifier");
        }
        e.year = static_cast<int>(parse_long((*row)[2], "year", path, reader.line_number()));
        e.layer = (*row)[3];
        if (layer_map) {
            auto it = layer_map->find(e.layer);
            if (it != layer_map->end()) e.layer = it->second;
        }
        events.push_back(std::move(e));
    }
    return events;
}

void write_treaty_events(const std::vector<TreatyEvent>& events, const std::string& path) {
    std::string out = "entity_a,entity_b,year,layer\n";
    for (const auto& e : events) {
        out += e.a + "," + e.b + "," + std::to_string(e.year) + "," + e.layer + "\n";
    }
    write_text_file(path, out);
}

IdealPointTable load_ideal_points(const std::string& path) {
    CsvReader reader(path, {"entity", "year", "ideal_point"});
    IdealPointTable table;
    while (auto row = reader.next()) {
        const int year = static_cast<int>(parse_long((*row)[1], "year", path, reader.line_number()));
        const double v = parse_double((*row)[2], "ideal_point", path, reader.line_number());
        if (!std::isfinite(v)) {
            throw DataError(path + ":" + std::to_string(reader.line_number()) + ": non-finite ideal point");
        }
        table.by_year[year][(*row)[0]] = v;
    }
    return table;
}

void write_ideal_points(const IdealPointTable& table, const std::string& path) {
    std::string out = "entity,year,ideal_point\n";
    for (const auto& [year, entities] : table.by_year) {
        for (const auto& [id, v] : entities) {
            out += id + "," + std::to_string(year) + "," + format_double(v) + "\n";
        }
    }
    write_text_file(path, out);
}

std::vector<ConflictRow> load_conflict_rows(const std::string& path) {
    CsvReader reader(path, {"entity_a", "entity_b", "year", "hostility_level"});
    std::vector<ConflictRow> rows;
    while (auto row = reader.next()) {
        ConflictRow r;
        r.a = (*row)[0];
        r.b = (*row)[1];
        r.year = static_cast<int>(parse_long((*row)[2], "year", path, reader.line_number()));
        r.hostility = static_cast<int>(parse_long((*row)[3], "hostility_level", path, reader.line_number()));
        if (r.hostility < 1 || r.hostility > 5) {
            throw DataError(path + ":" + std::to_string(reader.line_number()) +
                            ": hostility_level must be in 1..5, got " + std::to_string(r.hostility));
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_conflict_rows(const std::vector<ConflictRow>& rows, const std::string& path) {
    std::string out = "entity_a,entity_b,year,hostility_level\n";
    for (const auto& r : rows) {
        out += r.a + "," + r.b + "," + std::to_string(r.year) + "," + std::to_string(r.hostility) + "\n";
    }
    write_text_file(path, out);
}

NamedAdjacency load_conflict_network(const std::string& path, int year,
                                     const std::vector<EntityId>* roster) {
    auto rows = load_conflict_rows(path);
    std::vector<EntityId> vertices;
    if (roster) {
        vertices = *roster;
        std::sort(vertices.begin(), vertices.end());
        vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
    } else {
        std::set<EntityId> vs;
        for (const auto& r : rows) {
            vs.insert(r.a);
            vs.insert(r.b);
        }
        vertices.assign(vs.begin(), vs.end());
    }
    std::map<EntityId, int> index;
    for (std::size_t i = 0; i < vertices.size(); ++i) index[vertices[i]] = static_cast<int>(i);
    BitAdjacency adj(static_cast<int>(vertices.size()));
    for (const auto& r : rows) {
        if (r.year != year || r.hostility < 4 || r.a == r.b) continue;
        auto ia = index.find(r.a);
        auto ib = index.find(r.b);
        if (ia == index.end() || ib == index.end()) continue;
        adj.set(ia->second, ib->second, true);
    }
    return NamedAdjacency{"conflict", std::move(vertices), std::move(adj)};
}

std::map<int, std::map<EntityId, double>> load_nodal_covariate(const std::string& path) {
    CsvReader reader(path, {"entity", "year", "value"});
    std::map<int, std::map<EntityId, double>> out;
    while (auto row = reader.next()) {
        const int year = static_cast<int>(parse_long((*row)[1], "year", path, reader.line_number()));
        out[year][(*row)[0]] = parse_double((*row)[2], "value", path, reader.line_number());
    }
    return out;
}

void write_nodal_covariate(const std::map<int, std::map<EntityId, double>>& values,
                           const std::string& path) {
    std::string out = "entity,year,value\n";
    for (const auto& [year, entities] : values) {
        for (const auto& [id, v] : entities) {
            out += id + "," + std::to_string(year) + "," + format_double(v) + "\n";
        }
    }
    write_text_file(path, out);
}

std::map<int, std::vector<DyadValue>> load_dyadic_covariate(const std::string& path) {
    CsvReader reader(path, {"entity_a", "entity_b", "year", "value"});
    std::map<int, std::vector<DyadValue>> out;
    while (auto row = reader.next()) {
        const int year = static_cast<int>(parse_long((*row)[2], "year", path, reader.line_number()));
        out[year].push_back(
            DyadValue{(*row)[0], (*row)[1], parse_double((*row)[3], "value", path, reader.line_number())});
    }
    return out;
}

void write_dyadic_covariate(const std::map<int, std::vector<DyadValue>>& values,
                            const std::string& path) {
    std::string out = "entity_a,entity_b,year,value\n";
    for (const auto& [year, rows] : values) {
        for (const auto& r : rows) {
            out += r.a + "," + r.b + "," + std::to_string(year) + "," + format_double(r.value) + "\n";
        }
    }
    write_text_file(path, out);
}

std::vector<RawDocument> load_corpus_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw DataError(dir + ": not a directory");
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<RawDocument> docs;
    for (const auto& f : files) {
        const std::string stem = fs::path(f).stem().string();
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            auto us = stem.find('_', start);
            if (us == std::string::npos) {
                parts.push_back(stem.substr(start));
                break;
            }
            parts.push_back(stem.substr(start, us - start));
            start = us + 1;
        }
        if (parts.size() != 3) {
            throw DataError(f + ": corpus filenames must look like ENTITY_SESSION_YEAR.txt");
        }
        RawDocument doc;
        doc.id.entity = parts[0];
        doc.id.year = static_cast<int>(parse_long(parts[2], "year in filename", f, 0));
        doc.text = read_text_file(f);
        docs.push_back(std::move(doc));
    }
    return docs;
}

void write_corpus_file(const std::string& dir, const EntityId& entity, int session, int year,
                       const std::string& text) {
    fs::create_directories(dir);
    char name[256];
    std::snprintf(name, sizeof(name), "%s_%02d_%d.txt", entity.c_str(), session, year);
    write_text_file((fs::path(dir) / name).string(), text);
}

void write_embeddings(const EmbeddingSpace& space, const std::string& path) {
    std::string out;
    for (std::size_t i = 0; i < space.vocab.size(); ++i) {
        out += space.vocab[i];
        auto v = space.vec(static_cast<int>(i));
        for (double x : v) {
            out += ' ';
            out += format_double(x);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

EmbeddingSpace load_embeddings(const std::string& path) {
    const std::string content = read_text_file(path);
    EmbeddingSpace space;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        std::vector<double> vec;
        double x;
        while (ls >> x) vec.push_back(x);
        if (vec.empty()) throw DataError(path + ":" + std::to_string(lineno) + ": token without vector");
        if (!rows.empty() && rows.front().second.size() != vec.size()) {
            throw DataError(path + ":" + std::to_string(lineno) + ": inconsistent dimension");
        }
        rows.emplace_back(std::move(token), std::move(vec));
    }
    if (rows.empty()) throw DataError(path + ": empty embedding file");
    std::sort(rows.begin(), rows.end());
    space.dimension = static_cast<int>(rows.front().second.size());
    for (auto& [tok, vec] : rows) {
        space.vocab.push_back(tok);
        space.vectors.insert(space.vectors.end(), vec.begin(), vec.end());
    }
    return space;
}

void write_similarity_csv(const SymMatrix& m, const std::string& path) {
    std::string out = "entity";
    for (const auto& id : m.labels()) out += "," + id;
    out += "\n";
    for (int i = 0; i < m.size(); ++i) {
        out += m.labels()[i];
        for (int j = 0; j < m.size(); ++j) out += "," + format_double(m.at(i, j));
        out += "\n";
    }
    write_text_file(path, out);
}

SymMatrix load_similarity_csv(const std::string& path) {
    const std::string content = read_text_file(path);
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "entity") throw DataError(path + ": first header cell must be 'entity'");
    std::vector<EntityId> labels(header.begin() + 1, header.end());
    SymMatrix m(labels);
    int lineno = 1;
    for (int i = 0; i < m.size(); ++i) {
        if (!std::getline(in, line)) throw DataError(path + ": truncated matrix");
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto fields = split_csv_line(line);
        if (fields.size() != labels.size() + 1 || fields[0] != labels[i]) {
            throw DataError(path + ":" + std::to_string(lineno) + ": row label mismatch");
        }
        for (int jj = 0; jj < m.size(); ++jj) {
            m.set(i, jj, parse_double(fields[jj + 1], "similarity", path, lineno));
        }
    }
    return m;
}

void write_edgelists(const std::vector<MultilayerGraph>& graphs, const std::string& path) {
    std::string out = "year,layer,entity_a,entity_b\n";
    for (const auto& g : graphs) {
        for (const auto& layer : g.layers()) {
            for (int i = 0; i < g.n_vertices(); ++i) {
                for (int j : layer.adj.neighbors(i)) {
                    if (j > i) {
                        out += std::to_string(g.year()) + "," + layer.name + "," + g.vertices()[i] + "," +
                               g.vertices()[j] + "\n";
                    }
                }
            }
        }
    }
    write_text_file(path, out);
}

std::vector<MultilayerGraph> load_edgelists(const std::string& path) {
    CsvReader reader(path, {"year", "layer", "entity_a", "entity_b"});
    std::map<int, std::map<std::string, std::vector<std::pair<EntityId, EntityId>>>> by_year;
    std::set<std::string> all_layers;
    while (auto row = reader.next()) {
        const int year = static_cast<int>(parse_long((*row)[0], "year", path, reader.line_number()));
        by_year[year][(*row)[1]].emplace_back((*row)[2], (*row)[3]);
        all_layers.insert((*row)[1]);
    }
    std::vector<MultilayerGraph> graphs;
    for (const auto& [year, layers] : by_year) {
        std::set<EntityId> vs;
        for (const auto& [name, edges] : layers) {
            for (const auto& [a, b] : edges) {
                vs.insert(a);
                vs.insert(b);
            }
        }
        std::vector<EntityId> vertices(vs.begin(), vs.end());
        std::map<EntityId, int> index;
        for (std::size_t i = 0; i < vertices.size(); ++i) index[vertices[i]] = static_cast<int>(i);
        std::vector<Layer> out_layers;
        for (const auto& name : all_layers) {
            BitAdjacency adj(static_cast<int>(vertices.size()));
            auto it = layers.find(name);
            if (it != layers.end()) {
                for (const auto& [a, b] : it->second) {
                    if (a != b) adj.set(index[a], index[b], true);
                }
            }
            out_layers.push_back(Layer{name, std::move(adj)});
        }
        graphs.emplace_back(year, std::move(vertices), std::move(out_layers));
    }
    return graphs;
}

void write_communities(const std::vector<CommunitySet>& sets, const std::string& path) {
    json j;
    j["format_version"] = 1;
    json years = json::array();
    for (const auto& cs : sets) {
        json jy;
        jy["year"] = cs.year();
        jy["vertices"] = cs.vertices();
        jy["layers"] = cs.layer_names();
        json comms = json::array();
        for (const auto& c : cs.communities()) {
            json jc;
            json vs = json::array();
            for (int v : c.vertices) vs.push_back(cs.vertices()[v]);
            json ls = json::array();
            for (int l : c.layers) ls.push_back(cs.layer_names()[l]);
            jc["vertices"] = vs;
            jc["layers"] = ls;
            jc["score"] = c.score;
            comms.push_back(jc);
        }
        jy["communities"] = comms;
        years.push_back(jy);
    }
    j["years"] = years;
    write_text_file(path, j.dump(2) + "\n");
}

std::vector<CommunitySet> load_communities(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
    std::vector<CommunitySet> sets;
    for (const auto& jy : j["years"]) {
        std::vector<EntityId> vertices = jy["vertices"].get<std::vector<EntityId>>();
        std::vector<std::string> layer_names = jy["layers"].get<std::vector<std::string>>();
        std::map<EntityId, int> vindex;
        std::map<std::string, int> lindex;
        for (std::size_t i = 0; i < vertices.size(); ++i) vindex[vertices[i]] = static_cast<int>(i);
        for (std::size_t i = 0; i < layer_names.size(); ++i) lindex[layer_names[i]] = static_cast<int>(i);
        std::vector<Community> comms;
        for (const auto& jc : jy["communities"]) {
            Community c;
            for (const auto& v : jc["vertices"]) c.vertices.push_back(vindex.at(v.get<std::string>()));
            for (const auto& l : jc["layers"]) c.layers.push_back(lindex.at(l.get<std::string>()));
            c.score = jc["score"].get<double>();
            std::sort(c.vertices.begin(), c.vertices.end());
            std::sort(c.layers.begin(), c.layers.end());
            comms.push_back(std::move(c));
        }
        sets.emplace_back(jy["year"].get<int>(), std::move(vertices), std::move(layer_names),
                          std::move(comms));
    }
    return sets;
}

void write_polarity_csv(const std::vector<PolarityReport>& rows, const std::string& path) {
    std::string out = "year,n_communities,pct_assigned,pct_bridges\n";
    for (const auto& r : rows) {
        out += std::to_string(r.year) + "," + std::to_string(r.n_communities) + "," +
               format_double(r.pct_assigned) + "," + format_double(r.pct_bridges) + "\n";
    }
    write_text_file(path, out);
}

std::vector<PolarityReport> load_polarity_csv(const std::string& path) {
    CsvReader reader(path, {"year", "n_communities", "pct_assigned", "pct_bridges"});
    std::vector<PolarityReport> rows;
    while (auto row = reader.next()) {
        PolarityReport r;
        r.year = static_cast<int>(parse_long((*row)[0], "year", path, reader.line_number()));
        r.n_communities =
            static_cast<int>(parse_long((*row)[1], "n_communities", path, reader.line_number()));
        r.pct_assigned = parse_double((*row)[2], "pct_assigned", path, reader.line_number());
        r.pct_bridges = parse_double((*row)[3], "pct_bridges", path, reader.line_number());
        rows.push_back(r);
    }
    return rows;
}

void write_fit_json(const TergmFit& fit, const std::string& path) {
    json j;
    j["format_version"] = 1;
    json terms = json::array();
    for (std::size_t k = 0; k < fit.labels.size(); ++k) {
        double mean = 0.0, sd = 0.0;
        for (const auto& row : fit.replicates) mean += row[k];
        if (!fit.replicates.empty()) mean /= static_cast<double>(fit.replicates.size());
        for (const auto& row : fit.replicates) sd += (row[k] - mean) * (row[k] - mean);
        if (fit.replicates.size() > 1) sd = std::sqrt(sd / static_cast<double>(fit.replicates.size() - 1));
        terms.push_back({{"term", fit.labels[k]},
                         {"estimate", fit.coef[k]},
                         {"ci_lo", fit.ci[k].first},
                         {"ci_hi", fit.ci[k].second},
                         {"replicate_mean", mean},
                         {"replicate_sd", sd}});
    }
    j["terms"] = terms;
    j["meta"] = {{"years_used", fit.meta.years_used},
                 {"reps", fit.meta.reps},
                 {"excluded_replicates", fit.meta.excluded_replicates},
                 {"seed", fit.meta.seed},
                 {"dropped_dyads", fit.meta.dropped_dyads}};
    write_text_file(path, j.dump(2) + "\n");
}

void write_coefficient_table(const TergmFit& fit, const std::string& path) {
    std::string out = "term,estimate,ci_lo,ci_hi,significant\n";
    for (std::size_t k = 0; k < fit.labels.size(); ++k) {
        const bool sig = fit.ci[k].first > 0.0 || fit.ci[k].second < 0.0;
        out += fit.labels[k] + "," + format_double(fit.coef[k]) + "," + format_double(fit.ci[k].first) +
               "," + format_double(fit.ci[k].second) + "," + (sig ? "1" : "0") + "\n";
    }
    write_text_file(path, out);
}

void write_gof_csv(const GofReport& report, const std::string& degree_path,
                   const std::string& esp_path, const std::string& modularity_path) {
    auto bins_csv = [](const GofReport& rep, auto select) {
        std::string out = "year,bin,observed,min,q25,median,q75,max\n";
        for (const auto& yr : rep.years) {
            for (const auto& row : select(yr)) {
                out += std::to_string(yr.year) + "," + format_double(row.bin) + "," +
                       format_double(row.observed) + "," + format_double(row.qmin) + "," +
                       format_double(row.q25) + "," + format_double(row.median) + "," +
                       format_double(row.q75) + "," + format_double(row.qmax) + "\n";
            }
        }
        return out;
    };
    write_text_file(degree_path,
                    bins_csv(report, [](const GofYearReport& y) -> const std::vector<GofBinRow>& {
                        return y.degree;
                    }));
    write_text_file(esp_path, bins_csv(report, [](const GofYearReport& y) -> const std::vector<GofBinRow>& {
                        return y.esp;
                    }));
    std::string out = "year,observed,min,q25,median,q75,max\n";
    for (const auto& yr : report.years) {
        const auto& row = yr.modularity;
        out += std::to_string(yr.year) + "," + format_double(row.observed) + "," + format_double(row.qmin) +
               "," + format_double(row.q25) + "," + format_double(row.median) + "," +
               format_double(row.q75) + "," + format_double(row.qmax) + "\n";
    }
    write_text_file(modularity_path, out);
}

void write_predictions_csv(const std::vector<PredictRow>& rows, const std::string& path) {
    std::string out = "test_year,aucpr,baseline\n";
    for (const auto& r : rows) {
        if (r.skipped) continue;
        out += std::to_string(r.test_year) + "," + format_double(r.aucpr) + "," +
               format_double(r.baseline) + "\n";
    }
    write_text_file(path, out);
}

std::string string_hash(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_content_hash(const std::string& path) {
    return string_hash(read_text_file(path));
}

}  // namespace polnet
