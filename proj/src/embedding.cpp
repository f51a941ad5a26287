#include "kgec/embedding.hpp"
#include "kgec/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace kgec {

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::TransE: return "transe";
    case ModelKind::TransH: return "transh";
    case ModelKind::DistMult: return "distmult";
    case ModelKind::RotatE: return "rotate";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "transe") return ModelKind::TransE;
    if (name == "transh") return ModelKind::TransH;
    if (name == "distmult") return ModelKind::DistMult;
    if (name == "rotate") return ModelKind::RotatE;
    throw ConfigError("unknown model kind: " + name);
}

std::vector<double> xavier_init(int dim, Rng& rng) {
    double bound = std::sqrt(6.0 / (2.0 * dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> v(static_cast<size_t>(dim));
    for (double& x : v) x = u(rng);
    return v;
}

void random_init_entity_row(EmbeddingState& state, int id, ModelKind, Rng& rng) {
    auto row = state.entity_row(id);
    auto v = xavier_init(state.dim, rng);
    std::copy(v.begin(), v.end(), row.begin());
}

void random_init_relation_row(EmbeddingState& state, int id, ModelKind kind, Rng& rng) {
    auto row = state.relation_row(id);
    if (kind == ModelKind::RotatE) {
        std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
        std::fill(row.begin(), row.end(), 0.0);
        for (int k = 0; k < state.dim / 2; ++k) row[static_cast<size_t>(k)] = u(rng);
    } else {
        auto v = xavier_init(state.dim, rng);
        std::copy(v.begin(), v.end(), row.begin());
    }
    if (kind == ModelKind::TransH) {
        auto w = state.aux_row(id);
        std::normal_distribution<double> n(0.0, 1.0);
        double norm2 = 0.0;
        for (double& x : w) {
            x = n(rng);
            norm2 += x * x;
        }
        double inv = 1.0 / std::sqrt(norm2);
        for (double& x : w) x *= inv;
    }
}

EmbeddingState make_random_state(int num_entities, int num_relations, int dim,
                                 ModelKind kind, Rng& rng) {
    if (kind == ModelKind::RotatE && dim % 2 != 0)
        throw ConfigError("rotate requires an even embedding dimension");
    EmbeddingState state;
    state.dim = dim;
    state.entity.resize(static_cast<size_t>(num_entities) * dim);
    state.relation.resize(static_cast<size_t>(num_relations) * dim);
    if (kind == ModelKind::TransH)
        state.aux.resize(static_cast<size_t>(num_relations) * dim);
    for (int e = 0; e < num_entities; ++e) random_init_entity_row(state, e, kind, rng);
    for (int r = 0; r < num_relations; ++r) random_init_relation_row(state, r, kind, rng);
    return state;
}

namespace {

void write_rows(std::ofstream& out, const char* tag, const std::vector<double>& data,
                int dim) {
    char buf[32];
    int n = dim == 0 ? 0 : static_cast<int>(data.size()) / dim;
    for (int id = 0; id < n; ++id) {
        out << tag << ':' << id;
        for (int k = 0; k < dim; ++k) {
            double v = data[static_cast<size_t>(id) * dim + k];
            int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ' ';
            out.write(buf, len);
        }
        out << '\n';
    }
}

} // namespace

void save_checkpoint(const EmbeddingState& state, ModelKind kind,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write checkpoint: " + path.string());
    out << "dim=" << state.dim << " entities=" << state.num_entities()
        << " relations=" << state.num_relations() << " model=" << to_string(kind) << '\n';
    write_rows(out, "entity", state.entity, state.dim);
    write_rows(out, "relation", state.relation, state.dim);
    write_rows(out, "aux", state.aux, state.dim);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open checkpoint: " + path.string());

    std::string header;
    std::getline(in, header);
    int dim = 0, entities = 0, relations = 0;
    char model_buf[32] = {0};
    if (std::sscanf(header.c_str(), "dim=%d entities=%d relations=%d model=%31s", &dim,
                    &entities, &relations, model_buf) != 4)
        throw ParseError("bad checkpoint header: " + header);

    Checkpoint ckpt;
    ckpt.kind = model_kind_from_string(model_buf);
    ckpt.state.dim = dim;
    ckpt.state.entity.resize(static_cast<size_t>(entities) * dim);
    ckpt.state.relation.resize(static_cast<size_t>(relations) * dim);
    if (ckpt.kind == ModelKind::TransH)
        ckpt.state.aux.resize(static_cast<size_t>(relations) * dim);

    std::string line;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        auto colon = key.find(':');
        if (colon == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad row key");
        std::string tag = key.substr(0, colon);
        int id = std::stoi(key.substr(colon + 1));
        std::vector<double>* dest = nullptr;
        if (tag == "entity") dest = &ckpt.state.entity;
        else if (tag == "relation") dest = &ckpt.state.relation;
        else if (tag == "aux") dest = &ckpt.state.aux;
        else throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad row tag " + tag);
        for (int k = 0; k < dim; ++k) {
            double v;
            if (!(ss >> v))
                throw ParseError(path.string() + ":" + std::to_string(lineno) +
                                 ": short vector row");
            (*dest)[static_cast<size_t>(id) * dim + k] = v;
        }
    }
    return ckpt;
}

} // namespace kgec
