#pragma once

#include "kgec/kg_store.hpp"
#include "kgec/models.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace kgec::test {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("kgec_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << content;
}

// Snapshot assembled from id triples; entity/relation sets derived.
inline Snapshot make_snapshot(const TripleSet& train, const TripleSet& valid = {},
                              const TripleSet& test = {}) {
    Snapshot s;
    s.train = train;
    s.valid = valid;
    s.test = test;
    for (const TripleSet* ts : {&train, &valid, &test}) {
        for (const Triple& t : *ts) {
            s.entities.insert(t.head);
            s.entities.insert(t.tail);
            s.relations.insert(t.relation);
        }
    }
    return s;
}

enum class Param { Head, Relation, Tail, Aux };

// Central finite difference of the score wrt one embedding row.
inline std::vector<double> fd_gradient(const ModelConfig& model,
                                       const EmbeddingState& state0, const Triple& t,
                                       Param param, double step = 1e-5) {
    EmbeddingState state = state0;
    auto row = [&]() -> std::span<double> {
        switch (param) {
        case Param::Head: return state.entity_row(t.head);
        case Param::Relation: return state.relation_row(t.relation);
        case Param::Tail: return state.entity_row(t.tail);
        case Param::Aux: return state.aux_row(t.relation);
        }
        return {};
    }();
    std::vector<double> grad(row.size());
    for (size_t k = 0; k < row.size(); ++k) {
        double orig = row[k];
        row[k] = orig + step;
        double plus = score(model, state, t);
        row[k] = orig - step;
        double minus = score(model, state, t);
        row[k] = orig;
        grad[k] = (plus - minus) / (2 * step);
    }
    return grad;
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0, na = 0, nb = 0;
    for (size_t k = 0; k < a.size(); ++k) {
        diff += (a[k] - b[k]) * (a[k] - b[k]);
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    double scale = std::max(std::sqrt(na), std::sqrt(nb));
    if (scale < 1e-12) return std::sqrt(diff);
    return std::sqrt(diff) / scale;
}

} // namespace kgec::test
