#pragma once

#include "kgec/rng.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace kgec {

enum class ModelKind { TransE, TransH, DistMult, RotatE };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Dense embedding table. Entity and relation rows share one dimension d.
// TransH additionally keeps one hyperplane normal per relation in aux.
// RotatE stores d/2 relation phases in the first half of each relation row
// (phases wrapped to [-pi, pi)); entity rows are d/2 complex numbers laid
// out as (re, im) pairs.
struct EmbeddingState {
    int dim = 0;
    std::vector<double> entity;   // num_entities x dim, row major
    std::vector<double> relation; // num_relations x dim
    std::vector<double> aux;      // num_relations x dim (TransH only, else empty)

    int num_entities() const { return dim == 0 ? 0 : static_cast<int>(entity.size()) / dim; }
    int num_relations() const { return dim == 0 ? 0 : static_cast<int>(relation.size()) / dim; }
    bool has_aux() const { return !aux.empty(); }

    std::span<double> entity_row(int id) {
        return {entity.data() + static_cast<size_t>(id) * dim, static_cast<size_t>(dim)};
    }
    std::span<const double> entity_row(int id) const {
        return {entity.data() + static_cast<size_t>(id) * dim, static_cast<size_t>(dim)};
    }
    std::span<double> relation_row(int id) {
        return {relation.data() + static_cast<size_t>(id) * dim, static_cast<size_t>(dim)};
    }
    std::span<const double> relation_row(int id) const {
        return {relation.data() + static_cast<size_t>(id) * dim, static_cast<size_t>(dim)};
    }
    std::span<double> aux_row(int id) {
        return {aux.data() + static_cast<size_t>(id) * dim, static_cast<size_t>(dim)};
    }
    std::span<const double> aux_row(int id) const {
        return {aux.data() + static_cast<size_t>(id) * dim, static_cast<size_t>(dim)};
    }
};

// Xavier-uniform with fan_in = fan_out = d: components in [-sqrt(6/2d), +sqrt(6/2d)].
std::vector<double> xavier_init(int dim, Rng& rng);

// Fills a freshly appended row according to the model's convention:
// Xavier for entities and most relations, uniform phases for RotatE
// relations, a random unit normal for TransH aux rows.
void random_init_entity_row(EmbeddingState& state, int id, ModelKind kind, Rng& rng);
void random_init_relation_row(EmbeddingState& state, int id, ModelKind kind, Rng& rng);

// Builds a state with the given table sizes, all rows randomly initialized.
EmbeddingState make_random_state(int num_entities, int num_relations, int dim,
                                 ModelKind kind, Rng& rng);

// Text checkpoint, lossless round trip at 17 significant digits.
void save_checkpoint(const EmbeddingState& state, ModelKind kind,
                     const std::filesystem::path& path);
struct Checkpoint {
    EmbeddingState state;
    ModelKind kind;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace kgec
