#pragma once

#include "kgec/kg_store.hpp"
#include "kgec/models.hpp"
#include "kgec/rng.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace kgec {

struct ClassStat {
    std::vector<double> centroid; // v_c, arithmetic mean of member rows
    std::vector<double> sigma;    // population standard deviation per dimension
    long count = 0;
};

struct ClassStats {
    int dim = 0;
    std::unordered_map<int, ClassStat> per_class;
    ClassStat global; // over all embedded entities, used by the Global fallback
};

// Centroid and spread per class over the currently embedded entities.
// Classes without embedded members are absent.
ClassStats compute_class_stats(const EmbeddingState& state, const Schema& schema,
                               const EntitySet& embedded_entities);

enum class InitKind { Random, Model, ModelHeadOnly, Schema };
enum class FallbackKind { Global, Random };

std::string to_string(InitKind kind);
InitKind init_kind_from_string(const std::string& name);

struct InitStrategy {
    InitKind kind = InitKind::Random;
    double gamma = 0.0;              // schema perturbation scale
    FallbackKind fallback = FallbackKind::Global;
};

// Average over the entity's classes of (v_c + gamma * sigma_c (.) r_c), with
// a fresh standard-normal r_c per class. Returns empty when the entity has
// no class with stats (caller falls back).
std::vector<double> schema_init(int entity, const Schema& schema, const ClassStats& stats,
                                double gamma, Rng& rng);

// Expected TransE position averaged over the delta triples the entity
// participates in, skipping triples whose counterpart is itself new.
// Head triples contribute t - r, tail triples h + r. Returns empty when no
// usable triple exists.
std::vector<double> model_init_transe(int entity, const Delta& delta,
                                      const EmbeddingState& state,
                                      const EntitySet& embedded_entities, bool head_only);

struct InitReport {
    std::string strategy;
    double init_seconds = 0.0;
    long fallback_count = 0;
};

// Appends rows for the delta's new entities (strategy-initialized) and new
// relations (always random). Existing rows are untouched. Per-entity rng
// substreams keep the result independent of iteration order.
InitReport initialize_new_entities(EmbeddingState& state, const Delta& delta,
                                   const InitStrategy& strategy, const Schema& schema,
                                   const ClassStats& stats, const ModelConfig& model,
                                   const EntitySet& embedded_entities, uint64_t seed);

} // namespace kgec
