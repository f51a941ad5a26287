#include "kgec/init.hpp"
#include "kgec/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace kgec {

std::string to_string(InitKind kind) {
    switch (kind) {
    case InitKind::Random: return "random";
    case InitKind::Model: return "model";
    case InitKind::ModelHeadOnly: return "model-head";
    case InitKind::Schema: return "schema";
    }
    return "?";
}

InitKind init_kind_from_string(const std::string& name) {
    if (name == "random") return InitKind::Random;
    if (name == "model") return InitKind::Model;
    if (name == "model-head") return InitKind::ModelHeadOnly;
    if (name == "schema") return InitKind::Schema;
    throw ConfigError("unknown init strategy: " + name);
}

namespace {

void accumulate(ClassStat& stat, std::span<const double> row) {
    for (size_t k = 0; k < row.size(); ++k) stat.centroid[k] += row[k];
    ++stat.count;
}

void finalize(ClassStat& stat, const EmbeddingState& state,
              const std::vector<int>& members) {
    const int d = state.dim;
    for (double& x : stat.centroid) x /= static_cast<double>(stat.count);
    stat.sigma.assign(static_cast<size_t>(d), 0.0);
    for (int e : members) {
        auto row = state.entity_row(e);
        for (int k = 0; k < d; ++k) {
            double diff = row[k] - stat.centroid[k];
            stat.sigma[k] += diff * diff;
        }
    }
    for (double& x : stat.sigma) x = std::sqrt(x / static_cast<double>(stat.count));
}

} // namespace

ClassStats compute_class_stats(const EmbeddingState& state, const Schema& schema,
                               const EntitySet& embedded_entities) {
    ClassStats stats;
    stats.dim = state.dim;

    std::unordered_map<int, std::vector<int>> members; // class -> embedded entities
    std::vector<int> all;
    all.reserve(embedded_entities.size());
    for (int e : embedded_entities) {
        if (e < 0 || e >= state.num_entities())
            throw ContractViolation("embedded entity id outside embedding state");
        all.push_back(e);
        for (int c : schema.classes_of(e)) members[c].push_back(e);
    }

    for (auto& [cls, ents] : members) {
        ClassStat stat;
        stat.centroid.assign(static_cast<size_t>(state.dim), 0.0);
        for (int e : ents) accumulate(stat, state.entity_row(e));
        finalize(stat, state, ents);
        stats.per_class.emplace(cls, std::move(stat));
    }

    if (!all.empty()) {
        stats.global.centroid.assign(static_cast<size_t>(state.dim), 0.0);
        for (int e : all) accumulate(stats.global, state.entity_row(e));
        finalize(stats.global, state, all);
    }
    return stats;
}

std::vector<double> schema_init(int entity, const Schema& schema, const ClassStats& stats,
                                double gamma, Rng& rng) {
    std::vector<const ClassStat*> usable;
    for (int c : schema.classes_of(entity)) {
        auto it = stats.per_class.find(c);
        if (it != stats.per_class.end()) usable.push_back(&it->second);
    }
    if (usable.empty()) return {};

    const int d = stats.dim;
    std::vector<double> out(static_cast<size_t>(d), 0.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const ClassStat* stat : usable) {
        for (int k = 0; k < d; ++k) {
            double r = normal(rng); // fresh per (entity, class)
            out[k] += stat->centroid[k] + gamma * stat->sigma[k] * r;
        }
    }
    double inv = 1.0 / static_cast<double>(usable.size());
    for (double& x : out) x *= inv;
    return out;
}

std::vector<double> model_init_transe(int entity, const Delta& delta,
                                      const EmbeddingState& state,
                                      const EntitySet& embedded_entities,
                                      bool head_only) {
    const int d = state.dim;
    std::vector<double> sum(static_cast<size_t>(d), 0.0);
    long used = 0;
    for (const Triple& t : delta.new_triples) {
        if (t.head == entity && embedded_entities.count(t.tail)) {
            auto r = state.relation_row(t.relation);
            auto tail = state.entity_row(t.tail);
            for (int k = 0; k < d; ++k) sum[k] += tail[k] - r[k];
            ++used;
        } else if (!head_only && t.tail == entity && embedded_entities.count(t.head)) {
            auto r = state.relation_row(t.relation);
            auto head = state.entity_row(t.head);
            for (int k = 0; k < d; ++k) sum[k] += head[k] + r[k];
            ++used;
        }
    }
    if (used == 0) return {};
    for (double& x : sum) x /= static_cast<double>(used);
    return sum;
}

namespace {

std::vector<double> global_fallback(const ClassStats& stats, double gamma, Rng& rng) {
    if (stats.global.count == 0) return {};
    const int d = stats.dim;
    std::vector<double> out(static_cast<size_t>(d));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < d; ++k)
        out[k] = stats.global.centroid[k] + gamma * stats.global.sigma[k] * normal(rng);
    return out;
}

} // namespace

InitReport initialize_new_entities(EmbeddingState& state, const Delta& delta,
                                   const InitStrategy& strategy, const Schema& schema,
                                   const ClassStats& stats, const ModelConfig& model,
                                   const EntitySet& embedded_entities, uint64_t seed) {
    if ((strategy.kind == InitKind::Model || strategy.kind == InitKind::ModelHeadOnly) &&
        model.kind != ModelKind::TransE)
        throw ConfigError("model-based initialization is only defined for transe");

    auto start = std::chrono::steady_clock::now();
    InitReport report;
    report.strategy = to_string(strategy.kind);

    std::vector<int> new_entities(delta.new_entities.begin(), delta.new_entities.end());
    std::sort(new_entities.begin(), new_entities.end());
    std::vector<int> new_relations(delta.new_relations.begin(), delta.new_relations.end());
    std::sort(new_relations.begin(), new_relations.end());

    int need_entities = state.num_entities();
    for (int e : new_entities) need_entities = std::max(need_entities, e + 1);
    int need_relations = state.num_relations();
    for (int r : new_relations) need_relations = std::max(need_relations, r + 1);
    state.entity.resize(static_cast<size_t>(need_entities) * state.dim, 0.0);
    state.relation.resize(static_cast<size_t>(need_relations) * state.dim, 0.0);
    if (model.kind == ModelKind::TransH)
        state.aux.resize(static_cast<size_t>(need_relations) * state.dim, 0.0);

    long fallbacks = 0;
#pragma omp parallel for schedule(static) reduction(+ : fallbacks)
    for (long i = 0; i < static_cast<long>(new_entities.size()); ++i) {
        int e = new_entities[static_cast<size_t>(i)];
        Rng rng = substream(seed, static_cast<uint64_t>(e));

        std::vector<double> vec;
        switch (strategy.kind) {
        case InitKind::Random:
            break;
        case InitKind::Model:
            vec = model_init_transe(e, delta, state, embedded_entities, false);
            break;
        case InitKind::ModelHeadOnly:
            vec = model_init_transe(e, delta, state, embedded_entities, true);
            break;
        case InitKind::Schema:
            vec = schema_init(e, schema, stats, strategy.gamma, rng);
            break;
        }

        if (vec.empty() && strategy.kind != InitKind::Random) {
            ++fallbacks;
            if (strategy.fallback == FallbackKind::Global)
                vec = global_fallback(stats, strategy.gamma, rng);
        }
        if (vec.empty()) {
            random_init_entity_row(state, e, model.kind, rng);
        } else {
            auto row = state.entity_row(e);
            std::copy(vec.begin(), vec.end(), row.begin());
        }
    }
    report.fallback_count = fallbacks;

    // New relations are always randomly initialized.
    for (int r : new_relations) {
        Rng rng = substream(seed, 0x52454cull, static_cast<uint64_t>(r));
        random_init_relation_row(state, r, model.kind, rng);
    }

    report.init_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

} // namespace kgec
