#include "kgec/builder.hpp"
#include "kgec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace kgec {

void BuildSpec::validate() const {
    if (n_snapshots < 1) throw ConfigError("n_snapshots must be >= 1");
    double sum = train_ratio + valid_ratio + test_ratio;
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");
    if (train_ratio <= 0 || valid_ratio <= 0 || test_ratio <= 0)
        throw ConfigError("split ratios must be positive");
    if (!growth.empty() && static_cast<int>(growth.size()) != n_snapshots)
        throw ConfigError("growth list length must equal n_snapshots");
    for (long g : growth)
        if (g < 1) throw ConfigError("every snapshot must introduce new triples");
    if (growth.empty() && growth_pct <= 0)
        throw ConfigError("growth percentage must be positive");
    if (entity_holdout < 0 || entity_holdout >= 1)
        throw ConfigError("entity holdout must lie in [0, 1)");
}

namespace {

// Split one snapshot's new triples so that every entity new to this snapshot
// appears in at least one train triple.
struct SplitResult {
    TripleSet train, valid, test;
};

SplitResult split_snapshot(const TripleSet& new_triples, const EntitySet& new_entities,
                           const BuildSpec& spec, Rng& rng) {
    std::set<int> uncovered(new_entities.begin(), new_entities.end());
    std::vector<char> forced(new_triples.size(), 0);
    for (size_t i = 0; i < new_triples.size() && !uncovered.empty(); ++i) {
        const Triple& t = new_triples[i];
        if (uncovered.count(t.head) || uncovered.count(t.tail)) {
            forced[i] = 1;
            uncovered.erase(t.head);
            uncovered.erase(t.tail);
        }
    }
    if (!uncovered.empty())
        throw ValidationError("new entity appears in no triple of its snapshot");

    SplitResult out;
    std::vector<size_t> rest;
    for (size_t i = 0; i < new_triples.size(); ++i) {
        if (forced[i]) out.train.push_back(new_triples[i]);
        else rest.push_back(i);
    }
    std::shuffle(rest.begin(), rest.end(), rng);

    long total = static_cast<long>(new_triples.size());
    long n_valid = std::lround(spec.valid_ratio * total);
    long n_test = std::lround(spec.test_ratio * total);
    for (size_t i : rest) {
        if (static_cast<long>(out.valid.size()) < n_valid)
            out.valid.push_back(new_triples[i]);
        else if (static_cast<long>(out.test.size()) < n_test)
            out.test.push_back(new_triples[i]);
        else out.train.push_back(new_triples[i]);
    }
    return out;
}

void write_split(const std::filesystem::path& path, const TripleSet& triples,
                 const Vocabulary& ev, const Vocabulary& rv) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    for (const Triple& t : triples)
        out << ev.token(t.head) << '\t' << rv.token(t.relation) << '\t'
            << ev.token(t.tail) << '\n';
}

} // namespace

BuildResult build_snapshots(const TripleSet& corpus, const Vocabulary& entity_vocab,
                            const Vocabulary& relation_vocab, const Schema& schema,
                            const BuildSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    if (corpus.empty()) throw ConfigError("empty corpus");

    Rng rng = substream(spec.seed, 0xb01dull);

    long base_target = spec.base_count > 0
                           ? spec.base_count
                           : std::lround(spec.base_fraction * static_cast<double>(corpus.size()));
    if (base_target < 1 || base_target > static_cast<long>(corpus.size()))
        throw ConfigError("base snapshot size out of range");

    // Triples containing each entity, for the candidate-pull step.
    std::unordered_map<int, std::vector<size_t>> by_entity;
    for (size_t i = 0; i < corpus.size(); ++i) {
        by_entity[corpus[i].head].push_back(i);
        if (corpus[i].tail != corpus[i].head) by_entity[corpus[i].tail].push_back(i);
    }

    // Reserve a slice of entities for the increments; the base snapshot may
    // not touch them. Without this, a dense corpus leaves nothing to grow by.
    EntitySet held;
    if (spec.entity_holdout > 0) {
        std::vector<int> with_triples;
        for (int e = 0; e < entity_vocab.size(); ++e)
            if (by_entity.count(e)) with_triples.push_back(e);
        std::shuffle(with_triples.begin(), with_triples.end(), rng);
        size_t n_held = static_cast<size_t>(
            std::lround(spec.entity_holdout * static_cast<double>(with_triples.size())));
        held.insert(with_triples.begin(),
                    with_triples.begin() + static_cast<long>(n_held));
    }

    std::vector<size_t> shuffled(corpus.size());
    for (size_t i = 0; i < shuffled.size(); ++i) shuffled[i] = i;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    std::vector<char> used(corpus.size(), 0);
    EntitySet included;
    TripleSet base;
    for (size_t i = 0; i < shuffled.size() && static_cast<long>(base.size()) < base_target;
         ++i) {
        size_t idx = shuffled[i];
        if (held.count(corpus[idx].head) || held.count(corpus[idx].tail)) continue;
        used[idx] = 1;
        base.push_back(corpus[idx]);
        included.insert(corpus[idx].head);
        included.insert(corpus[idx].tail);
    }
    if (static_cast<long>(base.size()) < base_target)
        throw ConfigError("base snapshot target unattainable with the entity holdout");

    // Candidate entities absent from the base, in a seeded uniform order.
    std::vector<int> candidates;
    for (int e = 0; e < entity_vocab.size(); ++e)
        if (!included.count(e) && by_entity.count(e)) candidates.push_back(e);
    std::shuffle(candidates.begin(), candidates.end(), rng);

    std::vector<TripleSet> snapshot_new(1, base);
    std::vector<EntitySet> snapshot_new_entities(1, included);

    size_t cand_pos = 0;
    long cumulative = static_cast<long>(base.size());
    for (int snap = 1; snap <= spec.n_snapshots; ++snap) {
        long target = spec.growth.empty()
                          ? std::max<long>(1, std::lround(spec.growth_pct * cumulative))
                          : spec.growth[static_cast<size_t>(snap - 1)];
        long lo = std::lround((1.0 - spec.growth_tolerance) * target);
        long hi = std::lround((1.0 + spec.growth_tolerance) * target);

        TripleSet added;
        EntitySet new_entities;
        while (static_cast<long>(added.size()) < target && cand_pos < candidates.size()) {
            int e = candidates[cand_pos++];
            if (included.count(e)) continue; // pulled in as a counterpart earlier
            // All corpus triples of e whose counterpart is already included
            // (or is e itself), capped so we do not overshoot the tolerance.
            bool any = false;
            for (size_t idx : by_entity[e]) {
                if (used[idx]) continue;
                const Triple& t = corpus[idx];
                int other = t.head == e ? t.tail : t.head;
                if (other != e && !included.count(other)) continue;
                if (static_cast<long>(added.size()) >= hi) break;
                used[idx] = 1;
                added.push_back(t);
                any = true;
            }
            if (any) {
                included.insert(e);
                new_entities.insert(e);
            }
        }
        if (static_cast<long>(added.size()) < lo || new_entities.empty())
            throw ValidationError("growth target unattainable for snapshot " +
                                  std::to_string(snap));
        cumulative += static_cast<long>(added.size());
        snapshot_new.push_back(std::move(added));
        snapshot_new_entities.push_back(std::move(new_entities));
    }

    std::filesystem::create_directories(out_dir);
    BuildResult result;
    nlohmann::json manifest;
    manifest["seed"] = spec.seed;
    manifest["n_snapshots"] = spec.n_snapshots;
    manifest["split_ratios"] = {spec.train_ratio, spec.valid_ratio, spec.test_ratio};

    for (size_t i = 0; i < snapshot_new.size(); ++i) {
        Rng split_rng = substream(spec.seed, 0x5b117ull, i);
        SplitResult split =
            split_snapshot(snapshot_new[i], snapshot_new_entities[i], spec, split_rng);
        auto dir = out_dir / ("snapshot" + std::to_string(i));
        std::filesystem::create_directories(dir);
        write_split(dir / "train.tsv", split.train, entity_vocab, relation_vocab);
        write_split(dir / "valid.tsv", split.valid, entity_vocab, relation_vocab);
        write_split(dir / "test.tsv", split.test, entity_vocab, relation_vocab);
        result.train_counts.push_back(static_cast<long>(split.train.size()));
        result.new_triple_counts.push_back(static_cast<long>(snapshot_new[i].size()));
        result.new_entity_counts.push_back(
            static_cast<long>(snapshot_new_entities[i].size()));
    }
    manifest["train_counts"] = result.train_counts;
    manifest["new_triple_counts"] = result.new_triple_counts;
    manifest["new_entity_counts"] = result.new_entity_counts;

    // Schema restricted to the entities that made it into the dataset.
    {
        std::ofstream out(out_dir / "schema.tsv");
        for (int e = 0; e < entity_vocab.size(); ++e) {
            if (!included.count(e)) continue;
            for (int c : schema.classes_of(e))
                out << entity_vocab.token(e) << '\t' << schema.class_vocab.token(c)
                    << '\n';
        }
    }
    std::ofstream(out_dir / "build_manifest.json") << manifest.dump(2) << '\n';
    return result;
}

SynthKG synth_clustered_kg(int n_classes, int entities_per_class, double intra_density,
                           double inter_density, uint64_t seed) {
    if (n_classes < 2) throw ConfigError("synth kg needs at least 2 classes");
    if (intra_density < 0 || intra_density > 1 || inter_density < 0 || inter_density > 1)
        throw ConfigError("densities must lie in [0, 1]");

    SynthKG kg;
    Rng rng = substream(seed, 0x5c1ull);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    std::vector<int> class_ids;
    for (int c = 0; c < n_classes; ++c)
        class_ids.push_back(kg.schema.class_vocab.intern("class" + std::to_string(c)));

    std::vector<std::vector<int>> members(static_cast<size_t>(n_classes));
    for (int c = 0; c < n_classes; ++c) {
        for (int i = 0; i < entities_per_class; ++i) {
            int e = kg.entity_vocab.intern("e" + std::to_string(c) + "_" +
                                           std::to_string(i));
            members[static_cast<size_t>(c)].push_back(e);
            kg.schema.membership[e] = {class_ids[static_cast<size_t>(c)]};
        }
    }

    // One relation per ordered class pair; intra-class relations connect
    // entities of the same cluster.
    for (int a = 0; a < n_classes; ++a) {
        for (int b = 0; b < n_classes; ++b) {
            int rel = kg.relation_vocab.intern("r" + std::to_string(a) + "_" +
                                               std::to_string(b));
            double density = a == b ? intra_density : inter_density;
            for (int h : members[static_cast<size_t>(a)]) {
                for (int t : members[static_cast<size_t>(b)]) {
                    if (h == t) continue;
                    if (coin(rng) < density) kg.triples.push_back({h, rel, t});
                }
            }
        }
    }
    return kg;
}

void write_corpus(const SynthKG& kg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_split(dir / "corpus.tsv", kg.triples, kg.entity_vocab, kg.relation_vocab);
    std::ofstream out(dir / "schema.tsv");
    for (int e = 0; e < kg.entity_vocab.size(); ++e)
        for (int c : kg.schema.classes_of(e))
            out << kg.entity_vocab.token(e) << '\t' << kg.schema.class_vocab.token(c)
                << '\n';
}

} // namespace kgec
