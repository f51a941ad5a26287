#pragma once

#include "kgec/kg_store.hpp"
#include "kgec/rng.hpp"

#include <filesystem>
#include <vector>

namespace kgec {

struct BuildSpec {
    long base_count = 0;        // triples in snapshot 0; 0 means use base_fraction
    double base_fraction = 0.5;
    int n_snapshots = 1;        // number of incremental snapshots
    std::vector<long> growth;   // per-increment new-triple targets; empty -> growth_pct
    double growth_pct = 0.1;    // fraction of the current cumulative triple count
    double train_ratio = 0.8;
    double valid_ratio = 0.1;
    double test_ratio = 0.1;
    double growth_tolerance = 0.10; // achieved counts within +-10% of target
    double entity_holdout = 0.0;    // fraction of entities kept out of the base
                                    // snapshot so increments have material
    uint64_t seed = 0;

    void validate() const;
};

struct BuildResult {
    std::vector<long> train_counts;      // per snapshot, delta train triples on disk
    std::vector<long> new_triple_counts; // per snapshot, all new triples
    std::vector<long> new_entity_counts;
};

// Emits the snapshot<i>/{train,valid,test}.tsv layout plus schema.tsv and a
// build_manifest.json under out_dir. Deterministic per seed.
BuildResult build_snapshots(const TripleSet& corpus, const Vocabulary& entity_vocab,
                            const Vocabulary& relation_vocab, const Schema& schema,
                            const BuildSpec& spec, const std::filesystem::path& out_dir);

// Synthetic class-clustered KG: every entity belongs to exactly one class,
// relations are tied to (source class, target class) pairs, so class
// membership is genuinely predictive of embedding position.
struct SynthKG {
    TripleSet triples;
    Vocabulary entity_vocab;
    Vocabulary relation_vocab;
    Schema schema;
};
SynthKG synth_clustered_kg(int n_classes, int entities_per_class, double intra_density,
                           double inter_density, uint64_t seed);

// Writes a SynthKG as a flat corpus.tsv + schema.tsv pair.
void write_corpus(const SynthKG& kg, const std::filesystem::path& dir);

} // namespace kgec
