#pragma once

#include "kgec/triples.hpp"
#include "kgec/vocab.hpp"

#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgec {

using EntitySet = std::unordered_set<int>;
using RelationSet = std::unordered_set<int>;

// Cumulative view of the KG at step i: every snapshot contains all triples
// of its predecessors plus the new ones.
struct Snapshot {
    TripleSet train;
    TripleSet valid;
    TripleSet test;
    EntitySet entities;
    RelationSet relations;

    TripleSet all_triples() const;
};

struct SnapshotSequence {
    Vocabulary entity_vocab;
    Vocabulary relation_vocab;
    std::vector<Snapshot> snapshots;

    int num_snapshots() const { return static_cast<int>(snapshots.size()); }
    // Number of incremental snapshots (N in the omega metrics).
    int num_increments() const { return num_snapshots() - 1; }
};

// Additions of snapshot i relative to i-1.
struct Delta {
    TripleSet new_triples;   // all new triples across splits
    TripleSet new_train;     // train-split portion, what an increment trains on
    TripleSet new_valid;     // valid-split portion, used for early stopping
    TripleSet new_test;      // test-split portion, the snapshot's own test set
    EntitySet new_entities;
    RelationSet new_relations;

    bool empty() const { return new_triples.empty(); }
};

struct Schema {
    std::unordered_map<int, std::vector<int>> membership; // entity id -> class ids
    Vocabulary class_vocab;
    int skipped_unknown = 0; // lines whose entity token was not in the vocabulary

    const std::vector<int>& classes_of(int entity) const {
        static const std::vector<int> empty;
        auto it = membership.find(entity);
        return it == membership.end() ? empty : it->second;
    }
};

struct ValidationIssue {
    enum class Kind { Inclusion, EmptySnapshot, Leakage, InverseDuplicate };
    Kind kind;
    int snapshot = -1;
    Triple triple{};
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const {
        for (const auto& i : issues)
            if (i.kind != ValidationIssue::Kind::InverseDuplicate) return false;
        return true;
    }
};

// One triple per line, exactly one tab between the three fields.
// Unseen tokens are appended to the vocabularies in first-seen order.
TripleSet load_triples(const std::filesystem::path& path, Vocabulary& entities,
                       Vocabulary& relations);

// "entity<TAB>class" per line; entities absent from the vocabulary are
// skipped and counted in Schema::skipped_unknown.
Schema load_schema(const std::filesystem::path& path, const Vocabulary& entities);

// Reads snapshot<i>/{train,valid,test}.tsv for i = 0.. until a directory is
// missing, plus schema.tsv at the root when present. Files hold per-snapshot
// deltas; the in-memory sequence is cumulative.
struct Dataset {
    SnapshotSequence sequence;
    Schema schema;
};
Dataset load_dataset(const std::filesystem::path& dir);

// Set differences between consecutive cumulative snapshots. Pure.
Delta compute_delta(const Snapshot& prev, const Snapshot& curr);

// Delta of snapshot 0 against an empty KG (everything is new).
Delta base_delta(const Snapshot& base);

ValidationReport validate_sequence(const SnapshotSequence& seq);

} // namespace kgec
