#include "kgec/kg_store.hpp"
#include "kgec/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace kgec {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

void collect_ids(const TripleSet& triples, EntitySet& ents, RelationSet& rels) {
    for (const Triple& t : triples) {
        ents.insert(t.head);
        ents.insert(t.tail);
        rels.insert(t.relation);
    }
}

} // namespace

TripleSet Snapshot::all_triples() const {
    TripleSet all;
    all.reserve(train.size() + valid.size() + test.size());
    all.insert(all.end(), train.begin(), train.end());
    all.insert(all.end(), valid.begin(), valid.end());
    all.insert(all.end(), test.begin(), test.end());
    return all;
}

TripleSet load_triples(const std::filesystem::path& path, Vocabulary& entities,
                       Vocabulary& relations) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open triple file: " + path.string());

    TripleSet triples;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3)
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 3 tab-separated fields, got " +
                             std::to_string(fields.size()));
        Triple t;
        t.head = entities.intern(fields[0]);
        t.relation = relations.intern(fields[1]);
        t.tail = entities.intern(fields[2]);
        triples.push_back(t);
    }
    return triples;
}

Schema load_schema(const std::filesystem::path& path, const Vocabulary& entities) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open schema file: " + path.string());

    Schema schema;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 2)
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 2 tab-separated fields, got " +
                             std::to_string(fields.size()));
        auto ent = entities.find(fields[0]);
        if (!ent) {
            ++schema.skipped_unknown;
            continue;
        }
        int cls = schema.class_vocab.intern(fields[1]);
        auto& classes = schema.membership[*ent];
        if (std::find(classes.begin(), classes.end(), cls) == classes.end())
            classes.push_back(cls);
    }
    return schema;
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    SnapshotSequence& seq = ds.sequence;

    Snapshot cumulative;
    for (int i = 0;; ++i) {
        auto snap_dir = dir / ("snapshot" + std::to_string(i));
        if (!std::filesystem::is_directory(snap_dir)) {
            if (i == 0) throw ParseError("no snapshot0 directory under " + dir.string());
            break;
        }
        auto new_train = load_triples(snap_dir / "train.tsv", seq.entity_vocab,
                                      seq.relation_vocab);
        auto new_valid = load_triples(snap_dir / "valid.tsv", seq.entity_vocab,
                                      seq.relation_vocab);
        auto new_test = load_triples(snap_dir / "test.tsv", seq.entity_vocab,
                                     seq.relation_vocab);
        cumulative.train.insert(cumulative.train.end(), new_train.begin(), new_train.end());
        cumulative.valid.insert(cumulative.valid.end(), new_valid.begin(), new_valid.end());
        cumulative.test.insert(cumulative.test.end(), new_test.begin(), new_test.end());
        collect_ids(new_train, cumulative.entities, cumulative.relations);
        collect_ids(new_valid, cumulative.entities, cumulative.relations);
        collect_ids(new_test, cumulative.entities, cumulative.relations);
        seq.snapshots.push_back(cumulative);
    }

    auto schema_path = dir / "schema.tsv";
    if (std::filesystem::exists(schema_path))
        ds.schema = load_schema(schema_path, seq.entity_vocab);
    return ds;
}

Delta compute_delta(const Snapshot& prev, const Snapshot& curr) {
    TripleIndex prev_all = make_index(prev.all_triples());

    Delta d;
    auto add_new = [&](const TripleSet& triples, int split) {
        for (const Triple& t : triples) {
            if (prev_all.count(t)) continue;
            d.new_triples.push_back(t);
            if (split == 0) d.new_train.push_back(t);
            if (split == 1) d.new_valid.push_back(t);
            if (split == 2) d.new_test.push_back(t);
            if (!prev.entities.count(t.head)) d.new_entities.insert(t.head);
            if (!prev.entities.count(t.tail)) d.new_entities.insert(t.tail);
            if (!prev.relations.count(t.relation)) d.new_relations.insert(t.relation);
        }
    };
    add_new(curr.train, 0);
    add_new(curr.valid, 1);
    add_new(curr.test, 2);
    return d;
}

Delta base_delta(const Snapshot& base) {
    Snapshot empty;
    return compute_delta(empty, base);
}

ValidationReport validate_sequence(const SnapshotSequence& seq) {
    ValidationReport report;

    TripleIndex all_train;
    for (const auto& snap : seq.snapshots)
        for (const Triple& t : snap.train) all_train.insert(t);

    for (int i = 0; i < seq.num_snapshots(); ++i) {
        const Snapshot& snap = seq.snapshots[static_cast<size_t>(i)];
        if (snap.train.empty() && snap.valid.empty() && snap.test.empty())
            report.issues.push_back({ValidationIssue::Kind::EmptySnapshot, i, {},
                                     "snapshot has no triples"});

        if (i > 0) {
            const Snapshot& prev = seq.snapshots[static_cast<size_t>(i - 1)];
            TripleIndex curr_all = make_index(snap.all_triples());
            for (const Triple& t : prev.all_triples()) {
                if (!curr_all.count(t)) {
                    report.issues.push_back({ValidationIssue::Kind::Inclusion, i, t,
                                             "triple of snapshot " + std::to_string(i - 1) +
                                                 " missing from snapshot " + std::to_string(i)});
                }
            }
            for (int e : prev.entities)
                if (!snap.entities.count(e)) {
                    // sequences assembled in memory may have no vocabulary
                    std::string name = e < seq.entity_vocab.size()
                                           ? seq.entity_vocab.token(e)
                                           : "#" + std::to_string(e);
                    report.issues.push_back({ValidationIssue::Kind::Inclusion, i,
                                             {e, -1, -1},
                                             "entity " + name + " missing from snapshot " +
                                                 std::to_string(i)});
                }
        }
    }

    // Leakage and inverse duplicates against the final cumulative test set.
    if (!seq.snapshots.empty()) {
        const Snapshot& last = seq.snapshots.back();
        TripleIndex seen;
        for (const Triple& t : last.test) {
            if (all_train.count(t))
                report.issues.push_back({ValidationIssue::Kind::Leakage, -1, t,
                                         "test triple also appears in a train split"});
            Triple inv{t.tail, t.relation, t.head};
            if (seen.count(inv) && !(inv == t))
                report.issues.push_back({ValidationIssue::Kind::InverseDuplicate, -1, t,
                                         "inverse of another test triple"});
            seen.insert(t);
        }
    }
    return report;
}

} // namespace kgec
