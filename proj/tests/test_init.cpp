#include <doctest.h>

#include "helpers.hpp"
#include "kgec/errors.hpp"
#include "kgec/init.hpp"

#include <cmath>

using namespace kgec;
using namespace kgec::test;

namespace {

Schema schema_of(const std::vector<std::pair<int, std::string>>& pairs) {
    Schema s;
    for (const auto& [entity, cls] : pairs)
        s.membership[entity].push_back(s.class_vocab.intern(cls));
    return s;
}

EmbeddingState two_dim_state(std::vector<std::vector<double>> rows) {
    EmbeddingState s;
    s.dim = 2;
    for (auto& r : rows) s.entity.insert(s.entity.end(), r.begin(), r.end());
    return s;
}

} // namespace

TEST_CASE("compute_class_stats") {
    // class A = {0:(1,2), 1:(3,4)}, class B = {2:(0,0)}
    EmbeddingState state = two_dim_state({{1, 2}, {3, 4}, {0, 0}});
    Schema schema = schema_of({{0, "A"}, {1, "A"}, {2, "B"}});
    EntitySet embedded{0, 1, 2};

    SUBCASE("centroid and population sigma by hand") {
        ClassStats stats = compute_class_stats(state, schema, embedded);
        int a = *schema.class_vocab.find("A");
        REQUIRE(stats.per_class.count(a));
        const ClassStat& ca = stats.per_class.at(a);
        CHECK(ca.count == 2);
        CHECK(ca.centroid[0] == doctest::Approx(2.0));
        CHECK(ca.centroid[1] == doctest::Approx(3.0));
        CHECK(ca.sigma[0] == doctest::Approx(1.0)); // population: sqrt(((1-2)^2+(3-2)^2)/2)
        CHECK(ca.sigma[1] == doctest::Approx(1.0));
    }
    SUBCASE("singleton class has zero sigma") {
        ClassStats stats = compute_class_stats(state, schema, embedded);
        int b = *schema.class_vocab.find("B");
        const ClassStat& cb = stats.per_class.at(b);
        CHECK(cb.count == 1);
        CHECK(cb.sigma[0] == 0.0);
        CHECK(cb.sigma[1] == 0.0);
    }
    SUBCASE("global covers all embedded entities") {
        ClassStats stats = compute_class_stats(state, schema, embedded);
        CHECK(stats.global.count == 3);
        CHECK(stats.global.centroid[0] == doctest::Approx(4.0 / 3));
        CHECK(stats.global.centroid[1] == doctest::Approx(2.0));
    }
    SUBCASE("entities outside the embedded set are excluded") {
        ClassStats stats = compute_class_stats(state, schema, {0, 2});
        int a = *schema.class_vocab.find("A");
        CHECK(stats.per_class.at(a).count == 1);
        CHECK(stats.per_class.at(a).centroid[0] == doctest::Approx(1.0));
        CHECK(stats.global.count == 2);
    }
}

TEST_CASE("compute_class_stats matches a two-pass oracle on random data") {
    Rng rng(17);
    const int n = 40, dim = 6;
    EmbeddingState state;
    state.dim = dim;
    std::normal_distribution<double> norm;
    for (int i = 0; i < n * dim; ++i) state.entity.push_back(norm(rng));
    Schema schema;
    EntitySet embedded;
    for (int e = 0; e < n; ++e) {
        embedded.insert(e);
        schema.membership[e].push_back(
            schema.class_vocab.intern("c" + std::to_string(e % 4)));
        if (e % 3 == 0)
            schema.membership[e].push_back(schema.class_vocab.intern("extra"));
    }
    ClassStats stats = compute_class_stats(state, schema, embedded);

    for (int c = 0; c < schema.class_vocab.size(); ++c) {
        std::vector<int> members;
        for (int e = 0; e < n; ++e)
            for (int mc : schema.membership[e])
                if (mc == c) members.push_back(e);
        REQUIRE(stats.per_class.count(c));
        const ClassStat& got = stats.per_class.at(c);
        CHECK(got.count == static_cast<long>(members.size()));
        for (int k = 0; k < dim; ++k) {
            double mean = 0;
            for (int e : members) mean += state.entity_row(e)[k];
            mean /= members.size();
            double var = 0;
            for (int e : members) {
                double d = state.entity_row(e)[k] - mean;
                var += d * d;
            }
            var /= members.size();
            CHECK(std::fabs(got.centroid[k] - mean) < 1e-9);
            CHECK(std::fabs(got.sigma[k] - std::sqrt(var)) < 1e-9);
        }
    }
}

TEST_CASE("schema_init") {
    EmbeddingState state = two_dim_state({{1, 2}, {3, 4}, {0, 0}, {10, 10}});
    Schema schema = schema_of({{0, "A"}, {1, "A"}, {2, "B"}, {3, "B"}, {4, "A"}, {4, "B"},
                               {5, "Unseen"}});
    EntitySet embedded{0, 1, 2, 3};
    ClassStats stats = compute_class_stats(state, schema, embedded);

    SUBCASE("gamma=0 returns the class centroid exactly") {
        Rng rng(3);
        auto v = schema_init(0, schema, stats, 0.0, rng);
        CHECK(v == std::vector<double>{2, 3});
    }
    SUBCASE("multi-class entity averages its class terms") {
        Rng rng(3);
        auto v = schema_init(4, schema, stats, 0.0, rng);
        // mean of centroid(A)=(2,3) and centroid(B)=(5,5)
        CHECK(v[0] == doctest::Approx(3.5));
        CHECK(v[1] == doctest::Approx(4.0));
    }
    SUBCASE("zero sigma neutralizes the perturbation even at large gamma") {
        EmbeddingState s1 = two_dim_state({{1, 2}});
        Schema sch = schema_of({{0, "Only"}, {1, "Only"}});
        ClassStats st = compute_class_stats(s1, sch, {0});
        Rng rng(3);
        auto v = schema_init(1, sch, st, 100.0, rng);
        CHECK(v == std::vector<double>{1, 2});
    }
    SUBCASE("gamma scales the deviation from the centroid linearly") {
        Rng r1(9), r2(9);
        auto a = schema_init(0, schema, stats, 0.1, r1);
        auto b = schema_init(0, schema, stats, 0.2, r2);
        int c = *schema.class_vocab.find("A");
        const auto& cen = stats.per_class.at(c).centroid;
        for (int k = 0; k < 2; ++k)
            CHECK(b[k] - cen[k] == doctest::Approx(2 * (a[k] - cen[k])));
    }
    SUBCASE("entity with no usable class returns empty") {
        Rng rng(3);
        CHECK(schema_init(5, schema, stats, 0.5, rng).empty());
        CHECK(schema_init(7, schema, stats, 0.5, rng).empty()); // no class at all
    }
}

TEST_CASE("model_init_transe") {
    // embedded: 0:(1,1) 1:(5,5); relation 0 = (1,0)
    EmbeddingState state = two_dim_state({{1, 1}, {5, 5}});
    state.relation = {1, 0};
    EntitySet embedded{0, 1};

    SUBCASE("head triple contributes t - r") {
        Delta d;
        d.new_triples = {{2, 0, 0}};
        auto v = model_init_transe(2, d, state, embedded, false);
        CHECK(v == std::vector<double>{0, 1});
    }
    SUBCASE("tail triple contributes h + r") {
        Delta d;
        d.new_triples = {{1, 0, 2}};
        auto v = model_init_transe(2, d, state, embedded, false);
        CHECK(v == std::vector<double>{6, 5});
    }
    SUBCASE("mixed triples are averaged") {
        Delta d;
        d.new_triples = {{2, 0, 0}, {1, 0, 2}};
        auto v = model_init_transe(2, d, state, embedded, false);
        CHECK(v[0] == doctest::Approx(3.0));
        CHECK(v[1] == doctest::Approx(3.0));
    }
    SUBCASE("head-only variant ignores tail triples") {
        Delta d;
        d.new_triples = {{2, 0, 0}, {1, 0, 2}};
        auto v = model_init_transe(2, d, state, embedded, true);
        CHECK(v == std::vector<double>{0, 1});
    }
    SUBCASE("triples whose counterpart is also new are skipped") {
        Delta d;
        d.new_triples = {{2, 0, 3}, {3, 0, 2}};
        CHECK(model_init_transe(2, d, state, embedded, false).empty());
    }
}

TEST_CASE("initialize_new_entities") {
    Rng rng(7);
    EmbeddingState state = make_random_state(4, 2, 6, ModelKind::TransE, rng);
    Schema schema = schema_of({{0, "A"}, {1, "A"}, {2, "B"}, {3, "B"}, {4, "A"}, {5, "Z"}});
    EntitySet embedded{0, 1, 2, 3};
    ClassStats stats = compute_class_stats(state, schema, embedded);
    ModelConfig model{ModelKind::TransE, 1, 1.0};

    Delta delta;
    delta.new_triples = {{4, 0, 0}, {5, 1, 2}, {6, 0, 1}};
    delta.new_entities = {4, 5, 6};

    SUBCASE("empty delta changes nothing") {
        EmbeddingState before = state;
        Delta none;
        initialize_new_entities(state, none, {InitKind::Schema, 0.1}, schema, stats, model,
                                embedded, 1);
        CHECK(state.entity == before.entity);
        CHECK(state.relation == before.relation);
    }
    SUBCASE("existing rows are untouched, new rows appended") {
        EmbeddingState before = state;
        InitReport rep = initialize_new_entities(state, delta, {InitKind::Schema, 0.1},
                                                 schema, stats, model, embedded, 1);
        CHECK(state.num_entities() == 7);
        for (int e = 0; e < 4; ++e)
            for (int k = 0; k < 6; ++k)
                CHECK(state.entity_row(e)[k] == before.entity_row(e)[k]);
        // 5 has class Z (no embedded member), 6 has none: both fall back
        CHECK(rep.fallback_count == 2);
        CHECK(rep.strategy == "schema");
    }
    SUBCASE("global fallback lands on the overall centroid at gamma=0") {
        initialize_new_entities(state, delta, {InitKind::Schema, 0.0}, schema, stats,
                                model, embedded, 1);
        for (int k = 0; k < 6; ++k)
            CHECK(state.entity_row(6)[k] == doctest::Approx(stats.global.centroid[k]));
    }
    SUBCASE("gamma=0 schema rows are seed independent") {
        EmbeddingState s1 = state, s2 = state;
        initialize_new_entities(s1, delta, {InitKind::Schema, 0.0}, schema, stats, model,
                                embedded, 1);
        initialize_new_entities(s2, delta, {InitKind::Schema, 0.0}, schema, stats, model,
                                embedded, 999);
        for (int k = 0; k < 6; ++k) CHECK(s1.entity_row(4)[k] == s2.entity_row(4)[k]);
    }
    SUBCASE("same seed is bit-identical, different seed differs at gamma>0") {
        EmbeddingState s1 = state, s2 = state, s3 = state;
        InitStrategy strat{InitKind::Schema, 0.5};
        initialize_new_entities(s1, delta, strat, schema, stats, model, embedded, 5);
        initialize_new_entities(s2, delta, strat, schema, stats, model, embedded, 5);
        initialize_new_entities(s3, delta, strat, schema, stats, model, embedded, 6);
        CHECK(s1.entity == s2.entity);
        CHECK(s1.entity != s3.entity);
    }
    SUBCASE("model strategy uses neighbor positions") {
        initialize_new_entities(state, delta, {InitKind::Model, 0.0}, schema, stats, model,
                                embedded, 1);
        // entity 4 appears as head of (4,0,0): expected row = e0 - r0
        for (int k = 0; k < 6; ++k)
            CHECK(state.entity_row(4)[k] ==
                  doctest::Approx(state.entity_row(0)[k] - state.relation_row(0)[k]));
    }
    SUBCASE("model strategy rejects non-translational scorers") {
        ModelConfig dm{ModelKind::DistMult, 1, 1.0};
        Rng r2(7);
        EmbeddingState s = make_random_state(4, 2, 6, ModelKind::DistMult, r2);
        CHECK_THROWS_AS(initialize_new_entities(s, delta, {InitKind::Model, 0.0}, schema,
                                                stats, dm, embedded, 1),
                        ConfigError);
    }
    SUBCASE("random fallback differs from the global centroid") {
        EmbeddingState s = state;
        initialize_new_entities(s, delta,
                                {InitKind::Schema, 0.0, FallbackKind::Random}, schema,
                                stats, model, embedded, 3);
        bool differs = false;
        for (int k = 0; k < 6; ++k)
            if (s.entity_row(6)[k] != stats.global.centroid[k]) differs = true;
        CHECK(differs);
    }
    SUBCASE("new relations get rows regardless of strategy") {
        Delta d;
        d.new_triples = {{0, 2, 1}};
        d.new_relations = {2};
        initialize_new_entities(state, d, {InitKind::Random, 0.0}, schema, stats, model,
                                embedded, 1);
        CHECK(state.num_relations() == 3);
        bool nonzero = false;
        for (int k = 0; k < 6; ++k)
            if (state.relation_row(2)[k] != 0.0) nonzero = true;
        CHECK(nonzero);
    }
}

TEST_CASE("schema rows concentrate near their class centroid vs random rows") {
    // Degeneration guard: with tight clusters the schema strategy must place
    // new entities closer to their class centroid than random init does.
    Rng rng(101);
    const int dim = 8;
    EmbeddingState state;
    state.dim = dim;
    Schema schema;
    EntitySet embedded;
    std::normal_distribution<double> norm;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 20; ++i) {
            int e = c * 20 + i;
            embedded.insert(e);
            schema.membership[e].push_back(schema.class_vocab.intern("c" + std::to_string(c)));
            for (int k = 0; k < dim; ++k)
                state.entity.push_back((c == 0 ? 5.0 : -5.0) + 0.1 * norm(rng));
        }
    ClassStats stats = compute_class_stats(state, schema, embedded);
    ModelConfig model{ModelKind::TransE, 1, 1.0};

    int schema_wins = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        int e = 40 + trial;
        Schema sch = schema;
        sch.membership[e].push_back(*sch.class_vocab.find("c0"));
        Delta d;
        d.new_entities = {e};
        d.new_triples = {{e, 0, 0}};
        EmbeddingState s_schema = state, s_random = state;
        initialize_new_entities(s_schema, d, {InitKind::Schema, 0.1}, sch, stats, model,
                                embedded, 1000 + trial);
        initialize_new_entities(s_random, d, {InitKind::Random, 0.0}, sch, stats, model,
                                embedded, 1000 + trial);
        auto dist_to = [&](const EmbeddingState& s) {
            double d2 = 0;
            const auto& cen = stats.per_class.at(0).centroid;
            for (int k = 0; k < dim; ++k) {
                double diff = s.entity_row(e)[k] - cen[k];
                d2 += diff * diff;
            }
            return d2;
        };
        if (dist_to(s_schema) < dist_to(s_random)) ++schema_wins;
    }
    CHECK(schema_wins == trials);
}
