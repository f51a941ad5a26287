#include <doctest.h>

#include "helpers.hpp"
#include "kgec/errors.hpp"
#include "kgec/models.hpp"
#include "kgec/training.hpp"

#include <cmath>
#include <numbers>

using namespace kgec;
using namespace kgec::test;

namespace {

EmbeddingState state_from(std::vector<std::vector<double>> ents,
                          std::vector<std::vector<double>> rels,
                          std::vector<std::vector<double>> aux = {}) {
    EmbeddingState s;
    s.dim = static_cast<int>(ents.front().size());
    for (auto& e : ents) s.entity.insert(s.entity.end(), e.begin(), e.end());
    for (auto& r : rels) s.relation.insert(s.relation.end(), r.begin(), r.end());
    for (auto& w : aux) s.aux.insert(s.aux.end(), w.begin(), w.end());
    return s;
}

} // namespace

TEST_CASE("TransE exact translation scores zero") {
    auto s = state_from({{1, 0}, {1, 1}}, {{0, 1}});
    ModelConfig m{ModelKind::TransE, 2, 1.0};
    CHECK(score(m, s, {0, 0, 1}) == doctest::Approx(0.0));
}

TEST_CASE("DistMult trilinear form, hand evaluated") {
    auto s = state_from({{1, 2}, {2, 1}}, {{1, 1}});
    ModelConfig m{ModelKind::DistMult, 1, 1.0};
    CHECK(score(m, s, {0, 0, 1}) == doctest::Approx(4.0));
}

TEST_CASE("TransH with normal orthogonal to h and t equals TransE") {
    // h, t in the xy-plane, normal along z
    auto s = state_from({{1, 2, 0}, {0, 1, 0}}, {{0.5, -1, 0}}, {{0, 0, 1}});
    ModelConfig th{ModelKind::TransH, 2, 1.0};
    ModelConfig te{ModelKind::TransE, 2, 1.0};
    CHECK(score(th, s, {0, 0, 1}) == doctest::Approx(score(te, s, {0, 0, 1})));
}

TEST_CASE("DistMult score is symmetric in head and tail") {
    Rng rng(5);
    auto state = make_random_state(6, 3, 8, ModelKind::DistMult, rng);
    ModelConfig m{ModelKind::DistMult, 1, 1.0};
    for (int i = 0; i < 50; ++i) {
        Triple t{static_cast<int>(rng() % 6), static_cast<int>(rng() % 3),
                 static_cast<int>(rng() % 6)};
        CHECK(score(m, state, t) ==
              doctest::Approx(score(m, state, {t.tail, t.relation, t.head})));
    }
}

TEST_CASE("TransE scores are invariant under a global entity translation") {
    Rng rng(9);
    auto state = make_random_state(8, 4, 6, ModelKind::TransE, rng);
    EmbeddingState shifted = state;
    for (int e = 0; e < shifted.num_entities(); ++e)
        for (int k = 0; k < shifted.dim; ++k) shifted.entity_row(e)[k] += 0.375;
    for (int p : {1, 2}) {
        ModelConfig m{ModelKind::TransE, p, 1.0};
        for (int i = 0; i < 50; ++i) {
            Triple t{static_cast<int>(rng() % 8), static_cast<int>(rng() % 4),
                     static_cast<int>(rng() % 8)};
            CHECK(score(m, state, t) ==
                  doctest::Approx(score(m, shifted, t)).epsilon(1e-12));
        }
    }
}

TEST_CASE("TransE gradient convention at the exact translation point") {
    auto s = state_from({{1, 0}, {1, 1}}, {{0, 1}});
    ModelConfig m{ModelKind::TransE, 2, 1.0};
    auto g = score_gradients(m, s, {0, 0, 1});
    for (double x : g.head) CHECK(x == 0.0);
}

TEST_CASE("DistMult head gradient is r (.) t exactly") {
    auto s = state_from({{1, 2}, {2, 1}}, {{3, -1}});
    ModelConfig m{ModelKind::DistMult, 1, 1.0};
    auto g = score_gradients(m, s, {0, 0, 1});
    CHECK(g.head[0] == doctest::Approx(3 * 2));
    CHECK(g.head[1] == doctest::Approx(-1 * 1));
}

TEST_CASE("analytic gradients match finite differences for every model") {
    const int dim = 8;
    for (ModelKind kind : {ModelKind::TransE, ModelKind::TransH, ModelKind::DistMult,
                           ModelKind::RotatE}) {
        for (int p : {1, 2}) {
            if ((kind == ModelKind::DistMult || kind == ModelKind::RotatE) && p == 2)
                continue;
            CAPTURE(to_string(kind));
            CAPTURE(p);
            Rng rng(mix_seed(42, static_cast<uint64_t>(kind) * 2 + p));
            auto state = make_random_state(10, 5, dim, kind, rng);
            ModelConfig m{kind, p, 1.0};
            int checked = 0;
            while (checked < 30) {
                Triple t{static_cast<int>(rng() % 10), static_cast<int>(rng() % 5),
                         static_cast<int>(rng() % 10)};
                if (t.head == t.tail) continue;
                if (p == 1) {
                    // skip triples near the |.|_1 kink
                    std::vector<double> delta(dim);
                    bool near_kink = false;
                    auto h = state.entity_row(t.head);
                    auto r = state.relation_row(t.relation);
                    auto tl = state.entity_row(t.tail);
                    for (int k = 0; k < dim; ++k)
                        if (std::fabs(h[k] + r[k] - tl[k]) < 1e-3) near_kink = true;
                    if (kind == ModelKind::TransE && near_kink) continue;
                }
                auto g = score_gradients(m, state, t);
                CHECK(rel_error(g.head, fd_gradient(m, state, t, Param::Head)) < 1e-4);
                CHECK(rel_error(g.relation, fd_gradient(m, state, t, Param::Relation)) <
                      1e-4);
                CHECK(rel_error(g.tail, fd_gradient(m, state, t, Param::Tail)) < 1e-4);
                if (kind == ModelKind::TransH)
                    CHECK(rel_error(g.aux, fd_gradient(m, state, t, Param::Aux)) < 1e-4);
                ++checked;
            }
        }
    }
}

TEST_CASE("RotatE requires an even dimension") {
    Rng rng(1);
    CHECK_THROWS_AS(make_random_state(3, 2, 5, ModelKind::RotatE, rng), ConfigError);
}

TEST_CASE("RotatE phases stay in range after updates") {
    Rng rng(3);
    auto state = make_random_state(6, 3, 8, ModelKind::RotatE, rng);
    ModelConfig m{ModelKind::RotatE, 1, 1.0};
    Adam adam(0.5); // large steps to force wrap-around
    TripleIndex known;
    for (int step = 0; step < 50; ++step) {
        TripleSet batch{{static_cast<int>(rng() % 6), static_cast<int>(rng() % 3),
                         static_cast<int>(rng() % 6)}};
        if (batch[0].head == batch[0].tail) continue;
        BatchResult b = batch_loss(m, state, batch, 4, 1.0, known, 3, step, false);
        adam.apply(state, m.kind, b.grads);
    }
    for (int r = 0; r < state.num_relations(); ++r)
        for (int j = 0; j < state.dim / 2; ++j) {
            double phase = state.relation_row(r)[j];
            CHECK(phase >= -std::numbers::pi);
            CHECK(phase < std::numbers::pi);
        }
}

TEST_CASE("negative sampling") {
    Triple t{3, 1, 7};
    TripleIndex known;
    SUBCASE("k corruptions each differing in exactly one slot") {
        Rng rng(11);
        TripleSet negs = negative_sample(t, 10, 20, known, rng);
        CHECK(negs.size() == 10);
        for (const Triple& n : negs) {
            bool head_changed = n.head != t.head;
            bool tail_changed = n.tail != t.tail;
            CHECK(n.relation == t.relation);
            CHECK(head_changed != tail_changed);
        }
    }
    SUBCASE("fixed seed reproduces the corruption sequence") {
        Rng a(77), b(77);
        CHECK(negative_sample(t, 10, 20, known, a) ==
              negative_sample(t, 10, 20, known, b));
    }
    SUBCASE("exhausted retries increment the false-negative counter") {
        // |E| = 2 and every corruption is a known triple
        Triple small{0, 0, 1};
        TripleIndex all;
        for (int h = 0; h < 2; ++h)
            for (int tl = 0; tl < 2; ++tl) all.insert({h, 0, tl});
        Rng rng(5);
        long fn = 0;
        TripleSet negs = negative_sample(small, 5, 2, all, rng, &fn);
        CHECK(negs.size() == 5);
        CHECK(fn > 0);
    }
    SUBCASE("sampler never returns the positive itself") {
        Rng rng(123);
        for (int i = 0; i < 200; ++i)
            for (const Triple& n : negative_sample(t, 5, 4, known, rng)) CHECK(!(n == t));
    }
}

TEST_CASE("batch_loss") {
    Rng rng(21);
    auto state = make_random_state(10, 4, 6, ModelKind::TransE, rng);
    ModelConfig m{ModelKind::TransE, 1, 1.0};
    TripleIndex known;

    SUBCASE("single pair hinge value") {
        // inflate margin so the hinge is active, then check against scores
        TripleSet pos{{0, 0, 1}};
        BatchResult b = batch_loss(m, state, pos, 1, 100.0, known, 5, 0, false);
        Rng sample_rng = substream(5, 0, 0);
        TripleSet negs = negative_sample(pos[0], 1, 10, known, sample_rng);
        double expected =
            100.0 - score(m, state, pos[0]) + score(m, state, negs[0]);
        CHECK(b.loss == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("inactive hinge gives zero loss and no gradients") {
        TripleSet pos{{0, 0, 1}, {2, 1, 3}};
        BatchResult b = batch_loss(m, state, pos, 2, -1e6, known, 5, 0, false);
        CHECK(b.loss == 0.0);
        CHECK(b.grads.entity.empty());
        CHECK(b.grads.relation.empty());
    }
    SUBCASE("matches the exhaustive double-sum oracle") {
        TripleSet pos{{0, 0, 1}, {2, 1, 3}, {4, 2, 5}};
        const int k = 2;
        BatchResult b = batch_loss(m, state, pos, k, 1.0, known, 9, 3, false);
        double oracle = 0.0;
        for (size_t i = 0; i < pos.size(); ++i) {
            Rng sample_rng = substream(9, 3, i);
            TripleSet negs = negative_sample(pos[i], k, 10, known, sample_rng);
            for (const Triple& neg : negs)
                oracle += std::max(0.0, 1.0 - score(m, state, pos[i]) +
                                            score(m, state, neg));
        }
        oracle /= static_cast<double>(pos.size() * k);
        CHECK(b.loss == doctest::Approx(oracle).epsilon(1e-12));
    }
    SUBCASE("parallel and serial agree on loss") {
        TripleSet pos;
        for (int i = 0; i < 50; ++i)
            pos.push_back({static_cast<int>(rng() % 10), static_cast<int>(rng() % 4),
                           static_cast<int>(rng() % 10)});
        BatchResult a = batch_loss(m, state, pos, 5, 1.0, known, 4, 0, false);
        BatchResult p = batch_loss(m, state, pos, 5, 1.0, known, 4, 0, true);
        CHECK(a.loss == doctest::Approx(p.loss).epsilon(1e-12));
    }
}

TEST_CASE("xavier_init") {
    SUBCASE("bound honored over many samples") {
        Rng rng(31);
        double bound = std::sqrt(6.0 / 400.0);
        double max_abs = 0;
        for (int i = 0; i < 500; ++i)
            for (double x : xavier_init(200, rng)) max_abs = std::max(max_abs, std::fabs(x));
        CHECK(max_abs <= bound);
        CHECK(max_abs > 0.9 * bound); // distribution actually fills the range
    }
    SUBCASE("fixed seed is bit-identical") {
        Rng a(7), b(7);
        CHECK(xavier_init(16, a) == xavier_init(16, b));
    }
    SUBCASE("d=1 lies in [-sqrt(3), sqrt(3)]") {
        Rng rng(3);
        for (int i = 0; i < 100; ++i) {
            double x = xavier_init(1, rng)[0];
            CHECK(std::fabs(x) <= std::sqrt(3.0));
        }
    }
}

TEST_CASE("checkpoint round trip is lossless") {
    Rng rng(55);
    for (ModelKind kind : {ModelKind::TransE, ModelKind::TransH}) {
        auto state = make_random_state(7, 3, 5, kind, rng);
        auto dir = temp_dir("ckpt_" + to_string(kind));
        save_checkpoint(state, kind, dir / "s.ckpt");
        Checkpoint loaded = load_checkpoint(dir / "s.ckpt");
        CHECK(loaded.kind == kind);
        CHECK(loaded.state.dim == state.dim);
        CHECK(loaded.state.entity == state.entity);
        CHECK(loaded.state.relation == state.relation);
        CHECK(loaded.state.aux == state.aux);
    }
}

TEST_CASE("score rejects out-of-range ids") {
    Rng rng(1);
    auto state = make_random_state(3, 2, 4, ModelKind::TransE, rng);
    ModelConfig m{ModelKind::TransE, 1, 1.0};
    CHECK_THROWS_AS(score(m, state, {0, 0, 5}), ContractViolation);
    CHECK_THROWS_AS(score(m, state, {0, 3, 1}), ContractViolation);
}
