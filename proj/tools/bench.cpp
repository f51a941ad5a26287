// Compares the OpenMP-parallel evaluation and batch-gradient kernels against
// their serial reference paths on a synthetic KG and checks they agree.

#include "kgec/builder.hpp"
#include "kgec/evaluation.hpp"
#include "kgec/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace kgec;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

int main() {
    const int dim = 64;
    SynthKG kg = synth_clustered_kg(6, 60, 0.25, 0.02, 7);
    Rng rng(7);
    EmbeddingState state = make_random_state(kg.entity_vocab.size(),
                                             kg.relation_vocab.size(), dim,
                                             ModelKind::TransE, rng);
    ModelConfig model{ModelKind::TransE, 1, 1.0};
    TripleIndex known = make_index(kg.triples);

    TripleSet queries(kg.triples.begin(),
                      kg.triples.begin() + std::min<size_t>(500, kg.triples.size()));

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#endif
    std::printf("entities: %d  relations: %d  triples: %zu  dim: %d\n",
                kg.entity_vocab.size(), kg.relation_vocab.size(), kg.triples.size(), dim);

    double t0 = now();
    SplitMetrics serial = evaluate_split(state, model, queries, known, false);
    double t1 = now();
    SplitMetrics parallel = evaluate_split(state, model, queries, known, true);
    double t2 = now();
    std::printf("evaluate_split  serial: %.3fs  parallel: %.3fs  speedup: %.2fx\n",
                t1 - t0, t2 - t1, (t1 - t0) / (t2 - t1));
    if (std::fabs(serial.mrr - parallel.mrr) > 0) {
        std::printf("MISMATCH: serial mrr %.17g != parallel mrr %.17g\n", serial.mrr,
                    parallel.mrr);
        return 1;
    }

    t0 = now();
    BatchResult bs = batch_loss(model, state, kg.triples, 10, 1.0, known, 7, 0, false);
    t1 = now();
    BatchResult bp = batch_loss(model, state, kg.triples, 10, 1.0, known, 7, 0, true);
    t2 = now();
    std::printf("batch_loss      serial: %.3fs  parallel: %.3fs  speedup: %.2fx\n",
                t1 - t0, t2 - t1, (t1 - t0) / (t2 - t1));
    if (std::fabs(bs.loss - bp.loss) > 1e-9 * std::fabs(bs.loss)) {
        std::printf("MISMATCH: serial loss %.17g != parallel loss %.17g\n", bs.loss,
                    bp.loss);
        return 1;
    }
    std::printf("ok\n");
    return 0;
}
