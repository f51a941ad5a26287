#pragma once

#include "kgec/models.hpp"
#include "kgec/rng.hpp"
#include "kgec/triples.hpp"

#include <map>
#include <vector>

namespace kgec {

// Each corruption replaces exactly one of {head, tail} with a uniform entity,
// resampled while the result is a known triple. After max_retries the
// collision is accepted and counted as a false negative.
TripleSet negative_sample(const Triple& t, int k, int num_entities,
                          const TripleIndex& known, Rng& rng,
                          long* false_negatives = nullptr, int max_retries = 32);

// Sparse per-row gradient buffer. std::map keeps application order
// deterministic.
struct GradientAccumulator {
    int dim = 0;
    std::map<int, std::vector<double>> entity;
    std::map<int, std::vector<double>> relation;
    std::map<int, std::vector<double>> aux;

    explicit GradientAccumulator(int d = 0) : dim(d) {}

    void add(std::map<int, std::vector<double>>& table, int id,
             const std::vector<double>& grad, double scale);
    void add_triple(const TripleGradients& g, const Triple& t, double scale);
    void merge(const GradientAccumulator& other);
};

struct BatchResult {
    double loss = 0.0;
    GradientAccumulator grads;
    long false_negatives = 0;
};

// Margin ranking loss over the batch:
//   sum_pos sum_neg max(0, margin - score(pos) + score(neg)) / (|pos| * k)
// Gradients flow only through margin-violating pairs. Negative corruptions
// are drawn from substream(seed, batch_index, positive_index), so serial and
// parallel execution sample identically; `parallel` only changes who does
// the work and the floating-point reduction order.
BatchResult batch_loss(const ModelConfig& model, const EmbeddingState& state,
                       const TripleSet& positives, int k, double margin,
                       const TripleIndex& known, uint64_t seed, uint64_t batch_index,
                       bool parallel);

// Adam over the embedding tables, applied sparsely to rows that received
// gradients. Rows appended between steps start with zero moments.
class Adam {
public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Descends the loss whose gradient is in `grads`. l2 adds weight decay
    // on touched entity rows. Keeps RotatE phases in range and TransH
    // normals unit length.
    void apply(EmbeddingState& state, ModelKind kind, const GradientAccumulator& grads,
               double l2 = 0.0);

    long step_count() const { return step_; }

private:
    void resize_to(const EmbeddingState& state);

    double lr_, beta1_, beta2_, eps_;
    long step_ = 0;
    std::vector<double> m_ent_, v_ent_, m_rel_, v_rel_, m_aux_, v_aux_;
};

} // namespace kgec
