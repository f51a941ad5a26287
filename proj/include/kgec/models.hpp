#pragma once

#include "kgec/embedding.hpp"
#include "kgec/triples.hpp"

#include <vector>

namespace kgec {

struct ModelConfig {
    ModelKind kind = ModelKind::TransE;
    int norm_p = 1;       // translational models only, 1 or 2
    double margin = 1.0;  // ranking loss margin
};

// Plausibility score, higher is better.
//   TransE:   -||h + r - t||_p
//   TransH:   -||h_perp + r - t_perp||_p, projection onto the relation hyperplane
//   DistMult: sum_k h_k r_k t_k
//   RotatE:   -||h o r - t||_2 over the complex coordinates, |r_k| = 1
double score(const ModelConfig& model, const EmbeddingState& state, const Triple& t);

// Analytic d(score)/d(row) for each participating row. aux is empty unless
// the model uses it. Non-smooth points (p=1 at a zero coordinate, vanishing
// L2 norm) use the subgradient 0 convention.
struct TripleGradients {
    std::vector<double> head;
    std::vector<double> relation;
    std::vector<double> tail;
    std::vector<double> aux;
};
TripleGradients score_gradients(const ModelConfig& model, const EmbeddingState& state,
                                const Triple& t);

// Wraps RotatE phases back to [-pi, pi). No-op for other models.
void normalize_relation_row(EmbeddingState& state, int relation, ModelKind kind);

} // namespace kgec
