#include "kgec/training.hpp"
#include "kgec/errors.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kgec {

TripleSet negative_sample(const Triple& t, int k, int num_entities,
                          const TripleIndex& known, Rng& rng, long* false_negatives,
                          int max_retries) {
    if (k < 1) throw ContractViolation("negative_sample requires k >= 1");
    if (num_entities < 2) throw ContractViolation("negative_sample requires |E| >= 2");

    std::uniform_int_distribution<int> pick_entity(0, num_entities - 1);
    std::uniform_int_distribution<int> pick_side(0, 1);

    TripleSet out;
    out.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
        Triple cand = t;
        bool accepted = false;
        for (int attempt = 0; attempt < max_retries; ++attempt) {
            cand = t;
            if (pick_side(rng) == 0) cand.head = pick_entity(rng);
            else cand.tail = pick_entity(rng);
            if (cand == t) continue;
            if (!known.count(cand)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // keep the last non-identical corruption even though it is known
            if (cand == t) cand.head = (t.head + 1) % num_entities;
            if (false_negatives) ++(*false_negatives);
        }
        out.push_back(cand);
    }
    return out;
}

void GradientAccumulator::add(std::map<int, std::vector<double>>& table, int id,
                              const std::vector<double>& grad, double scale) {
    auto [it, inserted] = table.try_emplace(id);
    if (inserted) it->second.assign(static_cast<size_t>(dim), 0.0);
    for (int k = 0; k < dim; ++k) it->second[k] += scale * grad[k];
}

void GradientAccumulator::add_triple(const TripleGradients& g, const Triple& t,
                                     double scale) {
    add(entity, t.head, g.head, scale);
    add(relation, t.relation, g.relation, scale);
    add(entity, t.tail, g.tail, scale);
    if (!g.aux.empty()) add(aux, t.relation, g.aux, scale);
}

void GradientAccumulator::merge(const GradientAccumulator& other) {
    for (const auto& [id, g] : other.entity) add(entity, id, g, 1.0);
    for (const auto& [id, g] : other.relation) add(relation, id, g, 1.0);
    for (const auto& [id, g] : other.aux) add(aux, id, g, 1.0);
}

namespace {

// Contribution of one positive and its negatives to loss and gradients.
void positive_term(const ModelConfig& model, const EmbeddingState& state,
                   const Triple& pos, int k, double margin, const TripleIndex& known,
                   uint64_t seed, uint64_t batch_index, size_t pos_index,
                   double inv_pairs, double& loss, GradientAccumulator& acc,
                   long& false_negs) {
    Rng rng = substream(seed, batch_index, pos_index);
    TripleSet negatives =
        negative_sample(pos, k, state.num_entities(), known, rng, &false_negs);

    double s_pos = score(model, state, pos);
    bool pos_grads_ready = false;
    TripleGradients g_pos;
    for (const Triple& neg : negatives) {
        double s_neg = score(model, state, neg);
        double violation = margin - s_pos + s_neg;
        if (violation <= 0) continue;
        loss += violation * inv_pairs;
        if (!pos_grads_ready) {
            g_pos = score_gradients(model, state, pos);
            pos_grads_ready = true;
        }
        TripleGradients g_neg = score_gradients(model, state, neg);
        // d(violation)/d(params) = -grad(pos) + grad(neg)
        acc.add(acc.entity, pos.head, g_pos.head, -inv_pairs);
        acc.add(acc.relation, pos.relation, g_pos.relation, -inv_pairs);
        acc.add(acc.entity, pos.tail, g_pos.tail, -inv_pairs);
        if (!g_pos.aux.empty()) acc.add(acc.aux, pos.relation, g_pos.aux, -inv_pairs);
        acc.add_triple(g_neg, neg, inv_pairs);
    }
}

} // namespace

BatchResult batch_loss(const ModelConfig& model, const EmbeddingState& state,
                       const TripleSet& positives, int k, double margin,
                       const TripleIndex& known, uint64_t seed, uint64_t batch_index,
                       bool parallel) {
    if (positives.empty()) throw ContractViolation("batch_loss requires positives");

    BatchResult result;
    result.grads = GradientAccumulator(state.dim);
    double inv_pairs = 1.0 / (static_cast<double>(positives.size()) * k);

    if (!parallel) {
        for (size_t i = 0; i < positives.size(); ++i)
            positive_term(model, state, positives[i], k, margin, known, seed, batch_index,
                          i, inv_pairs, result.loss, result.grads,
                          result.false_negatives);
        return result;
    }

#ifdef _OPENMP
    int n_threads = omp_get_max_threads();
#else
    int n_threads = 1;
#endif
    std::vector<GradientAccumulator> accs(static_cast<size_t>(n_threads),
                                          GradientAccumulator(state.dim));
    std::vector<double> losses(static_cast<size_t>(n_threads), 0.0);
    std::vector<long> fns(static_cast<size_t>(n_threads), 0);

#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(positives.size()); ++i) {
#ifdef _OPENMP
        int tid = omp_get_thread_num();
#else
        int tid = 0;
#endif
        positive_term(model, state, positives[static_cast<size_t>(i)], k, margin, known,
                      seed, batch_index, static_cast<size_t>(i), inv_pairs, losses[tid],
                      accs[tid], fns[tid]);
    }
    for (int t = 0; t < n_threads; ++t) {
        result.loss += losses[t];
        result.false_negatives += fns[t];
        result.grads.merge(accs[t]);
    }
    return result;
}

void Adam::resize_to(const EmbeddingState& state) {
    m_ent_.resize(state.entity.size(), 0.0);
    v_ent_.resize(state.entity.size(), 0.0);
    m_rel_.resize(state.relation.size(), 0.0);
    v_rel_.resize(state.relation.size(), 0.0);
    m_aux_.resize(state.aux.size(), 0.0);
    v_aux_.resize(state.aux.size(), 0.0);
}

void Adam::apply(EmbeddingState& state, ModelKind kind, const GradientAccumulator& grads,
                 double l2) {
    resize_to(state);
    ++step_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));

    auto update_rows = [&](std::vector<double>& params, std::vector<double>& m,
                           std::vector<double>& v,
                           const std::map<int, std::vector<double>>& rows, bool decay) {
        for (const auto& [id, grad] : rows) {
            size_t off = static_cast<size_t>(id) * state.dim;
            for (int k = 0; k < state.dim; ++k) {
                double g = grad[k];
                if (decay && l2 != 0.0) g += l2 * params[off + k];
                m[off + k] = beta1_ * m[off + k] + (1.0 - beta1_) * g;
                v[off + k] = beta2_ * v[off + k] + (1.0 - beta2_) * g * g;
                double mhat = m[off + k] / bc1;
                double vhat = v[off + k] / bc2;
                params[off + k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    };

    update_rows(state.entity, m_ent_, v_ent_, grads.entity, true);
    update_rows(state.relation, m_rel_, v_rel_, grads.relation, false);
    if (!state.aux.empty()) update_rows(state.aux, m_aux_, v_aux_, grads.aux, false);

    for (const auto& [id, _] : grads.relation) normalize_relation_row(state, id, kind);
    if (kind == ModelKind::TransH) {
        for (const auto& [id, _] : grads.aux) {
            auto w = state.aux_row(id);
            double norm = 0.0;
            for (double x : w) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 0)
                for (double& x : w) x /= norm;
        }
    }
}

} // namespace kgec
