#pragma once

#include "kgec/init.hpp"
#include "kgec/kg_store.hpp"
#include "kgec/training.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace kgec {

enum class ContinualKind { FT, EWC, EMR };

std::string to_string(ContinualKind kind);
ContinualKind continual_kind_from_string(const std::string& name);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 128;
    int dim = 32;
    int negatives_k = 10;
    int patience = 3;
    int max_epochs = 200;
    double margin = 1.0;
    double l2 = 0.0;
    uint64_t seed = 11;
    ContinualKind strategy = ContinualKind::FT;
    double ewc_lambda = 0.0;
    long emr_memory = -1;      // -1: 10% of the old train set
    int fisher_sample = 1024;
    bool deterministic = false;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0; // 1-based
    double loss = 0.0;
    double valid_mrr = 0.0;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    int epochs_to_convergence = 0; // epoch of the returned (best) checkpoint
    double total_seconds = 0.0;
    double init_seconds = 0.0;
    long init_fallbacks = 0;
    long false_negatives = 0;
};

struct TrainResult {
    EmbeddingState state;
    TrainLog log;
};

// Hook for tests that script the validation metric. Default: filtered MRR
// on the provided validation split.
using ValidationFn = std::function<double(const EmbeddingState&, int epoch)>;

// Diagonal Fisher and anchor for the EWC penalty, covering exactly the
// parameters that existed when the snapshot started.
struct FisherDiag {
    std::vector<double> entity;
    std::vector<double> relation;
    std::vector<double> aux;
};

struct EwcTerm {
    double penalty = 0.0;
    FisherDiag gradient; // lambda * F * (theta - anchor), old parameters only
};

// penalty = (lambda/2) sum_p F_p (theta_p - theta*_p)^2 over the anchor's rows.
EwcTerm ewc_penalty(const EmbeddingState& state, const EmbeddingState& anchor,
                    const FisherDiag& fisher, double lambda);

// Mean of squared per-parameter loss gradients over sampled old triples.
FisherDiag estimate_fisher(const EmbeddingState& state, const ModelConfig& model,
                           const TripleSet& old_triples, long sample_size, int k,
                           double margin, const TripleIndex& known, uint64_t seed);

// Uniform sample without replacement of min(memory, |old_train|) triples.
TripleSet emr_replay(const TripleSet& old_train, long memory, Rng& rng);

// Xavier-init everything, train on snapshot 0 with Adam and early stopping
// on validation MRR; returns the best-validation checkpoint.
TrainResult train_base(const Snapshot& snapshot0, const ModelConfig& model,
                       const TrainConfig& config, ValidationFn validator = nullptr);

// Initialize the delta's new rows, then train on the new triples (plus the
// strategy's extras) updating all embeddings.
TrainResult train_increment(const EmbeddingState& state, const Snapshot& prev,
                            const Snapshot& curr, const InitStrategy& init,
                            const Schema& schema, const ModelConfig& model,
                            const TrainConfig& config, ValidationFn validator = nullptr);

} // namespace kgec
