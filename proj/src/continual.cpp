#include "kgec/continual.hpp"
#include "kgec/errors.hpp"
#include "kgec/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace kgec {

std::string to_string(ContinualKind kind) {
    switch (kind) {
    case ContinualKind::FT: return "ft";
    case ContinualKind::EWC: return "ewc";
    case ContinualKind::EMR: return "emr";
    }
    return "?";
}

ContinualKind continual_kind_from_string(const std::string& name) {
    if (name == "ft") return ContinualKind::FT;
    if (name == "ewc") return ContinualKind::EWC;
    if (name == "emr") return ContinualKind::EMR;
    throw ConfigError("unknown continual strategy: " + name);
}

void TrainConfig::validate() const {
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (dim < 1) throw ConfigError("dim must be >= 1");
    if (negatives_k < 1) throw ConfigError("negatives_k must be >= 1");
    if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    if (ewc_lambda < 0) throw ConfigError("ewc_lambda must be non-negative");
}

EwcTerm ewc_penalty(const EmbeddingState& state, const EmbeddingState& anchor,
                    const FisherDiag& fisher, double lambda) {
    if (fisher.entity.size() != anchor.entity.size() ||
        fisher.relation.size() != anchor.relation.size() ||
        fisher.aux.size() != anchor.aux.size())
        throw ContractViolation("fisher and anchor shapes disagree");

    EwcTerm term;
    term.gradient.entity.assign(anchor.entity.size(), 0.0);
    term.gradient.relation.assign(anchor.relation.size(), 0.0);
    term.gradient.aux.assign(anchor.aux.size(), 0.0);
    if (lambda == 0.0) return term;

    auto accumulate = [&](const std::vector<double>& theta,
                          const std::vector<double>& star, const std::vector<double>& f,
                          std::vector<double>& grad) {
        for (size_t p = 0; p < star.size(); ++p) {
            if (f[p] < 0) throw ContractViolation("negative fisher value");
            double diff = theta[p] - star[p];
            term.penalty += 0.5 * lambda * f[p] * diff * diff;
            grad[p] = lambda * f[p] * diff;
        }
    };
    accumulate(state.entity, anchor.entity, fisher.entity, term.gradient.entity);
    accumulate(state.relation, anchor.relation, fisher.relation, term.gradient.relation);
    accumulate(state.aux, anchor.aux, fisher.aux, term.gradient.aux);
    return term;
}

FisherDiag estimate_fisher(const EmbeddingState& state, const ModelConfig& model,
                           const TripleSet& old_triples, long sample_size, int k,
                           double margin, const TripleIndex& known, uint64_t seed) {
    if (sample_size < 1) throw ContractViolation("fisher sample_size must be >= 1");

    FisherDiag fisher;
    fisher.entity.assign(state.entity.size(), 0.0);
    fisher.relation.assign(state.relation.size(), 0.0);
    fisher.aux.assign(state.aux.size(), 0.0);
    if (old_triples.empty()) return fisher;

    // Sample without replacement; exhaustive when sample_size covers the set.
    std::vector<size_t> idx(old_triples.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng = substream(seed, 0xf15e4ull);
    std::shuffle(idx.begin(), idx.end(), rng);
    size_t take = std::min<size_t>(static_cast<size_t>(sample_size), idx.size());

    for (size_t s = 0; s < take; ++s) {
        TripleSet one{old_triples[idx[s]]};
        BatchResult b = batch_loss(model, state, one, k, margin, known, seed,
                                   static_cast<uint64_t>(s), /*parallel=*/false);
        for (const auto& [id, g] : b.grads.entity)
            for (int c = 0; c < state.dim; ++c)
                fisher.entity[static_cast<size_t>(id) * state.dim + c] += g[c] * g[c];
        for (const auto& [id, g] : b.grads.relation)
            for (int c = 0; c < state.dim; ++c)
                fisher.relation[static_cast<size_t>(id) * state.dim + c] += g[c] * g[c];
        for (const auto& [id, g] : b.grads.aux)
            for (int c = 0; c < state.dim; ++c)
                fisher.aux[static_cast<size_t>(id) * state.dim + c] += g[c] * g[c];
    }
    double inv = 1.0 / static_cast<double>(take);
    for (double& x : fisher.entity) x *= inv;
    for (double& x : fisher.relation) x *= inv;
    for (double& x : fisher.aux) x *= inv;
    return fisher;
}

TripleSet emr_replay(const TripleSet& old_train, long memory, Rng& rng) {
    if (memory < 0) throw ContractViolation("emr memory must be >= 0");
    size_t take = std::min<size_t>(static_cast<size_t>(memory), old_train.size());
    if (take == 0) return {};

    // Partial Fisher-Yates over an index vector.
    std::vector<size_t> idx(old_train.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    TripleSet out;
    out.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out.push_back(old_train[idx[i]]);
    }
    return out;
}

namespace {

struct EwcContext {
    EmbeddingState anchor;
    FisherDiag fisher;
    double lambda = 0.0;
};

void add_dense_to_accumulator(const std::vector<double>& grad, int dim,
                              std::map<int, std::vector<double>>& table) {
    int rows = dim == 0 ? 0 : static_cast<int>(grad.size()) / dim;
    for (int id = 0; id < rows; ++id) {
        auto [it, inserted] = table.try_emplace(id);
        if (inserted) it->second.assign(static_cast<size_t>(dim), 0.0);
        for (int c = 0; c < dim; ++c)
            it->second[c] += grad[static_cast<size_t>(id) * dim + c];
    }
}

// Shared training loop: shuffled mini-batches, Adam, early stopping with
// patience on the validation metric, best checkpoint returned.
TrainLog run_training(EmbeddingState& state, const ModelConfig& model,
                      const TrainConfig& cfg, const TripleSet& train,
                      const TripleSet& valid, const TripleIndex& sample_filter,
                      const TripleIndex& eval_filter, const EwcContext* ewc,
                      ValidationFn validator) {
    if (train.empty()) throw ConfigError("empty train split");

    auto wall_start = std::chrono::steady_clock::now();
    TrainLog log;
    Adam optimizer(cfg.learning_rate);

    if (!validator)
        validator = [&](const EmbeddingState& s, int) {
            return evaluate_split(s, model, valid, eval_filter, !cfg.deterministic).mrr;
        };

    EmbeddingState best = state;
    double best_mrr = -1.0;
    int best_epoch = 0;
    uint64_t batch_counter = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        auto epoch_start = std::chrono::steady_clock::now();

        TripleSet shuffled = train;
        Rng shuffle_rng = substream(cfg.seed, 0x548ull, static_cast<uint64_t>(epoch));
        std::shuffle(shuffled.begin(), shuffled.end(), shuffle_rng);

        double epoch_loss = 0.0;
        long n_batches = 0;
        for (size_t off = 0; off < shuffled.size(); off += static_cast<size_t>(cfg.batch_size)) {
            size_t end = std::min(shuffled.size(), off + static_cast<size_t>(cfg.batch_size));
            TripleSet batch(shuffled.begin() + static_cast<long>(off),
                            shuffled.begin() + static_cast<long>(end));
            BatchResult b = batch_loss(model, state, batch, cfg.negatives_k, cfg.margin,
                                       sample_filter, cfg.seed, batch_counter++,
                                       !cfg.deterministic);
            log.false_negatives += b.false_negatives;
            if (ewc && ewc->lambda > 0) {
                EwcTerm term = ewc_penalty(state, ewc->anchor, ewc->fisher, ewc->lambda);
                b.loss += term.penalty;
                add_dense_to_accumulator(term.gradient.entity, state.dim, b.grads.entity);
                add_dense_to_accumulator(term.gradient.relation, state.dim,
                                         b.grads.relation);
                add_dense_to_accumulator(term.gradient.aux, state.dim, b.grads.aux);
            }
            optimizer.apply(state, model.kind, b.grads, cfg.l2);
            epoch_loss += b.loss;
            ++n_batches;
        }
        epoch_loss /= static_cast<double>(n_batches);

        double mrr = validator(state, epoch);
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                       epoch_start)
                             .count();
        log.epochs.push_back({epoch, epoch_loss, mrr, seconds});

        if (mrr > best_mrr) {
            best_mrr = mrr;
            best = state;
            best_epoch = epoch;
        } else if (epoch - best_epoch >= cfg.patience) {
            break;
        }
    }

    state = best;
    log.epochs_to_convergence = best_epoch;
    log.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
            .count();
    return log;
}

int max_id_plus_one(const EntitySet& ids) {
    int n = 0;
    for (int id : ids) n = std::max(n, id + 1);
    return n;
}

} // namespace

TrainResult train_base(const Snapshot& snapshot0, const ModelConfig& model,
                       const TrainConfig& config, ValidationFn validator) {
    config.validate();
    if (snapshot0.train.empty()) throw ConfigError("snapshot 0 has an empty train split");

    Rng init_rng = substream(config.seed, 0xba5eull);
    TrainResult result;
    result.state = make_random_state(max_id_plus_one(snapshot0.entities),
                                     max_id_plus_one(snapshot0.relations), config.dim,
                                     model.kind, init_rng);

    TripleIndex train_index = make_index(snapshot0.train);
    TripleIndex eval_filter = make_index(snapshot0.all_triples());
    result.log = run_training(result.state, model, config, snapshot0.train,
                              snapshot0.valid, train_index, eval_filter, nullptr,
                              std::move(validator));
    return result;
}

TrainResult train_increment(const EmbeddingState& state, const Snapshot& prev,
                            const Snapshot& curr, const InitStrategy& init,
                            const Schema& schema, const ModelConfig& model,
                            const TrainConfig& config, ValidationFn validator) {
    config.validate();
    Delta delta = compute_delta(prev, curr);
    if (delta.empty()) throw ValidationError("increment delta is empty");
    // delta.new_entities is derived from the delta triples, so an entity in
    // curr.entities that no new triple mentions would otherwise slip through
    // with no embedding.
    for (int e : curr.entities)
        if (!prev.entities.count(e) && !delta.new_entities.count(e))
            throw ValidationError("new entity appears in no delta triple");

    TrainResult result;
    result.state = state;

    // Class stats are frozen per snapshot, from the state entering it.
    ClassStats stats = compute_class_stats(result.state, schema, prev.entities);
    InitReport init_report =
        initialize_new_entities(result.state, delta, init, schema, stats, model,
                                prev.entities, mix_seed(config.seed, 0x1417ull));

    TripleSet train = delta.new_train;
    if (config.strategy == ContinualKind::EMR) {
        long memory = config.emr_memory;
        if (memory < 0) memory = static_cast<long>(prev.train.size()) / 10;
        Rng emr_rng = substream(config.seed, 0xe34ull);
        TripleSet replay = emr_replay(prev.train, memory, emr_rng);
        train.insert(train.end(), replay.begin(), replay.end());
    }

    EwcContext ewc;
    const EwcContext* ewc_ptr = nullptr;
    if (config.strategy == ContinualKind::EWC && config.ewc_lambda > 0) {
        TripleIndex old_index = make_index(prev.train);
        // Anchor the parameters that existed before this snapshot.
        ewc.anchor = state;
        ewc.fisher = estimate_fisher(state, model, prev.train, config.fisher_sample,
                                     config.negatives_k, config.margin, old_index,
                                     mix_seed(config.seed, 0xf15eull));
        ewc.lambda = config.ewc_lambda;
        ewc_ptr = &ewc;
    }

    TripleIndex train_index = make_index(curr.train);
    TripleIndex eval_filter = make_index(curr.all_triples());
    result.log = run_training(result.state, model, config, train, delta.new_valid,
                              train_index, eval_filter, ewc_ptr, std::move(validator));
    result.log.init_seconds = init_report.init_seconds;
    result.log.init_fallbacks = init_report.fallback_count;
    return result;
}

} // namespace kgec
