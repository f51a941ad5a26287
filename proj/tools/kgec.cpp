// Command-line entry point: dataset builds, validation, single runs, grid
// search, epoch-budget sweeps, evaluation of saved checkpoints and report
// printing.

#include "kgec/builder.hpp"
#include "kgec/errors.hpp"
#include "kgec/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

using namespace kgec;

int env_workers() {
    if (const char* env = std::getenv("KGEC_WORKERS")) return std::atoi(env);
    return 1;
}

// Shared experiment flags. Values are applied over whatever --config loaded,
// so explicit flags always win.
struct ExperimentFlags {
    std::string config_path;
    std::string dataset, model, init, strategy;
    double gamma = -1, lr = -1, margin = -1, ewc_lambda = -1;
    int dim = -1, batch = -1, negatives = -1, patience = -1, max_epochs = -1;
    int workers = -1, norm = -1;
    long emr_memory = -2;
    int64_t seed = -1;
    std::string seeds, lrs, gammas, budgets;
    bool deterministic = false;
    std::string out;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file (key = value sections)");
        cmd->add_option("--dataset", dataset, "dataset directory");
        cmd->add_option("--model", model, "transe|transh|distmult|rotate");
        cmd->add_option("--init", init, "random|model|model-head|schema");
        cmd->add_option("--gamma", gamma, "schema perturbation scale");
        cmd->add_option("--strategy", strategy, "ft|ewc|emr");
        cmd->add_option("--lr", lr, "learning rate");
        cmd->add_option("--dim", dim, "embedding dimension");
        cmd->add_option("--batch", batch, "batch size");
        cmd->add_option("--negatives", negatives, "corruptions per positive");
        cmd->add_option("--patience", patience, "early stopping patience");
        cmd->add_option("--max-epochs", max_epochs, "epoch budget");
        cmd->add_option("--margin", margin, "ranking loss margin");
        cmd->add_option("--norm", norm, "translational norm order (1 or 2)");
        cmd->add_option("--ewc-lambda", ewc_lambda, "EWC penalty weight");
        cmd->add_option("--emr-memory", emr_memory, "EMR replay size (-1: 10%)");
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--seeds", seeds, "comma-separated seed list");
        cmd->add_option("--lrs", lrs, "comma-separated learning-rate grid");
        cmd->add_option("--gammas", gammas, "comma-separated gamma grid");
        cmd->add_option("--budgets", budgets, "comma-separated epoch budgets");
        cmd->add_option("--workers", workers, "parallel grid cells");
        cmd->add_flag("--deterministic", deterministic,
                      "bit-reproducible serial execution");
        cmd->add_option("--out", out, "output directory");
    }

    ExperimentConfig build() const {
        ExperimentConfig cfg;
        cfg.workers = env_workers();
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!dataset.empty()) cfg.dataset = dataset;
        if (!model.empty()) cfg.model.kind = model_kind_from_string(model);
        if (!init.empty()) cfg.init.kind = init_kind_from_string(init);
        if (gamma >= 0) cfg.init.gamma = gamma;
        if (!strategy.empty()) cfg.train.strategy = continual_kind_from_string(strategy);
        if (lr > 0) cfg.train.learning_rate = lr;
        if (dim > 0) cfg.train.dim = dim;
        if (batch > 0) cfg.train.batch_size = batch;
        if (negatives > 0) cfg.train.negatives_k = negatives;
        if (patience > 0) cfg.train.patience = patience;
        if (max_epochs > 0) cfg.train.max_epochs = max_epochs;
        if (margin >= 0) cfg.train.margin = margin;
        if (norm > 0) cfg.model.norm_p = norm;
        if (ewc_lambda >= 0) cfg.train.ewc_lambda = ewc_lambda;
        if (emr_memory >= -1) cfg.train.emr_memory = emr_memory;
        if (seed >= 0) cfg.train.seed = static_cast<uint64_t>(seed);
        if (workers > 0) cfg.workers = workers;
        if (deterministic) cfg.train.deterministic = true;
        if (!out.empty()) cfg.out_dir = out;
        auto parse_list = [](const std::string& s, auto& dest, auto conv) {
            if (s.empty()) return;
            dest.clear();
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ',')) dest.push_back(conv(item));
        };
        parse_list(seeds, cfg.seeds, [](const std::string& s) { return std::stoull(s); });
        parse_list(lrs, cfg.lr_grid, [](const std::string& s) { return std::stod(s); });
        parse_list(gammas, cfg.gamma_grid,
                   [](const std::string& s) { return std::stod(s); });
        parse_list(budgets, cfg.epoch_budgets,
                   [](const std::string& s) { return std::stoi(s); });
        return cfg;
    }
};

Dataset load_and_check(const ExperimentConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("missing dataset path (--dataset)");
    return load_dataset(cfg.dataset);
}

void print_metrics(const RunOutput& r) {
    std::cout << "run_dir: " << r.run_dir.string() << "\n"
              << "omega_base: " << r.omega.omega_base << "\n"
              << "omega_new: " << r.omega.omega_new << "\n"
              << "aggregate_mrr: " << r.omega.aggregate_mrr << "\n"
              << "aggregate_hits3: " << r.omega.aggregate_hits3 << "\n"
              << "final_valid_mrr: " << r.final_valid_mrr << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"continual knowledge-graph-embedding toolkit"};
    app.require_subcommand(1);

    // build
    auto* build = app.add_subcommand("build", "build an incremental dataset from a corpus");
    std::string corpus_path, schema_path, build_out;
    BuildSpec spec;
    std::string growth_list;
    bool train_targets = false;
    build->add_option("--corpus", corpus_path, "flat corpus TSV")->required();
    build->add_option("--schema", schema_path, "entity<TAB>class TSV");
    build->add_option("--out", build_out, "output dataset directory")->required();
    build->add_option("--base-count", spec.base_count, "snapshot-0 triple count");
    build->add_option("--base-fraction", spec.base_fraction, "snapshot-0 corpus fraction");
    build->add_option("--snapshots", spec.n_snapshots, "number of increments");
    build->add_option("--growth", growth_list, "comma-separated new-triple targets");
    build->add_option("--growth-pct", spec.growth_pct, "growth per increment");
    build->add_option("--entity-holdout", spec.entity_holdout,
                      "fraction of entities reserved for increments");
    build->add_option("--train-ratio", spec.train_ratio);
    build->add_option("--valid-ratio", spec.valid_ratio);
    build->add_option("--test-ratio", spec.test_ratio);
    build->add_option("--seed", spec.seed);
    build->add_flag("--train-targets", train_targets,
                    "interpret base/growth targets as train-split counts");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a class-clustered synthetic corpus");
    int n_classes = 3, per_class = 20;
    double intra = 0.3, inter = 0.02;
    uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--classes", n_classes);
    synth->add_option("--entities-per-class", per_class);
    synth->add_option("--intra", intra, "intra-class edge density");
    synth->add_option("--inter", inter, "inter-class edge density");
    synth->add_option("--seed", synth_seed);
    synth->add_option("--out", synth_out)->required();

    // validate
    auto* validate = app.add_subcommand("validate", "check a dataset's invariants");
    std::string validate_dataset;
    validate->add_option("--dataset", validate_dataset)->required();

    // train / grid / sweep
    auto* train = app.add_subcommand("train", "single run: base + all increments");
    ExperimentFlags train_flags;
    train_flags.add_to(train);
    std::string run_id = "run";
    train->add_option("--run-id", run_id, "run directory name");

    auto* grid = app.add_subcommand("grid", "grid search over lr x gamma x seed");
    ExperimentFlags grid_flags;
    grid_flags.add_to(grid);

    auto* sweep = app.add_subcommand("sweep", "epoch-budget sweep");
    ExperimentFlags sweep_flags;
    sweep_flags.add_to(sweep);

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset's tests");
    std::string eval_dataset, eval_ckpt;
    bool eval_raw = false;
    eval->add_option("--dataset", eval_dataset)->required();
    eval->add_option("--checkpoint", eval_ckpt)->required();
    eval->add_flag("--raw", eval_raw, "unfiltered ranking protocol");

    // report
    auto* report = app.add_subcommand("report", "print a run directory's final metrics");
    std::string report_dir;
    report->add_option("--run", report_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) {
            Vocabulary ents, rels;
            TripleSet corpus = load_triples(corpus_path, ents, rels);
            Schema schema;
            if (!schema_path.empty()) schema = load_schema(schema_path, ents);
            if (!growth_list.empty()) {
                std::stringstream ss(growth_list);
                std::string item;
                while (std::getline(ss, item, ',')) spec.growth.push_back(std::stol(item));
                spec.n_snapshots = static_cast<int>(spec.growth.size());
            }
            if (train_targets) {
                if (spec.base_count > 0)
                    spec.base_count = std::lround(spec.base_count / spec.train_ratio);
                for (long& g : spec.growth) g = std::lround(g / spec.train_ratio);
            }
            BuildResult result = build_snapshots(corpus, ents, rels, schema, spec, build_out);
            std::cout << "snapshots: " << result.train_counts.size() << "\n";
            for (size_t i = 0; i < result.train_counts.size(); ++i)
                std::cout << "snapshot" << i << ": train=" << result.train_counts[i]
                          << " new_triples=" << result.new_triple_counts[i]
                          << " new_entities=" << result.new_entity_counts[i] << "\n";
        } else if (*synth) {
            SynthKG kg = synth_clustered_kg(n_classes, per_class, intra, inter, synth_seed);
            write_corpus(kg, synth_out);
            std::cout << "triples: " << kg.triples.size()
                      << " entities: " << kg.entity_vocab.size()
                      << " relations: " << kg.relation_vocab.size() << "\n";
        } else if (*validate) {
            Dataset ds = load_dataset(validate_dataset);
            ValidationReport rep = validate_sequence(ds.sequence);
            for (const auto& issue : rep.issues)
                std::cout << "issue: " << issue.detail << "\n";
            std::cout << (rep.ok() ? "ok" : "invalid") << "\n";
            return rep.ok() ? 0 : 1;
        } else if (*train) {
            ExperimentConfig cfg = train_flags.build();
            Dataset ds = load_and_check(cfg);
            RunOutput r = run(cfg, ds, run_id);
            print_metrics(r);
        } else if (*grid) {
            ExperimentConfig cfg = grid_flags.build();
            Dataset ds = load_and_check(cfg);
            GridResult r = grid_search(cfg, ds);
            std::cout << "cells: " << r.cells.size() << "\n"
                      << "best: lr=" << r.best.lr << " gamma=" << r.best.gamma
                      << " mean_valid_mrr=" << r.best.mean_valid_mrr << "\n";
        } else if (*sweep) {
            ExperimentConfig cfg = sweep_flags.build();
            Dataset ds = load_and_check(cfg);
            for (const SweepRow& row : epoch_sweep(cfg, ds))
                std::cout << "budget=" << row.budget << " omega_base=" << row.omega_base
                          << " omega_new=" << row.omega_new
                          << " mean_convergence=" << row.mean_epochs_to_convergence
                          << "\n";
        } else if (*eval) {
            Dataset ds = load_dataset(eval_dataset);
            Checkpoint ckpt = load_checkpoint(eval_ckpt);
            ModelConfig model;
            model.kind = ckpt.kind;
            const Snapshot& last = ds.sequence.snapshots.back();
            TripleIndex filter;
            if (!eval_raw) filter = make_index(last.all_triples());
            SplitMetrics m = evaluate_split(ckpt.state, model, last.test, filter);
            std::cout << "mrr: " << m.mrr << "\nhits1: " << m.hits1
                      << "\nhits3: " << m.hits3 << "\nhits10: " << m.hits10
                      << "\nqueries: " << m.queries << "\nskipped: " << m.skipped << "\n";
        } else if (*report) {
            std::ifstream in(std::filesystem::path(report_dir) / "final_metrics.csv");
            if (!in) throw ConfigError("no final_metrics.csv under " + report_dir);
            std::cout << in.rdbuf();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
