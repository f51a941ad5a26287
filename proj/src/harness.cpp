#include "kgec/harness.hpp"
#include "kgec/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace kgec {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
    std::ostringstream out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out << ',';
        if constexpr (std::is_same_v<T, double>) out << fmt_double(xs[i]);
        else out << xs[i];
    }
    return out.str();
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("bad boolean value: " + v);
}

} // namespace

void ExperimentConfig::validate() const {
    if (lr_grid.empty() || gamma_grid.empty() || seeds.empty())
        throw ConfigError("grids must be non-empty");
    for (size_t i = 0; i < seeds.size(); ++i)
        for (size_t j = i + 1; j < seeds.size(); ++j)
            if (seeds[i] == seeds[j]) throw ConfigError("seeds must be distinct");
    for (int b : epoch_budgets)
        if (b < 1) throw ConfigError("epoch budgets must be >= 1");
    if (!std::is_sorted(epoch_budgets.begin(), epoch_budgets.end()))
        throw ConfigError("epoch budgets must be sorted ascending");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    train.validate();
}

void apply_config_line(ExperimentConfig& cfg, const std::string& section,
                       const std::string& key, const std::string& value) {
    auto full = section + "." + key;
    if (full == "dataset.path") cfg.dataset = value;
    else if (full == "model.kind") cfg.model.kind = model_kind_from_string(value);
    else if (full == "model.norm") cfg.model.norm_p = std::stoi(value);
    else if (full == "model.margin") cfg.model.margin = std::stod(value);
    else if (full == "init.strategy") cfg.init.kind = init_kind_from_string(value);
    else if (full == "init.gamma") cfg.init.gamma = std::stod(value);
    else if (full == "init.fallback")
        cfg.init.fallback = value == "random" ? FallbackKind::Random : FallbackKind::Global;
    else if (full == "train.lr") cfg.train.learning_rate = std::stod(value);
    else if (full == "train.batch") cfg.train.batch_size = std::stoi(value);
    else if (full == "train.dim") cfg.train.dim = std::stoi(value);
    else if (full == "train.negatives") cfg.train.negatives_k = std::stoi(value);
    else if (full == "train.patience") cfg.train.patience = std::stoi(value);
    else if (full == "train.max_epochs") cfg.train.max_epochs = std::stoi(value);
    else if (full == "train.margin") cfg.train.margin = std::stod(value);
    else if (full == "train.l2") cfg.train.l2 = std::stod(value);
    else if (full == "train.seed") cfg.train.seed = std::stoull(value);
    else if (full == "train.strategy")
        cfg.train.strategy = continual_kind_from_string(value);
    else if (full == "train.ewc_lambda") cfg.train.ewc_lambda = std::stod(value);
    else if (full == "train.emr_memory") cfg.train.emr_memory = std::stol(value);
    else if (full == "train.fisher_sample") cfg.train.fisher_sample = std::stoi(value);
    else if (full == "train.deterministic") cfg.train.deterministic = parse_bool(value);
    else if (full == "grid.lrs") {
        cfg.lr_grid.clear();
        for (auto& s : split_commas(value)) cfg.lr_grid.push_back(std::stod(s));
    } else if (full == "grid.gammas") {
        cfg.gamma_grid.clear();
        for (auto& s : split_commas(value)) cfg.gamma_grid.push_back(std::stod(s));
    } else if (full == "grid.seeds") {
        cfg.seeds.clear();
        for (auto& s : split_commas(value)) cfg.seeds.push_back(std::stoull(s));
    } else if (full == "sweep.budgets") {
        cfg.epoch_budgets.clear();
        for (auto& s : split_commas(value)) cfg.epoch_budgets.push_back(std::stoi(s));
    } else if (full == "run.out") cfg.out_dir = value;
    else if (full == "run.workers") cfg.workers = std::stoi(value);
    else if (full == "run.raw_eval") cfg.raw_eval = parse_bool(value);
    else if (full == "run.base_max_epochs") cfg.base_max_epochs = std::stoi(value);
    else throw ConfigError("unknown config key: " + full);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    ExperimentConfig cfg;
    std::string line, section;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        apply_config_line(cfg, section, trim(line.substr(0, eq)),
                          trim(line.substr(eq + 1)));
    }
    return cfg;
}

void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << "[dataset]\npath = " << cfg.dataset.string() << "\n";
    out << "[model]\nkind = " << to_string(cfg.model.kind)
        << "\nnorm = " << cfg.model.norm_p << "\nmargin = " << fmt_double(cfg.model.margin)
        << "\n";
    out << "[init]\nstrategy = " << to_string(cfg.init.kind)
        << "\ngamma = " << fmt_double(cfg.init.gamma) << "\nfallback = "
        << (cfg.init.fallback == FallbackKind::Random ? "random" : "global") << "\n";
    out << "[train]\nlr = " << fmt_double(cfg.train.learning_rate)
        << "\nbatch = " << cfg.train.batch_size << "\ndim = " << cfg.train.dim
        << "\nnegatives = " << cfg.train.negatives_k
        << "\npatience = " << cfg.train.patience
        << "\nmax_epochs = " << cfg.train.max_epochs
        << "\nmargin = " << fmt_double(cfg.train.margin)
        << "\nl2 = " << fmt_double(cfg.train.l2) << "\nseed = " << cfg.train.seed
        << "\nstrategy = " << to_string(cfg.train.strategy)
        << "\newc_lambda = " << fmt_double(cfg.train.ewc_lambda)
        << "\nemr_memory = " << cfg.train.emr_memory
        << "\nfisher_sample = " << cfg.train.fisher_sample
        << "\ndeterministic = " << (cfg.train.deterministic ? 1 : 0) << "\n";
    out << "[grid]\nlrs = " << join(cfg.lr_grid) << "\ngammas = " << join(cfg.gamma_grid)
        << "\nseeds = " << join(cfg.seeds) << "\n";
    out << "[sweep]\nbudgets = " << join(cfg.epoch_budgets) << "\n";
    out << "[run]\nout = " << cfg.out_dir.string() << "\nworkers = " << cfg.workers
        << "\nraw_eval = " << (cfg.raw_eval ? 1 : 0)
        << "\nbase_max_epochs = " << cfg.base_max_epochs << "\n";
}

namespace {

// Per-snapshot own test sets: the test triples each snapshot introduced.
std::vector<TripleSet> delta_test_sets(const SnapshotSequence& seq) {
    std::vector<TripleSet> sets;
    sets.push_back(seq.snapshots.front().test);
    for (int i = 1; i < seq.num_snapshots(); ++i)
        sets.push_back(compute_delta(seq.snapshots[static_cast<size_t>(i - 1)],
                                     seq.snapshots[static_cast<size_t>(i)])
                           .new_test);
    return sets;
}

void write_epoch_csv(std::ofstream& out, int snapshot, const TrainLog& log) {
    for (const auto& rec : log.epochs)
        out << snapshot << ',' << rec.epoch << ',' << fmt_double(rec.loss) << ','
            << fmt_double(rec.valid_mrr) << ',' << fmt_double(rec.seconds) << '\n';
}

double best_valid_mrr(const TrainLog& log) {
    double best = 0.0;
    for (const auto& rec : log.epochs) best = std::max(best, rec.valid_mrr);
    return best;
}

} // namespace

RunOutput run(const ExperimentConfig& cfg, const Dataset& dataset,
              const std::string& run_id) {
    cfg.validate();
    auto wall_start = std::chrono::steady_clock::now();

    const SnapshotSequence& seq = dataset.sequence;
    ValidationReport report = validate_sequence(seq);
    if (!report.ok())
        throw ValidationError("dataset failed validation with " +
                              std::to_string(report.issues.size()) + " issue(s): " +
                              report.issues.front().detail);

    RunOutput out;
    out.run_dir = cfg.out_dir / run_id;
    std::filesystem::create_directories(out.run_dir);
    write_manifest(cfg, out.run_dir / "manifest.txt");

    const int n = seq.num_increments();
    std::vector<TripleSet> test_sets = delta_test_sets(seq);

    std::ofstream epochs_csv(out.run_dir / "epochs.csv");
    epochs_csv << "snapshot,epoch,loss,valid_mrr,seconds\n";
    std::ofstream init_csv(out.run_dir / "init.csv");
    init_csv << "strategy,snapshot,init_seconds,fallback_count\n";

    auto eval_after = [&](const EmbeddingState& state, int j) {
        TripleIndex filter;
        if (!cfg.raw_eval)
            filter = make_index(seq.snapshots[static_cast<size_t>(j)].all_triples());
        for (int i = 0; i <= j; ++i) {
            SplitMetrics m = evaluate_split(state, cfg.model, test_sets[static_cast<size_t>(i)],
                                            filter, !cfg.train.deterministic);
            out.alpha.set(i, j, m.hits3);
        }
    };

    TrainConfig base_cfg = cfg.train;
    if (cfg.base_max_epochs > 0) base_cfg.max_epochs = cfg.base_max_epochs;
    TrainResult current = train_base(seq.snapshots.front(), cfg.model, base_cfg);
    out.logs.push_back(current.log);
    write_epoch_csv(epochs_csv, 0, current.log);
    save_checkpoint(current.state, cfg.model.kind, out.run_dir / "snapshot0.ckpt");
    eval_after(current.state, 0);

    for (int j = 1; j <= n; ++j) {
        TrainResult inc = train_increment(current.state,
                                          seq.snapshots[static_cast<size_t>(j - 1)],
                                          seq.snapshots[static_cast<size_t>(j)], cfg.init,
                                          dataset.schema, cfg.model, cfg.train);
        current.state = std::move(inc.state);
        out.logs.push_back(inc.log);
        write_epoch_csv(epochs_csv, j, inc.log);
        init_csv << to_string(cfg.init.kind) << ',' << j << ','
                 << fmt_double(inc.log.init_seconds) << ',' << inc.log.init_fallbacks
                 << '\n';
        save_checkpoint(current.state, cfg.model.kind,
                        out.run_dir / ("snapshot" + std::to_string(j) + ".ckpt"));
        eval_after(current.state, j);
    }

    // Final-state metrics: micro-average over all queries of all test sets.
    {
        TripleIndex filter;
        if (!cfg.raw_eval)
            filter = make_index(seq.snapshots.back().all_triples());
        SplitMetrics agg = evaluate_split(current.state, cfg.model,
                                          seq.snapshots.back().test, filter,
                                          !cfg.train.deterministic);
        out.omega.aggregate_mrr = agg.mrr;
        out.omega.aggregate_hits3 = agg.hits3;
        for (const auto& ts : test_sets)
            out.omega.per_snapshot.push_back(
                evaluate_split(current.state, cfg.model, ts, filter,
                               !cfg.train.deterministic));
    }
    if (n >= 1) {
        // A hyperparameter cell can land at zero base accuracy; that's a bad
        // run, not a reason to abort a whole grid.
        out.omega.omega_base = out.alpha.at(0, 0) > 0
                                   ? omega_base(out.alpha, n)
                                   : std::numeric_limits<double>::quiet_NaN();
        out.omega.omega_new = omega_new(out.alpha, n);
    } else {
        out.omega.omega_base = 1.0;
        out.omega.omega_new = 0.0;
    }
    out.final_valid_mrr = best_valid_mrr(out.logs.back());
    out.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
            .count();

    std::ofstream alpha_csv(out.run_dir / "alpha.csv");
    alpha_csv << "i,j,metric,value\n";
    for (const auto& [key, value] : out.alpha.values)
        alpha_csv << key.first << ',' << key.second << ',' << out.alpha.metric_kind << ','
                  << fmt_double(value) << '\n';

    std::ofstream omega_csv(out.run_dir / "omega.csv");
    omega_csv << "metric,value\n";
    omega_csv << "omega_base," << fmt_double(out.omega.omega_base) << '\n';
    omega_csv << "omega_new," << fmt_double(out.omega.omega_new) << '\n';

    double init_total = 0.0, epoch_total = 0.0;
    long epoch_count = 0;
    for (const auto& log : out.logs) {
        init_total += log.init_seconds;
        for (const auto& rec : log.epochs) {
            epoch_total += rec.seconds;
            ++epoch_count;
        }
    }
    std::ofstream final_csv(out.run_dir / "final_metrics.csv");
    final_csv << "metric,value\n";
    final_csv << "aggregate_mrr," << fmt_double(out.omega.aggregate_mrr) << '\n';
    final_csv << "aggregate_hits3," << fmt_double(out.omega.aggregate_hits3) << '\n';
    final_csv << "omega_base," << fmt_double(out.omega.omega_base) << '\n';
    final_csv << "omega_new," << fmt_double(out.omega.omega_new) << '\n';
    final_csv << "final_valid_mrr," << fmt_double(out.final_valid_mrr) << '\n';
    final_csv << "init_seconds_total," << fmt_double(init_total) << '\n';
    final_csv << "mean_epoch_seconds,"
              << fmt_double(epoch_count ? epoch_total / epoch_count : 0.0) << '\n';
    final_csv << "total_seconds," << fmt_double(out.total_seconds) << '\n';
    return out;
}

GridResult grid_search(const ExperimentConfig& cfg, const Dataset& dataset) {
    cfg.validate();

    struct Job {
        size_t cell;
        double lr, gamma;
        uint64_t seed;
    };
    std::vector<Job> jobs;
    std::vector<GridCell> cells;
    for (double lr : cfg.lr_grid) {
        for (double gamma : cfg.gamma_grid) {
            GridCell cell;
            cell.lr = lr;
            cell.gamma = gamma;
            cell.per_seed.assign(cfg.seeds.size(), 0.0);
            for (size_t s = 0; s < cfg.seeds.size(); ++s)
                jobs.push_back({cells.size(), lr, gamma, cfg.seeds[s]});
            cells.push_back(std::move(cell));
        }
    }

    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        try {
            while (true) {
                size_t j = next.fetch_add(1);
                if (j >= jobs.size()) return;
                const Job& job = jobs[j];
                ExperimentConfig cell_cfg = cfg;
                cell_cfg.train.learning_rate = job.lr;
                cell_cfg.init.gamma = job.gamma;
                cell_cfg.train.seed = job.seed;
                std::string run_id = "grid/lr" + fmt_double(job.lr) + "_g" +
                                     fmt_double(job.gamma) + "/seed" +
                                     std::to_string(job.seed);
                RunOutput r = run(cell_cfg, dataset, run_id);
                size_t seed_idx = static_cast<size_t>(
                    std::find(cfg.seeds.begin(), cfg.seeds.end(), job.seed) -
                    cfg.seeds.begin());
                cells[job.cell].per_seed[seed_idx] = r.final_valid_mrr;
            }
        } catch (...) {
            // surface the first failure on the caller's thread after join
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min<int>(cfg.workers, static_cast<int>(jobs.size())); ++w)
        pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    for (auto& cell : cells) {
        double sum = 0.0;
        for (double v : cell.per_seed) sum += v;
        cell.mean_valid_mrr = sum / static_cast<double>(cell.per_seed.size());
    }

    GridResult result;
    result.cells = cells;
    std::stable_sort(result.cells.begin(), result.cells.end(),
                     [](const GridCell& a, const GridCell& b) {
                         if (a.mean_valid_mrr != b.mean_valid_mrr)
                             return a.mean_valid_mrr > b.mean_valid_mrr;
                         if (a.lr != b.lr) return a.lr < b.lr;
                         return a.gamma < b.gamma;
                     });
    result.best = result.cells.front();

    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream lb(cfg.out_dir / "grid_leaderboard.csv");
    lb << "lr,gamma,mean_valid_mrr";
    for (uint64_t s : cfg.seeds) lb << ",seed" << s;
    lb << '\n';
    for (const auto& cell : result.cells) {
        lb << fmt_double(cell.lr) << ',' << fmt_double(cell.gamma) << ','
           << fmt_double(cell.mean_valid_mrr);
        for (double v : cell.per_seed) lb << ',' << fmt_double(v);
        lb << '\n';
    }
    return result;
}

std::vector<SweepRow> epoch_sweep(const ExperimentConfig& cfg, const Dataset& dataset) {
    cfg.validate();
    std::vector<SweepRow> rows;
    for (int budget : cfg.epoch_budgets) {
        ExperimentConfig sweep_cfg = cfg;
        sweep_cfg.train.max_epochs = budget;
        if (sweep_cfg.base_max_epochs == 0)
            sweep_cfg.base_max_epochs = cfg.train.max_epochs;
        RunOutput r = run(sweep_cfg, dataset, "sweep/budget" + std::to_string(budget));
        SweepRow row;
        row.budget = budget;
        row.omega_base = r.omega.omega_base;
        row.omega_new = r.omega.omega_new;
        double conv = 0.0;
        for (size_t s = 1; s < r.logs.size(); ++s)
            conv += r.logs[s].epochs_to_convergence;
        row.mean_epochs_to_convergence =
            r.logs.size() > 1 ? conv / static_cast<double>(r.logs.size() - 1) : 0.0;
        rows.push_back(row);
    }
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream csv(cfg.out_dir / "sweep.csv");
    csv << "budget,omega_base,omega_new,mean_epochs_to_convergence\n";
    for (const auto& row : rows)
        csv << row.budget << ',' << fmt_double(row.omega_base) << ','
            << fmt_double(row.omega_new) << ','
            << fmt_double(row.mean_epochs_to_convergence) << '\n';
    return rows;
}

} // namespace kgec
