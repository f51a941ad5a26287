#pragma once

#include "kgec/continual.hpp"
#include "kgec/evaluation.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace kgec {

struct ExperimentConfig {
    std::filesystem::path dataset;
    ModelConfig model;
    InitStrategy init;
    TrainConfig train;
    std::vector<double> lr_grid{5e-4, 1e-4, 5e-5};
    std::vector<double> gamma_grid{0.0, 0.1, 0.5};
    std::vector<uint64_t> seeds{11, 22, 33, 44, 55};
    std::vector<int> epoch_budgets{10, 25, 50, 100, 150, 200};
    std::filesystem::path out_dir = "runs";
    int workers = 1;
    bool raw_eval = false;  // raw instead of filtered ranking, sensitivity checks only
    int base_max_epochs = 0; // 0: same as train.max_epochs; the epoch sweep
                             // limits increments only

    void validate() const;
};

// Flat "key = value" config with [section] headers. Unknown keys are
// rejected so manifests stay trustworthy.
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& section,
                       const std::string& key, const std::string& value);
void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& path);

struct RunOutput {
    std::filesystem::path run_dir;
    AlphaMatrix alpha;
    OmegaReport omega;
    double final_valid_mrr = 0.0; // best validation MRR of the last snapshot
    std::vector<TrainLog> logs;   // one per snapshot, index 0 = base
    double total_seconds = 0.0;
};

// Base training plus every increment; after each snapshot j evaluates the
// test sets of snapshots i <= j to fill the alpha matrix, then writes
// alpha/omega/epochs/init/final CSVs plus per-snapshot checkpoints and a
// manifest under out_dir/run_id.
RunOutput run(const ExperimentConfig& cfg, const Dataset& dataset,
              const std::string& run_id);

struct GridCell {
    double lr = 0.0;
    double gamma = 0.0;
    double mean_valid_mrr = 0.0;
    std::vector<double> per_seed;
};

struct GridResult {
    std::vector<GridCell> cells;
    GridCell best;
};

// Every (lr x gamma x seed) run; best cell by mean final validation MRR,
// ties broken by lower lr then lower gamma. Cells run on `workers` threads.
GridResult grid_search(const ExperimentConfig& cfg, const Dataset& dataset);

struct SweepRow {
    int budget = 0;
    double omega_base = 0.0;
    double omega_new = 0.0;
    double mean_epochs_to_convergence = 0.0;
};

// Full increment sequence per epoch budget (early stopping still active).
std::vector<SweepRow> epoch_sweep(const ExperimentConfig& cfg, const Dataset& dataset);

} // namespace kgec
