#pragma once

#include "kgec/models.hpp"
#include "kgec/triples.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace kgec {

enum class QueryDirection { Tail, Head }; // (h, r, ?) or (?, r, t)

// Filtered rank of the gold entity among all candidates. Candidates other
// than gold that form a triple of `filter` are excluded (pass an empty
// filter for the raw protocol). Ties resolve to the mean rank of the tied
// block, so ranks may be fractional.
double rank_query(const EmbeddingState& state, const ModelConfig& model,
                  const Triple& query, QueryDirection direction,
                  const TripleIndex& filter);

struct SplitMetrics {
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
    long queries = 0;
    long skipped = 0; // queries whose gold entity has no embedding row
};

// Both query directions per test triple. Parallelizes over queries; ranks
// are reduced in query order, so serial and parallel results are identical.
SplitMetrics evaluate_split(const EmbeddingState& state, const ModelConfig& model,
                            const TripleSet& test, const TripleIndex& filter,
                            bool parallel = true);

// alpha[i][j]: metric on test set i after training through snapshot j (j >= i).
struct AlphaMatrix {
    std::string metric_kind = "hits3";
    std::map<std::pair<int, int>, double> values;

    void set(int i, int j, double v) { values[{i, j}] = v; }
    double at(int i, int j) const { return values.at({i, j}); }
    bool has(int i, int j) const { return values.count({i, j}) > 0; }
};

// (1/N) sum_{j=1..N} alpha_{0,j} / alpha_{0,0}
double omega_base(const AlphaMatrix& alpha, int n);
// (1/N) sum_{i=1..N} alpha_{i,i}
double omega_new(const AlphaMatrix& alpha, int n);

struct OmegaReport {
    double omega_base = 0.0;
    double omega_new = 0.0;
    double aggregate_mrr = 0.0;
    double aggregate_hits3 = 0.0;
    std::vector<SplitMetrics> per_snapshot; // final-state metrics per test set
};

// Two-sided Wilcoxon signed-rank p-value, exact null distribution (zero
// differences discarded, tied absolute differences get mean ranks).
double wilcoxon_paired(const std::vector<double>& a, const std::vector<double>& b);

} // namespace kgec
